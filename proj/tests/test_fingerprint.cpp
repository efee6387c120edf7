#include <catch_amalgamated.hpp>

#include "hashchain/fingerprint.hpp"
#include "hashchain/recognition.hpp"
#include "hashchain/rng.hpp"

using namespace hashchain;

TEST_CASE("new_fingerprint produces ternary symbols of the requested length") {
    Rng rng(7);
    const Fingerprint f = new_fingerprint(4, rng);
    REQUIRE(f.length() == 4);
    for (std::size_t i = 0; i < f.length(); ++i) {
        REQUIRE(f[i] >= -1);
        REQUIRE(f[i] <= 1);
    }
    Rng rng2(7);
    CHECK_THROWS_AS(new_fingerprint(0, rng2), std::invalid_argument);
}

TEST_CASE("new_fingerprint is seed-deterministic") {
    Rng a(12345), b(12345);
    CHECK(new_fingerprint(128, a) == new_fingerprint(128, b));
}

TEST_CASE("distinct seeds give distinct fingerprints") {
    // 1000 seed pairs; a collision over {-1,0,1}^128 would be astronomical
    std::size_t collisions = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        Rng a(2 * s), b(2 * s + 1);
        if (new_fingerprint(128, a) == new_fingerprint(128, b)) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("observe_fingerprint with zero noise is the identity map") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Fingerprint f = new_fingerprint(64, rng);
        CHECK(observe_fingerprint(f, 0.0, rng) == f);
    }
}

TEST_CASE("observe_fingerprint with p=1 changes every position") {
    Rng rng(4);
    const Fingerprint f = new_fingerprint(128, rng);
    const Fingerprint g = observe_fingerprint(f, 1.0, rng);
    for (std::size_t i = 0; i < f.length(); ++i) CHECK(f[i] != g[i]);
}

TEST_CASE("observe_fingerprint flips about p*L positions on average") {
    // Monte Carlo mean over 10,000 draws at p=0.05, L=128: expect ~6.4
    Rng rng(99);
    const Fingerprint f = new_fingerprint(128, rng);
    double total_diffs = 0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const Fingerprint g = observe_fingerprint(f, 0.05, rng);
        for (std::size_t i = 0; i < f.length(); ++i)
            if (f[i] != g[i]) total_diffs += 1;
    }
    const double mean = total_diffs / draws;
    CHECK(mean == Catch::Approx(6.4).margin(0.5));
}

TEST_CASE("observe_fingerprint rejects out-of-range noise") {
    Rng rng(5);
    const Fingerprint f = new_fingerprint(8, rng);
    CHECK_THROWS_AS(observe_fingerprint(f, -0.1, rng), std::invalid_argument);
    CHECK_THROWS_AS(observe_fingerprint(f, 1.1, rng), std::invalid_argument);
}

TEST_CASE("match_fingerprint identity and total mismatch") {
    Rng rng(11);
    const Fingerprint f = new_fingerprint(128, rng);
    const MatchResult same = match_fingerprint(f, f, 0.9);
    CHECK(same.similarity == 1.0);
    CHECK(same.accepted);

    // negation of a zero-free fingerprint disagrees everywhere
    std::vector<std::int8_t> pos(32, 1), neg(32, -1);
    const MatchResult opposite = match_fingerprint(Fingerprint(pos), Fingerprint(neg), 0.9);
    CHECK(opposite.similarity == 0.0);
    CHECK_FALSE(opposite.accepted);
}

TEST_CASE("match_fingerprint accepts identity at any threshold") {
    Rng rng(13);
    for (int i = 0; i < 30; ++i) {
        const Fingerprint f = new_fingerprint(1 + rng.next_below(200), rng);
        const double t = rng.next_unit();
        const MatchResult r = match_fingerprint(f, f, t);
        CHECK(r.similarity == 1.0);
        CHECK(r.accepted);
    }
}

TEST_CASE("match_fingerprint is symmetric") {
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
        const Fingerprint a = new_fingerprint(64, rng);
        const Fingerprint b = observe_fingerprint(a, 0.3, rng);
        CHECK(match_fingerprint(a, b, 0.5).similarity == match_fingerprint(b, a, 0.5).similarity);
    }
}

TEST_CASE("match_fingerprint rejects unequal lengths") {
    Rng rng(19);
    const Fingerprint a = new_fingerprint(8, rng);
    const Fingerprint b = new_fingerprint(9, rng);
    CHECK_THROWS_AS(match_fingerprint(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("textual form round-trips") {
    const Fingerprint f = Fingerprint::parse("+0-+");
    CHECK(f.length() == 4);
    CHECK(f.to_string() == "+0-+");
    Rng rng(23);
    for (int i = 0; i < 20; ++i) {
        const Fingerprint g = new_fingerprint(32, rng);
        CHECK(Fingerprint::parse(g.to_string()) == g);
    }
    CHECK_THROWS_AS(Fingerprint::parse("+x"), std::invalid_argument);
}

TEST_CASE("wire encoding round-trips and uses one byte per symbol") {
    Rng rng(29);
    const Fingerprint f = new_fingerprint(16, rng);
    const Bytes enc = f.encode();
    REQUIRE(enc.size() == 16);
    for (std::uint8_t b : enc) CHECK(b <= 2);
    CHECK(Fingerprint::decode(enc) == f);
}

TEST_CASE("legitimate observations pass comfortably at the default operating point") {
    // L=128, p=0.05, threshold 0.90
    Rng rng(31);
    int accepted = 0;
    const int trials = 2000;
    for (int i = 0; i < trials; ++i) {
        const Fingerprint truth = new_fingerprint(128, rng);
        const Fingerprint observed = observe_fingerprint(truth, 0.05, rng);
        if (match_fingerprint(truth, observed, 0.90).accepted) ++accepted;
    }
    CHECK(static_cast<double>(accepted) / trials > 0.98);
}

TEST_CASE("recognition calibration lands near the target accuracy") {
    Rng rng(37);
    const RecognitionCalibration cal = calibrate_recognition(128, 0.911, 400, 400, rng);
    CHECK(std::abs(cal.stats.accuracy() - 0.911) < 0.03);
    CHECK(cal.flip_prob > 0.0);
    CHECK(cal.threshold > 0.0);
}
