#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <thread>

#include "hashchain/broker.hpp"
#include "test_support.hpp"

using namespace hashchain;

TEST_CASE("topics start empty and reject duplicates") {
    Broker broker;
    broker.create_topic("crossings");
    CHECK(broker.end_offset("crossings") == 0);
    CHECK_THROWS(broker.create_topic("crossings"));
    CHECK(broker.publish("crossings", Bytes{1}, 5) == 0);
    CHECK(broker.end_offset("crossings") == 1);
}

TEST_CASE("publish assigns contiguous offsets in order") {
    Broker broker;
    broker.create_topic("t");
    for (std::uint64_t i = 0; i < 100; ++i)
        CHECK(broker.publish("t", Bytes{static_cast<std::uint8_t>(i)}, i) == i);
    const auto records = broker.poll("t", 0);
    REQUIRE(records.size() == 100);
    for (std::uint64_t i = 0; i < 100; ++i) CHECK(records[i].offset == i);
}

TEST_CASE("publish to an unknown topic fails") {
    Broker broker;
    CHECK_THROWS(broker.publish("nope", Bytes{}, 0));
    CHECK_THROWS(broker.poll("nope", 0));
}

TEST_CASE("poll is offset-ordered, idempotent and boundary-safe") {
    Broker broker;
    broker.create_topic("t");
    for (int i = 0; i < 3; ++i) broker.publish("t", Bytes{static_cast<std::uint8_t>(i)}, 0);

    const auto a = broker.poll("t", 0);
    const auto b = broker.poll("t", 0);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].offset == i);
        CHECK(a[i].payload == b[i].payload);
    }
    CHECK(broker.poll("t", 3).empty());
    CHECK(broker.poll("t", 99).empty());
    CHECK(broker.poll("t", 1).size() == 2);
}

TEST_CASE("concurrent producers keep offsets gap-free") {
    Broker broker;
    broker.create_topic("t");
    std::vector<std::thread> producers;
    for (int p = 0; p < 4; ++p) {
        producers.emplace_back([&broker, p] {
            for (int i = 0; i < 25; ++i)
                broker.publish("t", Bytes{static_cast<std::uint8_t>(p)}, 0);
        });
    }
    for (auto& t : producers) t.join();

    const auto records = broker.poll("t", 0);
    REQUIRE(records.size() == 100);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(records[i].offset == i);
}

TEST_CASE("count trigger holds below the threshold and fires exactly at it") {
    Broker broker;
    broker.create_topic("t", BatchTrigger::by_count(10));
    for (int i = 0; i < 9; ++i) {
        broker.publish("t", Bytes{1}, 0);
        CHECK_FALSE(broker.check_flush("t", 0).flushed);
    }
    broker.publish("t", Bytes{1}, 0);
    const FlushDecision d = broker.check_flush("t", 0);
    CHECK(d.flushed);
    CHECK(d.batch.size() == 10);
    CHECK(broker.buffered_count("t") == 0);
}

TEST_CASE("interval trigger fires once the oldest buffered record ages out") {
    Broker broker;
    BatchTrigger trigger;
    trigger.max_interval_ms = 50;
    broker.create_topic("t", trigger);
    broker.publish("t", Bytes{1}, 100);
    CHECK_FALSE(broker.check_flush("t", 120).flushed);
    const FlushDecision d = broker.check_flush("t", 150);
    CHECK(d.flushed);
    CHECK(d.batch.size() == 1);
}

TEST_CASE("byte trigger fires on accumulated payload size") {
    Broker broker;
    BatchTrigger trigger;
    trigger.max_bytes = 10;
    broker.create_topic("t", trigger);
    broker.publish("t", Bytes(4, 0), 0);
    CHECK_FALSE(broker.check_flush("t", 0).flushed);
    broker.publish("t", Bytes(6, 0), 0);
    const FlushDecision d = broker.check_flush("t", 0);
    CHECK(d.flushed);
    CHECK(d.batch.size() == 2);
}

TEST_CASE("check_flush requires a configured trigger") {
    Broker broker;
    broker.create_topic("t");
    broker.publish("t", Bytes{1}, 0);
    CHECK_THROWS(broker.check_flush("t", 0));
}

TEST_CASE("count trigger yields floor(M/N) flushes of exactly N") {
    // frozen clock: the interval trigger can never fire
    Broker broker;
    BatchTrigger trigger;
    trigger.max_count = 10;
    trigger.max_interval_ms = 1000;
    broker.create_topic("t", trigger);

    std::size_t flushes = 0, flushed_records = 0;
    for (int i = 0; i < 95; ++i) {
        broker.publish("t", Bytes{static_cast<std::uint8_t>(i)}, 0);
        const FlushDecision d = broker.check_flush("t", 0);
        if (d.flushed) {
            ++flushes;
            CHECK(d.batch.size() == 10);
            flushed_records += d.batch.size();
        }
    }
    CHECK(flushes == 9);
    CHECK(flushed_records == 90);
    CHECK(broker.buffered_count("t") == 5);
}

TEST_CASE("flushed batches preserve the published multiset") {
    Broker broker;
    broker.create_topic("t", BatchTrigger::by_count(7));
    Rng rng(1);
    std::map<Bytes, int> published, flushed;
    auto account = [&](const FlushDecision& d) {
        for (const Record& r : d.batch) ++flushed[r.payload];
    };
    for (int i = 0; i < 200; ++i) {
        const Bytes payload = testutil::random_bytes(5, rng);
        ++published[payload];
        broker.publish("t", payload, static_cast<std::uint64_t>(i));
        account(broker.check_flush("t", static_cast<std::uint64_t>(i)));
    }
    // drain the tail so no record is lost at run end
    broker.set_trigger("t", BatchTrigger::by_count(1));
    for (;;) {
        const FlushDecision d = broker.check_flush("t", 1000);
        if (!d.flushed) break;
        account(d);
    }
    CHECK(broker.buffered_count("t") == 0);
    CHECK(flushed == published);
}

TEST_CASE("registered builder receives each flushed batch") {
    Broker broker;
    broker.create_topic("t", BatchTrigger::by_count(3));
    std::size_t callback_records = 0;
    broker.register_builder("t", [&](const std::vector<Record>& batch, std::uint64_t) {
        callback_records += batch.size();
    });
    for (int i = 0; i < 9; ++i) {
        broker.publish("t", Bytes{1}, 0);
        broker.check_flush("t", 0);
    }
    CHECK(callback_records == 9);
}

TEST_CASE("record dump round-trips") {
    Broker broker;
    broker.create_topic("t");
    Rng rng(2);
    for (int i = 0; i < 5; ++i)
        broker.publish("t", testutil::random_bytes(8, rng), static_cast<std::uint64_t>(i * 10));
    const auto records = broker.poll("t", 0);
    const std::string text = dump_records(records);
    const auto parsed = parse_record_dump(text);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].offset == records[i].offset);
        CHECK(parsed[i].produced_at_ms == records[i].produced_at_ms);
        CHECK(parsed[i].payload == records[i].payload);
    }
}
