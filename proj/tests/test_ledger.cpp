#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>

#include "hashchain/ledger.hpp"
#include "test_support.hpp"

using namespace hashchain;

TEST_CASE("dhash equals an independent double SHA-256") {
    // frozen expected values (computed with a reference implementation)
    CHECK(to_hex(dhash(Bytes{})) ==
          "5df6e0e2761359d30a8275058e299fcc0381534545f55cf43e41983f5d4c9456");
    CHECK(to_hex(sha256(Bytes{})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const Bytes abc{'a', 'b', 'c'};
    CHECK(to_hex(sha256(abc)) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(dhash(abc)) ==
          "4f8b42c22dd3729b519ba6f68d2da7cc5b2d606d05daed5ad5128cc03e6c6358");

    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const Bytes data = testutil::random_bytes(rng.next_below(300), rng);
        CHECK(dhash(data) == testutil::oracle_dhash(data));
        CHECK(dhash(data) != testutil::openssl_sha256(data));  // double, not single
    }
}

TEST_CASE("dhash is deterministic") {
    const Bytes data{9, 8, 7};
    CHECK(dhash(data) == dhash(data));
}

TEST_CASE("canonical transaction encoding matches a hand-built byte layout") {
    Transaction tx;
    tx.source_sm = Fingerprint::parse("+0");
    tx.tx_number = 3;
    tx.dest_sm = Fingerprint::parse("-+");
    tx.sealed_vehicle_materials.recipient = "b";
    tx.sealed_vehicle_materials.payload = {0xaa};
    tx.sealed_vehicle_materials.tag.fill(0x11);
    tx.timestamp_ms = 1000;

    // independent assembly: 4-byte BE length prefix per field,
    // integers as 8-byte BE, fingerprint symbols one byte each
    Bytes expected;
    auto put_u32 = [&](Bytes& out, std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    auto put_field = [&](Bytes& out, const Bytes& f) {
        put_u32(out, static_cast<std::uint32_t>(f.size()));
        out.insert(out.end(), f.begin(), f.end());
    };
    auto put_u64_field = [&](Bytes& out, std::uint64_t v) {
        Bytes f;
        for (int s = 56; s >= 0; s -= 8) f.push_back(static_cast<std::uint8_t>(v >> s));
        put_field(out, f);
    };

    put_field(expected, Bytes{0x02, 0x01});  // "+0"
    put_u64_field(expected, 3);
    put_field(expected, Bytes{0x00, 0x02});  // "-+"
    Bytes sealed_bytes;
    put_field(sealed_bytes, Bytes{'b'});
    put_field(sealed_bytes, Bytes{0xaa});
    put_field(sealed_bytes, Bytes(32, 0x11));
    put_field(expected, sealed_bytes);
    put_u64_field(expected, 1000);

    CHECK(tx.encode() == expected);
}

TEST_CASE("canonical encoding is deterministic and field-sensitive") {
    Rng rng(2);
    Transaction tx = testutil::random_transaction(rng);
    Transaction same = tx;
    CHECK(tx.encode() == same.encode());
    same.timestamp_ms += 1;
    CHECK(tx.encode() != same.encode());
}

TEST_CASE("transaction and header encodings round-trip") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Transaction tx = testutil::random_transaction(rng, 8, rng.next_below(100));
        CHECK(Transaction::decode(tx.encode()) == tx);

        BlockHeader h;
        h.version = rng.next_below(10);
        for (auto& b : h.prev_hash) b = static_cast<std::uint8_t>(rng.next_below(256));
        for (auto& b : h.root) b = static_cast<std::uint8_t>(rng.next_below(256));
        h.timestamp_ms = rng.next_below(1u << 30);
        h.source_sm = new_fingerprint(8, rng);
        CHECK(BlockHeader::decode(h.encode()) == h);
    }
}

TEST_CASE("chained_root base case is the dhash of the single transaction") {
    Rng rng(4);
    const Transaction tx = testutil::random_transaction(rng);
    CHECK(chained_root({tx}, {0}) == dhash(tx.encode()));
    CHECK(chained_root({tx}, {0}) == testutil::oracle_dhash(tx.encode()));
}

TEST_CASE("chained_root folds in permutation order") {
    Rng rng(5);
    const Transaction tx0 = testutil::random_transaction(rng, 16, 0);
    const Transaction tx1 = testutil::random_transaction(rng, 16, 1);

    // perm [1,0]: dhash(enc(tx0) ++ dhash(enc(tx1))), via the oracle
    const Digest inner = testutil::oracle_dhash(tx1.encode());
    Bytes outer = tx0.encode();
    outer.insert(outer.end(), inner.begin(), inner.end());
    CHECK(chained_root({tx0, tx1}, {1, 0}) == testutil::oracle_dhash(outer));
}

TEST_CASE("distinct permutations of three transactions give distinct roots") {
    Rng rng(6);
    const std::vector<Transaction> txs = testutil::random_pool(rng, 3);
    std::vector<std::uint32_t> perm{0, 1, 2};
    std::vector<Digest> roots;
    std::sort(perm.begin(), perm.end());
    do {
        roots.push_back(chained_root(txs, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(roots.size() == 6);
    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j) CHECK(roots[i] != roots[j]);
}

TEST_CASE("chained_root rejects bad input") {
    Rng rng(7);
    const std::vector<Transaction> txs = testutil::random_pool(rng, 2);
    CHECK_THROWS_AS(chained_root({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(chained_root(txs, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(chained_root(txs, {0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(chained_root(txs, {0}), std::invalid_argument);
}

TEST_CASE("build_block drains an exact-size pool and verifies") {
    Rng rng(8);
    std::vector<Transaction> pool = testutil::random_pool(rng, 5);
    const Digest prev = zero_digest();
    const Block block = build_block(1, prev, new_fingerprint(16, rng), 777, pool, 5, rng);
    CHECK(pool.empty());
    CHECK(block.transactions.size() == 5);
    CHECK(verify_block(block, prev).valid);
    // stored sequence is the batch sorted by tx_number
    for (std::size_t i = 1; i < block.transactions.size(); ++i)
        CHECK(block.transactions[i - 1].tx_number <= block.transactions[i].tx_number);
}

TEST_CASE("build_block is deterministic in (pool, seed, clock)") {
    Rng setup(9);
    const std::vector<Transaction> pool_master = testutil::random_pool(setup, 8);
    const Fingerprint sm = new_fingerprint(16, setup);

    auto build_once = [&] {
        std::vector<Transaction> pool = pool_master;
        Rng rng(4242);
        return build_block(1, zero_digest(), sm, 1234, pool, 8, rng).encode();
    };
    CHECK(build_once() == build_once());
}

TEST_CASE("build_block refuses an undersized pool") {
    Rng rng(10);
    std::vector<Transaction> pool = testutil::random_pool(rng, 3);
    CHECK_THROWS(build_block(1, zero_digest(), new_fingerprint(16, rng), 1, pool, 5, rng));
    CHECK(pool.size() == 3);
}

TEST_CASE("build/verify round-trips over random pools") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t pool_size = 1 + rng.next_below(8);
        const std::size_t batch = 1 + rng.next_below(pool_size);
        std::vector<Transaction> pool = testutil::random_pool(rng, pool_size, 8);
        const Digest prev = dhash(testutil::random_bytes(8, rng));
        const Block block =
            build_block(1, prev, new_fingerprint(8, rng), trial, pool, batch, rng);
        CHECK(pool.size() == pool_size - batch);
        CHECK(verify_block(block, prev).valid);
        CHECK(chained_root(block.transactions, block.permutation) == block.header.root);
    }
}

TEST_CASE("verify_block flags single-bit transaction tampering as root mismatch") {
    Rng rng(12);
    std::vector<Transaction> pool = testutil::random_pool(rng, 6);
    const Digest prev = zero_digest();
    Block block = build_block(1, prev, new_fingerprint(16, rng), 5, pool, 6, rng);

    for (int trial = 0; trial < 100; ++trial) {
        Block tampered = block;
        Transaction& tx = tampered.transactions[rng.next_below(tampered.transactions.size())];
        switch (rng.next_below(4)) {
            case 0: tx.timestamp_ms ^= 1ull << rng.next_below(40); break;
            case 1: tx.tx_number ^= 1ull << rng.next_below(40); break;
            case 2: {
                Bytes& payload = tx.sealed_vehicle_materials.payload;
                payload[rng.next_below(payload.size())] ^=
                    static_cast<std::uint8_t>(1u << rng.next_below(8));
                break;
            }
            default: tx.sealed_vehicle_materials.tag[rng.next_below(32)] ^= 1; break;
        }
        const VerifyResult r = verify_block(tampered, prev);
        CHECK_FALSE(r.valid);
        CHECK(r.fault == BlockFault::root_mismatch);
    }
}

TEST_CASE("verify_block flags a wrong previous digest as linkage") {
    Rng rng(13);
    std::vector<Transaction> pool = testutil::random_pool(rng, 2);
    const Block block = build_block(1, zero_digest(), new_fingerprint(16, rng), 5, pool, 2, rng);
    Digest wrong{};
    wrong[0] = 1;
    const VerifyResult r = verify_block(block, wrong);
    CHECK_FALSE(r.valid);
    CHECK(r.fault == BlockFault::linkage_mismatch);
}

TEST_CASE("chain append enforces genesis and linkage") {
    Rng rng(14);
    Chain chain;
    CHECK(chain.tip_hash() == zero_digest());

    std::vector<Transaction> pool = testutil::random_pool(rng, 4);
    const Fingerprint sm = new_fingerprint(16, rng);
    const Block genesis = build_block(1, zero_digest(), sm, 1, pool, 2, rng);
    REQUIRE(chain.append(genesis).valid);
    CHECK(chain.size() == 1);
    CHECK_FALSE(chain.validate().has_value());

    // appending the same block twice fails linkage
    const VerifyResult dup = chain.append(genesis);
    CHECK_FALSE(dup.valid);
    CHECK(dup.fault == BlockFault::linkage_mismatch);
    CHECK(chain.size() == 1);

    const Block next = build_block(1, chain.tip_hash(), sm, 2, pool, 2, rng);
    REQUIRE(chain.append(next).valid);
    CHECK(chain.size() == 2);
}

TEST_CASE("validate_chain reports the first tampered index") {
    Rng rng(15);
    Chain chain;
    const Fingerprint sm = new_fingerprint(16, rng);
    for (int i = 0; i < 10; ++i) {
        std::vector<Transaction> pool = testutil::random_pool(rng, 3);
        REQUIRE(chain.append(build_block(1, chain.tip_hash(), sm, i, pool, 3, rng)).valid);
    }
    REQUIRE_FALSE(chain.validate().has_value());

    for (std::size_t bad = 0; bad < chain.size(); ++bad) {
        std::vector<Block> blocks(chain.blocks());
        blocks[bad].transactions[0].timestamp_ms ^= 1;  // header untouched: root now stale
        Bytes framed;
        for (const Block& b : blocks) {
            const Bytes body = b.encode();
            append_u32_be(framed, static_cast<std::uint32_t>(body.size()));
            append_bytes(framed, body);
        }
        const Chain mutated = Chain::decode(framed);
        const auto fault = mutated.validate();
        REQUIRE(fault.has_value());
        CHECK(fault->block_index == bad);
        CHECK(fault->fault == BlockFault::root_mismatch);
    }
}

TEST_CASE("chain persistence round-trips through the framed file format") {
    Rng rng(16);
    Chain chain;
    const Fingerprint sm = new_fingerprint(16, rng);
    for (int i = 0; i < 5; ++i) {
        std::vector<Transaction> pool = testutil::random_pool(rng, 2);
        REQUIRE(chain.append(build_block(1, chain.tip_hash(), sm, i, pool, 2, rng)).valid);
    }
    const auto path = std::filesystem::temp_directory_path() / "hashchain_test_chain.bin";
    chain.save(path.string());
    const Chain loaded = Chain::load(path.string());
    CHECK(loaded.encode() == chain.encode());
    CHECK_FALSE(loaded.validate().has_value());
    std::filesystem::remove(path);

    // an empty file is a valid empty chain
    const Chain empty = Chain::decode(Bytes{});
    CHECK(empty.empty());
    CHECK_FALSE(empty.validate().has_value());
}

TEST_CASE("chain dump prints lowercase hex digests") {
    Rng rng(17);
    Chain chain;
    std::vector<Transaction> pool = testutil::random_pool(rng, 2);
    REQUIRE(chain.append(
                 build_block(1, zero_digest(), new_fingerprint(8, rng), 9, pool, 2, rng))
                .valid);
    const std::string text = dump_chain(chain);
    CHECK(text.find("block 0") != std::string::npos);
    CHECK(text.find("root") != std::string::npos);
    CHECK(text.find_first_of("ABCDEF") == std::string::npos);
}
