#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashchain/bytes.hpp"
#include "hashchain/encoding.hpp"
#include "hashchain/fingerprint.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/rng.hpp"
#include "hashchain/sealed.hpp"

namespace hashchain {

/// One border-crossing record. Canonical field order: source SM
/// fingerprint, batch-relative transaction number, destination SM
/// fingerprint, sealed vehicle materials, timestamp (ms).
struct Transaction {
    Fingerprint source_sm;
    std::uint64_t tx_number = 0;
    Fingerprint dest_sm;
    SealedMaterials sealed_vehicle_materials;
    std::uint64_t timestamp_ms = 0;

    friend bool operator==(const Transaction&, const Transaction&) = default;

    Bytes encode() const {
        FieldWriter w;
        w.field(source_sm.encode());
        w.field_u64(tx_number);
        w.field(dest_sm.encode());
        w.field(sealed_vehicle_materials.encode());
        w.field_u64(timestamp_ms);
        return w.take();
    }

    static Transaction decode(std::span<const std::uint8_t> data) {
        FieldReader r(data);
        Transaction tx;
        tx.source_sm = Fingerprint::decode(r.field());
        tx.tx_number = r.field_u64();
        tx.dest_sm = Fingerprint::decode(r.field());
        tx.sealed_vehicle_materials = SealedMaterials::decode(r.field());
        tx.timestamp_ms = r.field_u64();
        r.expect_exhausted("Transaction");
        return tx;
    }
};

/// Block header. The hashed form follows the creation recipe
/// version # prev_hash # root # timestamp # source_sm, each field
/// length-prefixed.
struct BlockHeader {
    std::uint64_t version = 1;
    Digest prev_hash{};
    Fingerprint source_sm;
    std::uint64_t timestamp_ms = 0;
    Digest root{};

    friend bool operator==(const BlockHeader&, const BlockHeader&) = default;

    Bytes encode() const {
        FieldWriter w;
        w.field_u64(version);
        w.field(std::span<const std::uint8_t>(prev_hash.data(), prev_hash.size()));
        w.field(std::span<const std::uint8_t>(root.data(), root.size()));
        w.field_u64(timestamp_ms);
        w.field(source_sm.encode());
        return w.take();
    }

    static BlockHeader decode(std::span<const std::uint8_t> data) {
        FieldReader r(data);
        BlockHeader h;
        h.version = r.field_u64();
        auto prev = r.field();
        if (prev.size() != h.prev_hash.size())
            throw std::runtime_error("BlockHeader::decode: prev_hash must be 32 bytes");
        std::copy(prev.begin(), prev.end(), h.prev_hash.begin());
        auto root = r.field();
        if (root.size() != h.root.size())
            throw std::runtime_error("BlockHeader::decode: root must be 32 bytes");
        std::copy(root.begin(), root.end(), h.root.begin());
        h.timestamp_ms = r.field_u64();
        h.source_sm = Fingerprint::decode(r.field());
        r.expect_exhausted("BlockHeader");
        return h;
    }

    // Hash that the next block's prev_hash must carry.
    Digest hash() const { return dhash(encode()); }
};

struct Block {
    BlockHeader header;
    std::vector<std::uint32_t> permutation;  // chaining order over `transactions`
    std::vector<Transaction> transactions;

    friend bool operator==(const Block&, const Block&) = default;

    Bytes encode() const {
        FieldWriter w;
        w.field(header.encode());
        Bytes perm;
        for (std::uint32_t idx : permutation) append_u32_be(perm, idx);
        w.field(perm);
        FieldWriter txs;
        for (const Transaction& tx : transactions) txs.field(tx.encode());
        w.field(txs.bytes());
        return w.take();
    }

    static Block decode(std::span<const std::uint8_t> data) {
        FieldReader r(data);
        Block b;
        b.header = BlockHeader::decode(r.field());
        auto perm = r.field();
        if (perm.size() % 4 != 0)
            throw std::runtime_error("Block::decode: permutation field not a multiple of 4 bytes");
        for (std::size_t i = 0; i < perm.size(); i += 4)
            b.permutation.push_back(read_u32_be(perm.subspan(i)));
        FieldReader txs(r.field());
        while (!txs.exhausted()) b.transactions.push_back(Transaction::decode(txs.field()));
        r.expect_exhausted("Block");
        return b;
    }
};

inline bool is_valid_permutation(const std::vector<std::uint32_t>& permutation, std::size_t n) {
    if (permutation.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (std::uint32_t idx : permutation) {
        if (idx >= n || seen[idx]) return false;
        seen[idx] = true;
    }
    return true;
}

/// Integrity root over a batch: hash the first drawn transaction, then
/// fold each further one into the running digest in permutation order.
inline Digest chained_root(const std::vector<Transaction>& txs,
                           const std::vector<std::uint32_t>& permutation) {
    if (txs.empty()) throw std::invalid_argument("chained_root: empty transaction sequence");
    if (!is_valid_permutation(permutation, txs.size()))
        throw std::invalid_argument("chained_root: not a permutation of 0..N-1");
    Digest result = dhash(txs[permutation[0]].encode());
    for (std::size_t j = 1; j < permutation.size(); ++j) {
        Bytes step = txs[permutation[j]].encode();
        append_bytes(step, std::span<const std::uint8_t>(result.data(), result.size()));
        result = dhash(step);
    }
    return result;
}

/// Draws N transactions from the pool without replacement in random
/// order, removes them, and assembles the block. The stored transaction
/// sequence is the drawn batch sorted by tx_number; the recorded
/// permutation maps chaining steps onto that sequence.
inline Block build_block(std::uint64_t version, const Digest& prev_hash,
                         const Fingerprint& source_sm, std::uint64_t now_ms,
                         std::vector<Transaction>& pool, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw std::invalid_argument("build_block: batch size must be positive");
    if (pool.size() < batch_size)
        throw std::runtime_error("build_block: insufficient transactions in pool");

    std::vector<std::size_t> pool_indices(pool.size());
    std::iota(pool_indices.begin(), pool_indices.end(), 0);
    rng.shuffle(pool_indices);
    pool_indices.resize(batch_size);  // draw order = chaining order

    // Batch order: drawn transactions sorted by tx_number (stable over draw order).
    std::vector<std::size_t> batch_order(batch_size);
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::stable_sort(batch_order.begin(), batch_order.end(), [&](std::size_t a, std::size_t b) {
        return pool[pool_indices[a]].tx_number < pool[pool_indices[b]].tx_number;
    });

    Block block;
    block.transactions.reserve(batch_size);
    std::vector<std::uint32_t> draw_to_batch(batch_size);
    for (std::size_t batch_pos = 0; batch_pos < batch_size; ++batch_pos) {
        block.transactions.push_back(pool[pool_indices[batch_order[batch_pos]]]);
        draw_to_batch[batch_order[batch_pos]] = static_cast<std::uint32_t>(batch_pos);
    }
    block.permutation = std::move(draw_to_batch);

    block.header.version = version;
    block.header.prev_hash = prev_hash;
    block.header.source_sm = source_sm;
    block.header.timestamp_ms = now_ms;
    block.header.root = chained_root(block.transactions, block.permutation);

    // Remove the drawn transactions from the pool.
    std::vector<bool> drawn(pool.size(), false);
    for (std::size_t idx : pool_indices) drawn[idx] = true;
    std::vector<Transaction> remaining;
    remaining.reserve(pool.size() - batch_size);
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (!drawn[i]) remaining.push_back(std::move(pool[i]));
    pool = std::move(remaining);

    return block;
}

enum class BlockFault : std::uint8_t {
    none,
    bad_permutation,
    root_mismatch,
    linkage_mismatch,
};

struct VerifyResult {
    bool valid = false;
    BlockFault fault = BlockFault::none;

    static VerifyResult ok() { return {true, BlockFault::none}; }
    static VerifyResult bad(BlockFault f) { return {false, f}; }
};

inline const char* to_string(BlockFault f) {
    switch (f) {
        case BlockFault::none: return "none";
        case BlockFault::bad_permutation: return "bad-permutation";
        case BlockFault::root_mismatch: return "root-mismatch";
        case BlockFault::linkage_mismatch: return "linkage";
    }
    return "unknown";
}

inline VerifyResult verify_block(const Block& block, const Digest& expected_prev) {
    if (block.header.prev_hash != expected_prev)
        return VerifyResult::bad(BlockFault::linkage_mismatch);
    if (block.transactions.empty() ||
        !is_valid_permutation(block.permutation, block.transactions.size()))
        return VerifyResult::bad(BlockFault::bad_permutation);
    if (chained_root(block.transactions, block.permutation) != block.header.root)
        return VerifyResult::bad(BlockFault::root_mismatch);
    return VerifyResult::ok();
}

struct ChainFault {
    std::size_t block_index = 0;
    BlockFault fault = BlockFault::none;
};

class Chain {
public:
    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    const Block& operator[](std::size_t i) const { return blocks_[i]; }

    Digest tip_hash() const {
        return blocks_.empty() ? zero_digest() : blocks_.back().header.hash();
    }

    // Rejects non-verifying blocks atomically; the chain is unchanged on failure.
    VerifyResult append(Block block) {
        const VerifyResult check = verify_block(block, tip_hash());
        if (check.valid) blocks_.push_back(std::move(block));
        return check;
    }

    std::optional<ChainFault> validate() const {
        Digest expected_prev = zero_digest();
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const VerifyResult check = verify_block(blocks_[i], expected_prev);
            if (!check.valid) return ChainFault{i, check.fault};
            expected_prev = blocks_[i].header.hash();
        }
        return std::nullopt;
    }

    Bytes encode() const {
        Bytes out;
        for (const Block& b : blocks_) {
            const Bytes body = b.encode();
            append_u32_be(out, static_cast<std::uint32_t>(body.size()));
            append_bytes(out, body);
        }
        return out;
    }

    // Decodes the append-only persistence format; does not validate.
    // Decode failures name the offending block index.
    static Chain decode(std::span<const std::uint8_t> data) {
        Chain chain;
        std::size_t pos = 0;
        for (std::size_t index = 0; pos < data.size(); ++index) {
            const std::string where = "block " + std::to_string(index);
            if (data.size() - pos < 4)
                throw std::runtime_error("Chain::decode: " + where + ": truncated block length");
            const std::uint32_t len = read_u32_be(data.subspan(pos));
            pos += 4;
            if (data.size() - pos < len)
                throw std::runtime_error("Chain::decode: " + where + ": truncated block body");
            try {
                chain.blocks_.push_back(Block::decode(data.subspan(pos, len)));
            } catch (const std::exception& e) {
                throw std::runtime_error("Chain::decode: " + where + ": " + e.what());
            }
            pos += len;
        }
        return chain;
    }

    void save(const std::string& path) const { write_file(path, encode()); }

    static Chain load(const std::string& path) { return decode(read_file(path)); }

private:
    std::vector<Block> blocks_;
};

inline std::string dump_chain(const Chain& chain) {
    std::ostringstream out;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        out << "block " << i << "\n";
        out << "  version    " << b.header.version << "\n";
        out << "  prev_hash  " << to_hex(b.header.prev_hash) << "\n";
        out << "  source_sm  " << b.header.source_sm.to_string() << "\n";
        out << "  timestamp  " << b.header.timestamp_ms << "\n";
        out << "  root       " << to_hex(b.header.root) << "\n";
        out << "  header     " << to_hex(b.header.hash()) << "\n";
        out << "  perm      ";
        for (std::uint32_t idx : b.permutation) out << " " << idx;
        out << "\n";
        out << "  txs        " << b.transactions.size() << "\n";
        for (const Transaction& tx : b.transactions) {
            out << "    tx " << tx.tx_number << " dest " << tx.dest_sm.to_string() << " ts "
                << tx.timestamp_ms << " sealed_for " << tx.sealed_vehicle_materials.recipient
                << "\n";
        }
    }
    return out.str();
}

}  // namespace hashchain
