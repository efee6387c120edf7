#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashchain/broker.hpp"
#include "hashchain/fingerprint.hpp"
#include "hashchain/keys.hpp"
#include "hashchain/ledger.hpp"
#include "hashchain/pseudonym.hpp"
#include "hashchain/rng.hpp"
#include "hashchain/sealed.hpp"

namespace hashchain {

/// Periodic vehicle broadcast. 80 bits plain, 720 bits when it carries
/// the fingerprint claim for authentication.
struct Beacon {
    Fingerprint claimed_fingerprint;  // R_v as sent by the vehicle
    double speed_mps = 0.0;
    double heading_deg = 0.0;  // 0 = +x, counter-clockwise
    double x_m = 0.0;
    double y_m = 0.0;
    bool auth_request = false;
    std::uint32_t size_bits = 80;
};

struct RegistrationRecord {
    std::string vehicle_id;
    Fingerprint fingerprint;
};

struct AuthResult {
    enum class Decision : std::uint8_t { legitimate, illegal };
    Decision decision = Decision::illegal;
    double similarity = 0.0;
    double elapsed_ms = 0.0;

    bool legitimate() const { return decision == Decision::legitimate; }
};

struct ExpectedArrival {
    Pseudonym pseudonym;
    std::string vehicle_id;
    Fingerprint fingerprint;
};

struct SyncResult {
    std::size_t appended = 0;
    bool halted = false;
    std::uint64_t halt_offset = 0;
    std::string reason;
};

struct SmConfig {
    std::string id;
    Fingerprint identity;  // R_this
    std::string key_handle;
    // Security-domain rectangle; the border to the neighboring domain is
    // the x_max edge, with a detection strip just inside it.
    double x_min_m = 0.0;
    double x_max_m = 500.0;
    double y_min_m = 0.0;
    double y_max_m = 1000.0;
    double boundary_strip_m = 30.0;
    double match_threshold = 0.90;
    double fingerprint_processing_ms = 11.0;
    std::string crossings_topic = "crossings";
    std::string blocks_topic = "blocks";
    std::uint64_t block_version = 1;
};

// Identity materials sealed into a crossing transaction: pseudonym,
// vehicle identity, and the vehicle's registered fingerprint.
struct VehicleMaterials {
    Pseudonym pseudonym;
    std::string vehicle_id;
    Fingerprint fingerprint;

    Bytes encode() const {
        FieldWriter w;
        w.field(std::span<const std::uint8_t>(pseudonym.value.data(), pseudonym.value.size()));
        w.field_u64(pseudonym.epoch);
        w.field_string(vehicle_id);
        w.field(fingerprint.encode());
        return w.take();
    }

    static VehicleMaterials decode(std::span<const std::uint8_t> data) {
        FieldReader r(data);
        VehicleMaterials m;
        auto value = r.field();
        if (value.size() != m.pseudonym.value.size())
            throw std::runtime_error("VehicleMaterials::decode: pseudonym must be 16 bytes");
        std::copy(value.begin(), value.end(), m.pseudonym.value.begin());
        m.pseudonym.epoch = r.field_u64();
        m.vehicle_id = r.field_string();
        m.fingerprint = Fingerprint::decode(r.field());
        r.expect_exhausted("VehicleMaterials");
        return m;
    }
};

/// Security manager of one domain: authenticates vehicles against CA
/// registrations or ledger-announced arrivals, records crossings as
/// transactions, packages flushed batches into blocks, and replicates
/// every peer's blocks into its local hyperledger.
class SecurityManager {
public:
    struct Peer {
        Fingerprint fingerprint;
        PublicKey public_key{};
    };

    SecurityManager(SmConfig config, BoxKeyPair keys)
        : config_(std::move(config)), keys_(keys) {}

    const SmConfig& config() const { return config_; }
    const Fingerprint& identity() const { return config_.identity; }
    const Chain& chain() const { return chain_; }
    const std::vector<Transaction>& pending_pool() const { return pending_pool_; }

    void add_peer(const std::string& id, Fingerprint fingerprint, const PublicKey& public_key) {
        peers_[id] = Peer{std::move(fingerprint), public_key};
    }

    // CA registration table, loaded once at startup.
    bool register_vehicle(const RegistrationRecord& record) {
        if (registered_.contains(record.fingerprint)) return false;
        registered_.emplace(record.fingerprint, record);
        return true;
    }

    bool is_registered(const Fingerprint& fp) const { return registered_.contains(fp); }

    // Step 1: compare the observed fingerprint against the ground truth
    // for the claimed identity. Ground truth comes from the CA table or,
    // after a cross-border announcement, from the expected-arrival set.
    AuthResult handle_auth_request(const Beacon& beacon, const Fingerprint& observed,
                                   std::uint64_t /*now_ms*/) {
        if (!beacon.auth_request)
            throw std::invalid_argument("handle_auth_request: beacon carries no auth request");
        AuthResult result;
        result.elapsed_ms = config_.fingerprint_processing_ms;
        const Fingerprint* truth = lookup_truth(beacon.claimed_fingerprint);
        if (truth == nullptr) return result;  // unknown identity: illegal, similarity 0
        const MatchResult match =
            match_fingerprint(*truth, observed, config_.match_threshold);
        result.similarity = match.similarity;
        if (match.accepted) {
            result.decision = AuthResult::Decision::legitimate;
            authenticated_.insert(beacon.claimed_fingerprint);
        }
        return result;
    }

    bool is_authenticated(const Fingerprint& fp) const { return authenticated_.contains(fp); }

    // A beacon indicates a border-crossing trajectory when it sits inside
    // the boundary strip and heads into the neighboring domain (+x).
    bool indicates_crossing(const Beacon& beacon) const {
        const bool in_strip = beacon.x_m >= config_.x_max_m - config_.boundary_strip_m &&
                              beacon.x_m <= config_.x_max_m && beacon.y_m >= config_.y_min_m &&
                              beacon.y_m <= config_.y_max_m;
        const double heading_rad = beacon.heading_deg * std::acos(-1.0) / 180.0;
        return in_strip && std::cos(heading_rad) > 0.0;
    }

    // Step 2: form the crossing into a transaction with materials sealed
    // to the destination SM, pool it, and publish it to the crossings
    // topic. Refused unless the vehicle authenticated legitimate here and
    // the beacon shows a crossing trajectory.
    std::optional<Transaction> record_crossing(const Beacon& beacon, const std::string& dest_sm_id,
                                               Broker& broker, std::uint64_t now_ms, Rng& rng) {
        if (!authenticated_.contains(beacon.claimed_fingerprint)) return std::nullopt;
        if (!indicates_crossing(beacon)) return std::nullopt;
        auto peer_it = peers_.find(dest_sm_id);
        if (peer_it == peers_.end())
            throw std::invalid_argument("record_crossing: unknown destination SM: " + dest_sm_id);

        const std::string vehicle_id = lookup_vehicle_id(beacon.claimed_fingerprint);
        VehicleMaterials materials;
        materials.vehicle_id = vehicle_id;
        materials.fingerprint = beacon.claimed_fingerprint;
        materials.pseudonym = issuer_.issue(vehicle_id, next_epoch_[vehicle_id]++, rng);

        Transaction tx;
        tx.source_sm = config_.identity;
        tx.tx_number = batch_position_;  // position within the forming batch
        tx.dest_sm = peer_it->second.fingerprint;
        tx.sealed_vehicle_materials =
            seal(materials.encode(), dest_sm_id, peer_it->second.public_key, rng);
        tx.timestamp_ms = now_ms;

        ++batch_position_;
        pending_pool_.push_back(tx);
        broker.publish(config_.crossings_topic, tx.encode(), now_ms);
        return tx;
    }

    // Step 3, producer side: when the crossings batch trigger fires,
    // package the flushed batch into a block, extend the local chain, and
    // publish the block for replication.
    std::optional<Block> package_and_publish(Broker& broker, std::uint64_t now_ms, Rng& rng) {
        const FlushDecision flush = broker.check_flush(config_.crossings_topic, now_ms);
        if (!flush.flushed) return std::nullopt;
        return package_batch(flush.batch, broker, now_ms, rng);
    }

    // Builds a block from an already-flushed batch (used both by
    // package_and_publish and by broker flush callbacks).
    Block package_batch(const std::vector<Record>& batch, Broker& broker, std::uint64_t now_ms,
                        Rng& rng) {
        if (batch.empty()) throw std::invalid_argument("package_batch: empty batch");
        std::vector<Transaction> pool;
        pool.reserve(batch.size());
        for (const Record& r : batch) pool.push_back(Transaction::decode(r.payload));

        Block block = build_block(config_.block_version, chain_.tip_hash(), config_.identity,
                                  now_ms, pool, batch.size(), rng);
        const VerifyResult appended = chain_.append(block);
        if (!appended.valid)
            throw std::runtime_error(std::string("package_batch: built block rejected: ") +
                                     to_string(appended.fault));

        // The flushed transactions left the pending pool; the next batch
        // numbers from zero again.
        pending_pool_.erase(pending_pool_.begin(),
                            pending_pool_.begin() +
                                std::min<std::ptrdiff_t>(
                                    static_cast<std::ptrdiff_t>(batch.size()),
                                    static_cast<std::ptrdiff_t>(pending_pool_.size())));
        batch_position_ = pending_pool_.size();

        const std::uint64_t offset =
            broker.publish(config_.blocks_topic, block.encode(), now_ms);
        own_block_offsets_.insert(offset);
        return block;
    }

    // Step 3, replica side: poll the blocks topic and verify-append every
    // new block. A block that fails verification or decoding halts sync
    // at its offset and is never appended. `limit_offset` bounds the poll
    // for callers that replay delivery one record at a time.
    SyncResult sync_ledger(const Broker& broker,
                           std::uint64_t limit_offset = std::numeric_limits<std::uint64_t>::max()) {
        SyncResult result;
        if (halted_) {
            result.halted = true;
            result.halt_offset = halt_offset_;
            result.reason = halt_reason_;
            return result;
        }
        for (const Record& record : broker.poll(config_.blocks_topic, blocks_synced_offset_)) {
            if (record.offset >= limit_offset) break;
            if (own_block_offsets_.contains(record.offset)) {
                // producer appended this block when it built it
                blocks_synced_offset_ = record.offset + 1;
                continue;
            }
            Block block;
            try {
                block = Block::decode(record.payload);
            } catch (const std::exception& e) {
                return halt_sync(result, record.offset, std::string("decode: ") + e.what());
            }
            const VerifyResult check = chain_.append(std::move(block));
            if (!check.valid)
                return halt_sync(result, record.offset, to_string(check.fault));
            ++result.appended;
            blocks_synced_offset_ = record.offset + 1;
        }
        return result;
    }

    // Step 4: open sealed materials addressed to this SM in newly synced
    // blocks. Corrupted envelopes are flagged, not stored; materials for
    // other SMs stay opaque.
    const std::map<Fingerprint, ExpectedArrival>& process_arrivals() {
        for (; arrivals_processed_blocks_ < chain_.size(); ++arrivals_processed_blocks_) {
            for (const Transaction& tx : chain_[arrivals_processed_blocks_].transactions) {
                if (tx.dest_sm != config_.identity) continue;
                const OpenResult opened = open_sealed(tx.sealed_vehicle_materials, keys_);
                if (!opened.ok()) {
                    flagged_transactions_.push_back(tx);
                    continue;
                }
                VehicleMaterials materials = VehicleMaterials::decode(opened.plaintext);
                ExpectedArrival arrival{materials.pseudonym, materials.vehicle_id,
                                        materials.fingerprint};
                expected_arrivals_[materials.fingerprint] = std::move(arrival);
            }
        }
        return expected_arrivals_;
    }

    const std::map<Fingerprint, ExpectedArrival>& expected_arrivals() const {
        return expected_arrivals_;
    }
    const std::vector<Transaction>& flagged_transactions() const { return flagged_transactions_; }

    bool sync_halted() const { return halted_; }
    std::uint64_t halt_offset() const { return halt_offset_; }

private:
    SyncResult& halt_sync(SyncResult& result, std::uint64_t offset, std::string reason) {
        halted_ = true;
        halt_offset_ = offset;
        halt_reason_ = std::move(reason);
        result.halted = true;
        result.halt_offset = halt_offset_;
        result.reason = halt_reason_;
        return result;
    }

    const Fingerprint* lookup_truth(const Fingerprint& claimed) const {
        if (auto it = registered_.find(claimed); it != registered_.end())
            return &it->second.fingerprint;
        if (auto it = expected_arrivals_.find(claimed); it != expected_arrivals_.end())
            return &it->second.fingerprint;
        return nullptr;
    }

    std::string lookup_vehicle_id(const Fingerprint& claimed) const {
        if (auto it = registered_.find(claimed); it != registered_.end())
            return it->second.vehicle_id;
        if (auto it = expected_arrivals_.find(claimed); it != expected_arrivals_.end())
            return it->second.vehicle_id;
        throw std::runtime_error("lookup_vehicle_id: fingerprint has no identity record");
    }

    SmConfig config_;
    BoxKeyPair keys_;
    std::map<std::string, Peer> peers_;
    std::map<Fingerprint, RegistrationRecord> registered_;
    std::set<Fingerprint> authenticated_;
    std::map<Fingerprint, ExpectedArrival> expected_arrivals_;
    std::vector<Transaction> flagged_transactions_;
    std::vector<Transaction> pending_pool_;
    std::uint64_t batch_position_ = 0;
    PseudonymIssuer issuer_;
    std::map<std::string, std::uint64_t> next_epoch_;
    Chain chain_;
    std::uint64_t blocks_synced_offset_ = 0;
    std::set<std::uint64_t> own_block_offsets_;
    std::size_t arrivals_processed_blocks_ = 0;
    bool halted_ = false;
    std::uint64_t halt_offset_ = 0;
    std::string halt_reason_;
};

}  // namespace hashchain
