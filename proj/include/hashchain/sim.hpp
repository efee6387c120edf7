#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashchain/broker.hpp"
#include "hashchain/keys.hpp"
#include "hashchain/kv.hpp"
#include "hashchain/rng.hpp"
#include "hashchain/sm.hpp"

namespace hashchain {

enum class Scheme : std::uint8_t { hashchain, baseline };

inline const char* to_string(Scheme s) {
    return s == Scheme::hashchain ? "hashchain" : "baseline";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "hashchain") return Scheme::hashchain;
    if (s == "baseline") return Scheme::baseline;
    throw std::runtime_error("unknown scheme: " + s);
}

/// Two security domains in a square area, vehicles spawned at four route
/// vertices in SD-A and driving east across the border into SD-B.
struct ScenarioConfig {
    double area_m = 1000.0;
    std::uint64_t sm_count = 2;
    double sim_duration_s = 360.0;
    std::vector<std::uint64_t> densities = {20, 40, 60, 80, 100, 120};
    std::vector<double> speeds_mps = {8.33, 13.89, 19.44, 27.78};
    double data_rate_mbps = 6.0;
    std::uint64_t plain_beacon_bits = 80;
    std::uint64_t hashchain_beacon_bits = 720;
    std::uint64_t batch_count = 10;
    double batch_interval_ms = 2.0;
    double fingerprint_processing_ms = 11.0;  // full first-join identification
    double arrival_match_ms = 0.5;            // pre-trained matcher at the destination
    double step4_open_ms = 0.2;
    double block_build_ms = 0.60916;  // calibrated (see `calibrate`)
    std::uint64_t block_header_bits = 720;
    std::uint64_t per_tx_bits = 720;
    double propagation_ms = 0.002;
    double mac_base_ms = 0.25;
    double contention_per_vehicle_ms = 0.0145926;  // calibrated
    double speed_factor_per_kmh = 0.015;
    double ca_roundtrip_ms = 3.54125;  // calibrated
    std::uint64_t fingerprint_length = 128;
    double match_threshold = 0.90;
    double observe_flip_prob = 0.02;
    double boundary_strip_m = 30.0;
    double spawn_window_s = 240.0;
    double beacon_interval_ms = 100.0;
    std::uint64_t seed = 42;
    // optional pinned SM identities (textual fingerprint form); generated
    // from the cell seed when empty
    std::string sm_a_fingerprint;
    std::string sm_b_fingerprint;
    std::string sm_a_key_handle = "key-sm-a";
    std::string sm_b_key_handle = "key-sm-b";

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw std::runtime_error(std::string("config: ") + name +
                                                     " must be positive");
        };
        positive(area_m, "area_m");
        positive(sim_duration_s, "sim_duration_s");
        positive(data_rate_mbps, "data_rate_mbps");
        positive(static_cast<double>(plain_beacon_bits), "plain_beacon_bits");
        positive(static_cast<double>(hashchain_beacon_bits), "hashchain_beacon_bits");
        positive(static_cast<double>(batch_count), "batch_count");
        positive(batch_interval_ms, "batch_interval_ms");
        positive(fingerprint_processing_ms, "fingerprint_processing_ms");
        positive(arrival_match_ms, "arrival_match_ms");
        positive(step4_open_ms, "step4_open_ms");
        positive(static_cast<double>(fingerprint_length), "fingerprint_length");
        positive(boundary_strip_m, "boundary_strip_m");
        positive(spawn_window_s, "spawn_window_s");
        positive(beacon_interval_ms, "beacon_interval_ms");
        if (block_build_ms < 0 || ca_roundtrip_ms < 0 || contention_per_vehicle_ms < 0 ||
            mac_base_ms < 0 || propagation_ms < 0 || speed_factor_per_kmh < 0)
            throw std::runtime_error("config: delay constants must be nonnegative");
        if (sm_count != 2) throw std::runtime_error("config: scenario engine models sm_count = 2");
        if (densities.empty()) throw std::runtime_error("config: densities must be nonempty");
        for (std::size_t i = 0; i < densities.size(); ++i) {
            if (densities[i] == 0) throw std::runtime_error("config: densities must be positive");
            if (i > 0 && densities[i] != densities[i - 1] + 20)
                throw std::runtime_error("config: densities must step by 20");
        }
        if (speeds_mps.empty()) throw std::runtime_error("config: speeds_mps must be nonempty");
        for (double v : speeds_mps) positive(v, "speeds_mps");
        if (match_threshold < 0 || match_threshold > 1)
            throw std::runtime_error("config: match_threshold outside [0,1]");
        if (observe_flip_prob < 0 || observe_flip_prob > 1)
            throw std::runtime_error("config: observe_flip_prob outside [0,1]");
        if (spawn_window_s > sim_duration_s)
            throw std::runtime_error("config: spawn_window_s exceeds sim_duration_s");
        for (const std::string* fp : {&sm_a_fingerprint, &sm_b_fingerprint}) {
            if (fp->empty()) continue;
            if (Fingerprint::parse(*fp).length() != fingerprint_length)
                throw std::runtime_error("config: SM fingerprint length mismatch");
        }
        if (sm_a_key_handle.empty() || sm_b_key_handle.empty())
            throw std::runtime_error("config: SM key handles must be nonempty");
    }

    static ScenarioConfig from_kv(const KvFile& kv) {
        ScenarioConfig c;
        for (const auto& [key, _] : kv.entries()) {
            if (!known_key(key) && !key.starts_with("residual_") && !key.starts_with("anchor_") &&
                !key.starts_with("calibration_"))
                throw std::runtime_error("config: unknown key: " + key);
        }
        c.area_m = kv.get_double_or("area_m", c.area_m);
        c.sm_count = kv.get_u64_or("sm_count", c.sm_count);
        c.sim_duration_s = kv.get_double_or("sim_duration_s", c.sim_duration_s);
        if (kv.has("densities")) c.densities = kv.get_u64s("densities");
        if (kv.has("speeds_mps")) c.speeds_mps = kv.get_doubles("speeds_mps");
        c.data_rate_mbps = kv.get_double_or("data_rate_mbps", c.data_rate_mbps);
        c.plain_beacon_bits = kv.get_u64_or("plain_beacon_bits", c.plain_beacon_bits);
        c.hashchain_beacon_bits = kv.get_u64_or("hashchain_beacon_bits", c.hashchain_beacon_bits);
        c.batch_count = kv.get_u64_or("batch_count", c.batch_count);
        c.batch_interval_ms = kv.get_double_or("batch_interval_ms", c.batch_interval_ms);
        c.fingerprint_processing_ms =
            kv.get_double_or("fingerprint_processing_ms", c.fingerprint_processing_ms);
        c.arrival_match_ms = kv.get_double_or("arrival_match_ms", c.arrival_match_ms);
        c.step4_open_ms = kv.get_double_or("step4_open_ms", c.step4_open_ms);
        c.block_build_ms = kv.get_double_or("block_build_ms", c.block_build_ms);
        c.block_header_bits = kv.get_u64_or("block_header_bits", c.block_header_bits);
        c.per_tx_bits = kv.get_u64_or("per_tx_bits", c.per_tx_bits);
        c.propagation_ms = kv.get_double_or("propagation_ms", c.propagation_ms);
        c.mac_base_ms = kv.get_double_or("mac_base_ms", c.mac_base_ms);
        c.contention_per_vehicle_ms =
            kv.get_double_or("contention_per_vehicle_ms", c.contention_per_vehicle_ms);
        c.speed_factor_per_kmh = kv.get_double_or("speed_factor_per_kmh", c.speed_factor_per_kmh);
        c.ca_roundtrip_ms = kv.get_double_or("ca_roundtrip_ms", c.ca_roundtrip_ms);
        c.fingerprint_length = kv.get_u64_or("fingerprint_length", c.fingerprint_length);
        c.match_threshold = kv.get_double_or("match_threshold", c.match_threshold);
        c.observe_flip_prob = kv.get_double_or("observe_flip_prob", c.observe_flip_prob);
        c.boundary_strip_m = kv.get_double_or("boundary_strip_m", c.boundary_strip_m);
        c.spawn_window_s = kv.get_double_or("spawn_window_s", c.spawn_window_s);
        c.beacon_interval_ms = kv.get_double_or("beacon_interval_ms", c.beacon_interval_ms);
        c.seed = kv.get_u64_or("seed", c.seed);
        c.sm_a_fingerprint = kv.get_or("sm_a_fingerprint", c.sm_a_fingerprint);
        c.sm_b_fingerprint = kv.get_or("sm_b_fingerprint", c.sm_b_fingerprint);
        c.sm_a_key_handle = kv.get_or("sm_a_key_handle", c.sm_a_key_handle);
        c.sm_b_key_handle = kv.get_or("sm_b_key_handle", c.sm_b_key_handle);
        c.validate();
        return c;
    }

    KvFile to_kv() const {
        KvFile kv;
        auto num = [](double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            return std::string(buf);
        };
        kv.set("area_m", num(area_m));
        kv.set("sm_count", std::to_string(sm_count));
        kv.set("sim_duration_s", num(sim_duration_s));
        std::string ds;
        for (std::size_t i = 0; i < densities.size(); ++i)
            ds += (i ? "," : "") + std::to_string(densities[i]);
        kv.set("densities", ds);
        std::string vs;
        for (std::size_t i = 0; i < speeds_mps.size(); ++i) vs += (i ? "," : "") + num(speeds_mps[i]);
        kv.set("speeds_mps", vs);
        kv.set("data_rate_mbps", num(data_rate_mbps));
        kv.set("plain_beacon_bits", std::to_string(plain_beacon_bits));
        kv.set("hashchain_beacon_bits", std::to_string(hashchain_beacon_bits));
        kv.set("batch_count", std::to_string(batch_count));
        kv.set("batch_interval_ms", num(batch_interval_ms));
        kv.set("fingerprint_processing_ms", num(fingerprint_processing_ms));
        kv.set("arrival_match_ms", num(arrival_match_ms));
        kv.set("step4_open_ms", num(step4_open_ms));
        kv.set("block_build_ms", num(block_build_ms));
        kv.set("block_header_bits", std::to_string(block_header_bits));
        kv.set("per_tx_bits", std::to_string(per_tx_bits));
        kv.set("propagation_ms", num(propagation_ms));
        kv.set("mac_base_ms", num(mac_base_ms));
        kv.set("contention_per_vehicle_ms", num(contention_per_vehicle_ms));
        kv.set("speed_factor_per_kmh", num(speed_factor_per_kmh));
        kv.set("ca_roundtrip_ms", num(ca_roundtrip_ms));
        kv.set("fingerprint_length", std::to_string(fingerprint_length));
        kv.set("match_threshold", num(match_threshold));
        kv.set("observe_flip_prob", num(observe_flip_prob));
        kv.set("boundary_strip_m", num(boundary_strip_m));
        kv.set("spawn_window_s", num(spawn_window_s));
        kv.set("beacon_interval_ms", num(beacon_interval_ms));
        kv.set("seed", std::to_string(seed));
        if (!sm_a_fingerprint.empty()) kv.set("sm_a_fingerprint", sm_a_fingerprint);
        if (!sm_b_fingerprint.empty()) kv.set("sm_b_fingerprint", sm_b_fingerprint);
        kv.set("sm_a_key_handle", sm_a_key_handle);
        kv.set("sm_b_key_handle", sm_b_key_handle);
        return kv;
    }

private:
    static bool known_key(const std::string& key) {
        static const char* keys[] = {
            "area_m", "sm_count", "sim_duration_s", "densities", "speeds_mps", "data_rate_mbps",
            "plain_beacon_bits", "hashchain_beacon_bits", "batch_count", "batch_interval_ms",
            "fingerprint_processing_ms", "arrival_match_ms", "step4_open_ms", "block_build_ms",
            "block_header_bits", "per_tx_bits", "propagation_ms", "mac_base_ms",
            "contention_per_vehicle_ms", "speed_factor_per_kmh", "ca_roundtrip_ms",
            "fingerprint_length", "match_threshold", "observe_flip_prob", "boundary_strip_m",
            "spawn_window_s", "beacon_interval_ms", "seed", "sm_a_fingerprint",
            "sm_b_fingerprint", "sm_a_key_handle", "sm_b_key_handle"};
        for (const char* k : keys)
            if (key == k) return true;
        return false;
    }
};

inline int speed_kmh_of(double speed_mps) {
    return static_cast<int>(std::llround(speed_mps * 3.6));
}

/// Transmission delay in ms: serialization at the data rate plus the
/// channel overhead (propagation and MAC access) supplied by the caller.
inline double tx_delay_ms(std::uint64_t bits, double rate_bps, double channel_overhead_ms = 0.0) {
    if (bits == 0 || rate_bps <= 0.0)
        throw std::invalid_argument("tx_delay_ms: bits and rate must be positive");
    if (channel_overhead_ms < 0.0)
        throw std::invalid_argument("tx_delay_ms: channel overhead must be nonnegative");
    return static_cast<double>(bits) / rate_bps * 1000.0 + channel_overhead_ms;
}

// Channel overhead model: propagation plus a MAC access term affine in
// vehicle density, degraded multiplicatively at higher speeds
// (Doppler-driven retransmissions).
struct DelayModel {
    double rate_bps;
    double propagation_ms;
    double mac_base_ms;
    double contention_per_vehicle_ms;
    double speed_factor_per_kmh;

    explicit DelayModel(const ScenarioConfig& c)
        : rate_bps(c.data_rate_mbps * 1e6),
          propagation_ms(c.propagation_ms),
          mac_base_ms(c.mac_base_ms),
          contention_per_vehicle_ms(c.contention_per_vehicle_ms),
          speed_factor_per_kmh(c.speed_factor_per_kmh) {}

    double channel_overhead_ms(double density, double speed_kmh) const {
        const double mac = mac_base_ms + contention_per_vehicle_ms * density;
        return propagation_ms + mac * (1.0 + speed_factor_per_kmh * speed_kmh);
    }

    double transmit_ms(std::uint64_t bits, double density, double speed_kmh) const {
        return tx_delay_ms(bits, rate_bps, channel_overhead_ms(density, speed_kmh));
    }
};

struct ReportRow {
    Scheme scheme = Scheme::hashchain;
    int speed_kmh = 0;
    std::uint64_t density = 0;
    double mean_delay_ms = 0.0;
    std::size_t samples = 0;
    std::size_t dropped = 0;
};

struct CellStats {
    ReportRow row;
    std::size_t spawned = 0;
    std::size_t failed = 0;     // never authenticated / refused
    std::size_t in_flight = 0;  // pipeline incomplete at sim end
    std::vector<double> delays_ms;
};

struct DelayReport {
    std::vector<ReportRow> rows;

    std::string to_csv() const {
        std::string out = "scheme,speed_kmh,density,mean_delay_ms,samples,dropped\n";
        char buf[160];
        for (const ReportRow& r : rows) {
            std::snprintf(buf, sizeof buf, "%s,%d,%llu,%.3f,%zu,%zu\n", to_string(r.scheme),
                          r.speed_kmh, static_cast<unsigned long long>(r.density), r.mean_delay_ms,
                          r.samples, r.dropped);
            out += buf;
        }
        return out;
    }

    const ReportRow* find(Scheme scheme, int speed_kmh, std::uint64_t density) const {
        for (const ReportRow& r : rows)
            if (r.scheme == scheme && r.speed_kmh == speed_kmh && r.density == density) return &r;
        return nullptr;
    }
};

namespace detail {

class EventQueue {
public:
    void schedule(double at_ms, std::function<void()> fn) {
        queue_.push(Event{at_ms, next_seq_++, std::move(fn)});
    }

    // Runs events in (time, insertion) order up to the horizon.
    void run_until(double horizon_ms) {
        while (!queue_.empty() && queue_.top().at_ms <= horizon_ms) {
            Event ev = queue_.top();
            queue_.pop();
            ev.fn();
        }
    }

private:
    struct Event {
        double at_ms;
        std::uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Event& other) const {
            if (at_ms != other.at_ms) return at_ms > other.at_ms;
            return seq > other.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t next_seq_ = 0;
};

struct SimVehicle {
    std::string id;
    Fingerprint fingerprint;
    double spawn_ms = 0.0;
    double cross_ms = 0.0;
    double spawn_y_m = 0.0;
    bool authenticated = false;
    bool crossed = false;
    double border_beacon_rx_ms = -1.0;
    double materials_ready_ms = -1.0;
    bool accept_pending = false;
    bool accepted = false;
    double accept_ms = 0.0;
};

}  // namespace detail

// Optional side products of a cell run, for ledger/broker inspection.
struct CellArtifacts {
    Chain source_chain;
    Chain replica_chain;
    std::vector<Record> blocks_log;
};

/// One (scheme, speed, density) cell, executed as a seeded single-thread
/// discrete-event run of the full pipeline (real SMs, broker, ledger).
/// Reported delay spans the border crossing to destination acceptance.
inline CellStats run_cell(const ScenarioConfig& config, Scheme scheme, double speed_mps,
                          std::uint64_t density, std::uint64_t cell_seed,
                          CellArtifacts* artifacts = nullptr) {
    config.validate();
    const double duration_ms = config.sim_duration_s * 1000.0;
    const double border_x = config.area_m / 2.0;
    const double speed_kmh = speed_mps * 3.6;
    const DelayModel model(config);
    const std::uint64_t auth_beacon_bits =
        scheme == Scheme::hashchain ? config.hashchain_beacon_bits : config.plain_beacon_bits;

    Rng rng_spawn(Rng::mix(cell_seed, 1));
    Rng rng_identity(Rng::mix(cell_seed, 2));
    Rng rng_sm(Rng::mix(cell_seed, 3));
    Rng rng_noise(Rng::mix(cell_seed, 4));

    // Two security domains split at the border; SM-A owns the west half.
    KeyStore keys(cell_seed);
    SmConfig config_a;
    config_a.id = "sm-a";
    config_a.identity = config.sm_a_fingerprint.empty()
                            ? new_fingerprint(config.fingerprint_length, rng_identity)
                            : Fingerprint::parse(config.sm_a_fingerprint);
    config_a.key_handle = config.sm_a_key_handle;
    config_a.x_min_m = 0.0;
    config_a.x_max_m = border_x;
    config_a.y_min_m = 0.0;
    config_a.y_max_m = config.area_m;
    config_a.boundary_strip_m = config.boundary_strip_m;
    config_a.match_threshold = config.match_threshold;
    config_a.fingerprint_processing_ms = config.fingerprint_processing_ms;

    SmConfig config_b = config_a;
    config_b.id = "sm-b";
    config_b.identity = config.sm_b_fingerprint.empty()
                            ? new_fingerprint(config.fingerprint_length, rng_identity)
                            : Fingerprint::parse(config.sm_b_fingerprint);
    config_b.key_handle = config.sm_b_key_handle;
    config_b.x_min_m = border_x;
    config_b.x_max_m = config.area_m;

    SecurityManager sm_a(config_a, keys.keypair(config_a.key_handle));
    SecurityManager sm_b(config_b, keys.keypair(config_b.key_handle));
    sm_a.add_peer("sm-b", config_b.identity, keys.public_key(config_b.key_handle));
    sm_b.add_peer("sm-a", config_a.identity, keys.public_key(config_a.key_handle));

    Broker broker;
    BatchTrigger trigger;
    trigger.max_count = config.batch_count;
    trigger.max_interval_ms = static_cast<std::uint64_t>(config.batch_interval_ms);
    broker.create_topic("crossings", trigger);
    broker.create_topic("blocks");

    // Vehicles spawn staggered over the spawn window at four route
    // vertices on the west edge, registered with their home CA (SD-A).
    std::vector<detail::SimVehicle> vehicles(density);
    const double spawn_step_ms = config.spawn_window_s * 1000.0 / static_cast<double>(density);
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        detail::SimVehicle& v = vehicles[i];
        v.id = "veh-" + std::to_string(i);
        v.fingerprint = new_fingerprint(config.fingerprint_length, rng_identity);
        v.spawn_ms = (static_cast<double>(i) + rng_spawn.next_unit()) * spawn_step_ms;
        v.spawn_y_m = 200.0 + 200.0 * static_cast<double>(i % 4);
        v.cross_ms = v.spawn_ms + border_x / speed_mps * 1000.0;
        sm_a.register_vehicle({v.id, v.fingerprint});
    }

    detail::EventQueue events;
    CellStats stats;
    stats.row.scheme = scheme;
    stats.row.speed_kmh = speed_kmh_of(speed_mps);
    stats.row.density = density;
    stats.spawned = vehicles.size();

    auto make_beacon = [&](const detail::SimVehicle& v, double x_m) {
        Beacon b;
        b.claimed_fingerprint = v.fingerprint;
        b.speed_mps = speed_mps;
        b.heading_deg = 0.0;  // eastbound
        b.x_m = x_m;
        b.y_m = v.spawn_y_m;
        b.auth_request = true;
        b.size_bits = static_cast<std::uint32_t>(auth_beacon_bits);
        return b;
    };

    std::function<void(std::size_t)> try_schedule_accept = [&](std::size_t vi) {
        detail::SimVehicle& v = vehicles[vi];
        if (v.accept_pending || v.accepted) return;
        if (v.border_beacon_rx_ms < 0.0 || v.materials_ready_ms < 0.0) return;
        v.accept_pending = true;
        const double start = std::max(v.border_beacon_rx_ms, v.materials_ready_ms);
        events.schedule(start, [&, vi, start] {
            detail::SimVehicle& veh = vehicles[vi];
            const Fingerprint observed =
                observe_fingerprint(veh.fingerprint, config.observe_flip_prob, rng_noise);
            const AuthResult res =
                sm_b.handle_auth_request(make_beacon(veh, border_x), observed,
                                         static_cast<std::uint64_t>(start));
            if (res.legitimate()) {
                veh.accepted = true;
                veh.accept_ms = start + config.arrival_match_ms;
            } else {
                // noisy observation rejected; vehicle re-beacons
                veh.accept_pending = false;
                veh.border_beacon_rx_ms = start + config.beacon_interval_ms;
                try_schedule_accept(vi);
            }
        });
    };

    // Step 3 pipeline: flush checks feed block building, replication and
    // Step 4 opening at the destination.
    std::function<void(double)> schedule_flush_check = [&](double at_ms) {
        events.schedule(at_ms, [&, at_ms] {
            for (;;) {
                FlushDecision flush =
                    broker.check_flush("crossings", static_cast<std::uint64_t>(at_ms));
                if (!flush.flushed) break;
                const double built_at = at_ms + config.block_build_ms;
                events.schedule(built_at, [&, batch = std::move(flush.batch), built_at] {
                    const Block block = sm_a.package_batch(
                        batch, broker, static_cast<std::uint64_t>(built_at), rng_sm);
                    const std::uint64_t block_offset = broker.end_offset("blocks") - 1;
                    const std::uint64_t block_bits =
                        config.block_header_bits +
                        config.per_tx_bits * static_cast<std::uint64_t>(block.transactions.size());
                    const double arrive_at =
                        built_at + model.transmit_ms(block_bits, static_cast<double>(density),
                                                     speed_kmh);
                    events.schedule(arrive_at, [&, arrive_at, block_offset] {
                        sm_b.sync_ledger(broker, block_offset + 1);
                        sm_b.process_arrivals();
                        const auto& expected = sm_b.expected_arrivals();
                        for (std::size_t vi = 0; vi < vehicles.size(); ++vi) {
                            detail::SimVehicle& v = vehicles[vi];
                            if (v.materials_ready_ms >= 0.0 || !v.crossed) continue;
                            if (!expected.contains(v.fingerprint)) continue;
                            v.materials_ready_ms = arrive_at + config.step4_open_ms;
                            try_schedule_accept(vi);
                        }
                    });
                });
            }
        });
    };

    // Step 1 at the home SM: periodic auth attempts until legitimate.
    std::function<void(std::size_t, double)> schedule_auth_attempt = [&](std::size_t vi,
                                                                         double at_ms) {
        const double decided_at = at_ms +
                                  model.transmit_ms(auth_beacon_bits, static_cast<double>(density),
                                                    speed_kmh) +
                                  config.fingerprint_processing_ms;
        events.schedule(decided_at, [&, vi, decided_at] {
            detail::SimVehicle& v = vehicles[vi];
            if (v.authenticated) return;
            const Fingerprint observed =
                observe_fingerprint(v.fingerprint, config.observe_flip_prob, rng_noise);
            Beacon beacon = make_beacon(v, 0.0);
            const AuthResult res =
                sm_a.handle_auth_request(beacon, observed, static_cast<std::uint64_t>(decided_at));
            if (res.legitimate())
                v.authenticated = true;
            else
                schedule_auth_attempt(vi, decided_at + config.beacon_interval_ms);
        });
    };

    for (std::size_t vi = 0; vi < vehicles.size(); ++vi) {
        events.schedule(vehicles[vi].spawn_ms, [&, vi] {
            schedule_auth_attempt(vi, vehicles[vi].spawn_ms);
        });
        events.schedule(vehicles[vi].cross_ms, [&, vi] {
            detail::SimVehicle& v = vehicles[vi];
            if (!v.authenticated) return;  // counted failed at sim end
            v.crossed = true;
            const double rx =
                v.cross_ms +
                model.transmit_ms(auth_beacon_bits, static_cast<double>(density), speed_kmh);
            if (scheme == Scheme::baseline) {
                // third-party path: destination defers to the CAs
                v.accepted = true;
                v.accept_ms = rx + config.arrival_match_ms + config.ca_roundtrip_ms;
                return;
            }
            events.schedule(rx, [&, vi, rx] {
                detail::SimVehicle& veh = vehicles[vi];
                veh.border_beacon_rx_ms = rx;
                const Beacon beacon = make_beacon(veh, border_x);
                sm_a.record_crossing(beacon, "sm-b", broker,
                                     static_cast<std::uint64_t>(rx), rng_sm);
                schedule_flush_check(rx);
                schedule_flush_check(rx + config.batch_interval_ms);
                try_schedule_accept(vi);
            });
        });
    }

    events.run_until(duration_ms);

    if (artifacts != nullptr) {
        artifacts->source_chain = sm_a.chain();
        artifacts->replica_chain = sm_b.chain();
        artifacts->blocks_log = broker.poll("blocks", 0);
    }

    for (const detail::SimVehicle& v : vehicles) {
        if (v.accepted && v.accept_ms <= duration_ms) {
            stats.delays_ms.push_back(v.accept_ms - v.cross_ms);
        } else if (!v.authenticated || (!v.crossed && v.cross_ms <= duration_ms)) {
            ++stats.failed;
        } else {
            ++stats.in_flight;
        }
    }
    stats.row.samples = stats.delays_ms.size();
    stats.row.dropped = stats.spawned - stats.row.samples;
    if (!stats.delays_ms.empty()) {
        double sum = 0.0;
        for (double d : stats.delays_ms) sum += d;
        stats.row.mean_delay_ms = sum / static_cast<double>(stats.delays_ms.size());
    }
    return stats;
}

inline std::uint64_t cell_seed_of(const ScenarioConfig& config, Scheme scheme,
                                  std::size_t speed_idx, std::size_t density_idx) {
    std::uint64_t tag = (scheme == Scheme::hashchain ? 0x100u : 0x200u);
    tag = tag * 1000 + speed_idx * 100 + density_idx;
    return Rng::mix(config.seed, tag);
}

/// Full sweep: every (scheme, speed, density) cell, hashchain rows first.
inline DelayReport run_scenario(const ScenarioConfig& config) {
    config.validate();
    DelayReport report;
    for (Scheme scheme : {Scheme::hashchain, Scheme::baseline}) {
        for (std::size_t si = 0; si < config.speeds_mps.size(); ++si) {
            for (std::size_t di = 0; di < config.densities.size(); ++di) {
                const CellStats stats =
                    run_cell(config, scheme, config.speeds_mps[si], config.densities[di],
                             cell_seed_of(config, scheme, si, di));
                report.rows.push_back(stats.row);
            }
        }
    }
    return report;
}

inline DelayReport run_baseline(const ScenarioConfig& config) {
    config.validate();
    DelayReport report;
    for (std::size_t si = 0; si < config.speeds_mps.size(); ++si) {
        for (std::size_t di = 0; di < config.densities.size(); ++di) {
            const CellStats stats =
                run_cell(config, Scheme::baseline, config.speeds_mps[si], config.densities[di],
                         cell_seed_of(config, Scheme::baseline, si, di));
            report.rows.push_back(stats.row);
        }
    }
    return report;
}

}  // namespace hashchain
