#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "hashchain/kv.hpp"
#include "hashchain/sim.hpp"

namespace hashchain {

/// Delay anchors the calibration reproduces. The fingerprint processing
/// time is pinned and never fitted.
struct CalibrationTargets {
    double baseline_30_ms = 5.9;
    double hashchain_30_ms = 7.36;
    double hashchain_overall_ms = 8.6;
    double fingerprint_processing_ms = 11.0;

    static CalibrationTargets from_kv(const KvFile& kv) {
        CalibrationTargets t;
        t.baseline_30_ms = kv.get_double_or("anchor_baseline_30kmh_ms", t.baseline_30_ms);
        t.hashchain_30_ms = kv.get_double_or("anchor_hashchain_30kmh_ms", t.hashchain_30_ms);
        t.hashchain_overall_ms =
            kv.get_double_or("anchor_hashchain_overall_ms", t.hashchain_overall_ms);
        t.fingerprint_processing_ms =
            kv.get_double_or("fingerprint_processing_ms", t.fingerprint_processing_ms);
        if (t.baseline_30_ms <= 0 || t.hashchain_30_ms <= 0 || t.hashchain_overall_ms <= 0)
            throw std::runtime_error("calibration targets must be positive");
        return t;
    }

    KvFile to_kv() const {
        KvFile kv;
        auto num = [](double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            return std::string(buf);
        };
        kv.set("anchor_baseline_30kmh_ms", num(baseline_30_ms));
        kv.set("anchor_hashchain_30kmh_ms", num(hashchain_30_ms));
        kv.set("anchor_hashchain_overall_ms", num(hashchain_overall_ms));
        kv.set("fingerprint_processing_ms", num(fingerprint_processing_ms));
        return kv;
    }
};

struct AnchorMeans {
    double baseline_30 = 0.0;
    double hashchain_30 = 0.0;
    double hashchain_overall = 0.0;
};

inline AnchorMeans anchor_means(const DelayReport& report) {
    AnchorMeans m;
    double b30_sum = 0, h30_sum = 0, hall_sum = 0;
    std::size_t b30_n = 0, h30_n = 0, hall_n = 0;
    for (const ReportRow& r : report.rows) {
        if (r.samples == 0) continue;
        if (r.scheme == Scheme::hashchain) {
            hall_sum += r.mean_delay_ms;
            ++hall_n;
            if (r.speed_kmh == 30) {
                h30_sum += r.mean_delay_ms;
                ++h30_n;
            }
        } else if (r.speed_kmh == 30) {
            b30_sum += r.mean_delay_ms;
            ++b30_n;
        }
    }
    if (b30_n == 0 || h30_n == 0 || hall_n == 0)
        throw std::runtime_error("anchor_means: report lacks a 30 km/h speed class");
    m.baseline_30 = b30_sum / static_cast<double>(b30_n);
    m.hashchain_30 = h30_sum / static_cast<double>(h30_n);
    m.hashchain_overall = hall_sum / static_cast<double>(hall_n);
    return m;
}

struct CalibrationResult {
    ScenarioConfig fitted;
    AnchorMeans model;
    double residual_baseline_30 = 1.0;   // relative errors
    double residual_hashchain_30 = 1.0;
    double residual_hashchain_overall = 1.0;
    bool converged = false;
    int iterations = 0;

    double max_residual() const {
        return std::max({std::abs(residual_baseline_30), std::abs(residual_hashchain_30),
                         std::abs(residual_hashchain_overall)});
    }
};

/// Fits the three free constants (CA round-trip, contention slope, block
/// build cost) to the anchors by coordinate descent; every anchor is an
/// affine function of the constants, so the loop converges in a handful
/// of sweeps.
inline CalibrationResult calibrate_delays(ScenarioConfig config, const CalibrationTargets& targets,
                                          double tolerance = 0.01, int max_iterations = 40) {
    config.fingerprint_processing_ms = targets.fingerprint_processing_ms;  // pinned
    config.validate();

    CalibrationResult result;
    double prev_slope = -1.0, prev_gap = 0.0;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        const DelayReport report = run_scenario(config);
        const AnchorMeans m = anchor_means(report);
        result.fitted = config;
        result.model = m;
        result.residual_baseline_30 =
            (m.baseline_30 - targets.baseline_30_ms) / targets.baseline_30_ms;
        result.residual_hashchain_30 =
            (m.hashchain_30 - targets.hashchain_30_ms) / targets.hashchain_30_ms;
        result.residual_hashchain_overall =
            (m.hashchain_overall - targets.hashchain_overall_ms) / targets.hashchain_overall_ms;
        result.iterations = iter;
        if (result.max_residual() < tolerance) {
            result.converged = true;
            return result;
        }

        // Levels: the CA round trip moves only the baseline, the block
        // build cost only the hashchain rows.
        config.ca_roundtrip_ms =
            std::max(0.0, config.ca_roundtrip_ms + (targets.baseline_30_ms - m.baseline_30));
        config.block_build_ms =
            std::max(0.0, config.block_build_ms + (targets.hashchain_30_ms - m.hashchain_30));

        // Speed spread: the contention slope controls the gap between the
        // overall hashchain mean and its 30 km/h series (secant step on
        // an affine relation).
        const double gap = m.hashchain_overall - m.hashchain_30;
        const double target_gap = targets.hashchain_overall_ms - targets.hashchain_30_ms;
        double next_slope = config.contention_per_vehicle_ms;
        if (prev_slope >= 0.0 && std::abs(gap - prev_gap) > 1e-12) {
            next_slope = prev_slope + (target_gap - prev_gap) *
                                          (config.contention_per_vehicle_ms - prev_slope) /
                                          (gap - prev_gap);
        } else if (gap > 1e-12) {
            next_slope = config.contention_per_vehicle_ms * target_gap / gap;
        }
        prev_slope = config.contention_per_vehicle_ms;
        prev_gap = gap;
        config.contention_per_vehicle_ms = std::clamp(next_slope, 1e-4, 1.0);
    }
    return result;
}

}  // namespace hashchain
