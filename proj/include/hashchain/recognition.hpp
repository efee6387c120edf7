#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hashchain/fingerprint.hpp"
#include "hashchain/rng.hpp"

namespace hashchain {

// Synthetic recognition corpus: legitimate trials observe a registered
// fingerprint through channel noise, impostor trials present an unrelated
// random fingerprint against the same registered truth.

struct RecognitionStats {
    std::size_t legitimate_accepted = 0;
    std::size_t legitimate_total = 0;
    std::size_t impostor_rejected = 0;
    std::size_t impostor_total = 0;

    double accuracy() const {
        const std::size_t total = legitimate_total + impostor_total;
        return total == 0 ? 0.0
                          : static_cast<double>(legitimate_accepted + impostor_rejected) /
                                static_cast<double>(total);
    }
    double legitimate_accept_rate() const {
        return legitimate_total == 0
                   ? 0.0
                   : static_cast<double>(legitimate_accepted) / static_cast<double>(legitimate_total);
    }
    double impostor_accept_rate() const {
        return impostor_total == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(impostor_rejected) / static_cast<double>(impostor_total);
    }
};

inline RecognitionStats evaluate_recognition(std::size_t length, double flip_prob,
                                             double threshold, std::size_t legitimate_trials,
                                             std::size_t impostor_trials, Rng& rng) {
    RecognitionStats stats;
    stats.legitimate_total = legitimate_trials;
    stats.impostor_total = impostor_trials;
    for (std::size_t i = 0; i < legitimate_trials; ++i) {
        const Fingerprint truth = new_fingerprint(length, rng);
        const Fingerprint observed = observe_fingerprint(truth, flip_prob, rng);
        if (match_fingerprint(truth, observed, threshold).accepted) ++stats.legitimate_accepted;
    }
    for (std::size_t i = 0; i < impostor_trials; ++i) {
        const Fingerprint truth = new_fingerprint(length, rng);
        const Fingerprint impostor = new_fingerprint(length, rng);
        if (!match_fingerprint(truth, impostor, threshold).accepted) ++stats.impostor_rejected;
    }
    return stats;
}

struct RecognitionCalibration {
    double flip_prob = 0.0;
    double threshold = 0.0;
    RecognitionStats stats;
};

/// Grid search for the (flip_prob, threshold) pair whose corpus accuracy
/// is closest to the target recognition rate.
inline RecognitionCalibration calibrate_recognition(std::size_t length, double target_accuracy,
                                                    std::size_t legitimate_trials,
                                                    std::size_t impostor_trials, Rng& rng) {
    RecognitionCalibration best;
    double best_gap = 1e9;
    for (double flip_prob = 0.02; flip_prob <= 0.1201; flip_prob += 0.004) {
        for (double threshold = 0.86; threshold <= 0.9601; threshold += 0.005) {
            Rng trial_rng = rng.derive(static_cast<std::uint64_t>(flip_prob * 1e6) * 1000 +
                                       static_cast<std::uint64_t>(threshold * 1e3));
            const RecognitionStats stats = evaluate_recognition(
                length, flip_prob, threshold, legitimate_trials, impostor_trials, trial_rng);
            const double gap = std::abs(stats.accuracy() - target_accuracy);
            if (gap < best_gap) {
                best_gap = gap;
                best = RecognitionCalibration{flip_prob, threshold, stats};
            }
        }
    }
    return best;
}

}  // namespace hashchain
