#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>

#include "hashchain/bytes.hpp"
#include "hashchain/rng.hpp"

namespace hashchain {

struct Pseudonym {
    std::array<std::uint8_t, 16> value{};
    std::uint64_t epoch = 0;

    friend auto operator<=>(const Pseudonym&, const Pseudonym&) = default;

    std::string to_string() const {
        return to_hex(std::span<const std::uint8_t>(value.data(), value.size()));
    }
};

// Issues fresh pseudonyms and privately retains the pseudonym -> vehicle
// mapping. The value is drawn independently of the vehicle id, so a
// pseudonym alone carries no link back to it. Issuance is serialized.
class PseudonymIssuer {
public:
    Pseudonym issue(const std::string& vehicle_id, std::uint64_t epoch, Rng& rng) {
        std::lock_guard lock(mutex_);
        Pseudonym p;
        p.epoch = epoch;
        do {
            for (auto& b : p.value) b = static_cast<std::uint8_t>(rng.next_below(256));
        } while (issued_values_.contains(p.value));
        issued_values_.insert(p.value);
        mapping_[p] = vehicle_id;
        return p;
    }

    // Only the issuer can walk a pseudonym back to the vehicle.
    std::string resolve(const Pseudonym& p) const {
        std::lock_guard lock(mutex_);
        auto it = mapping_.find(p);
        if (it == mapping_.end()) throw std::invalid_argument("PseudonymIssuer: unknown pseudonym");
        return it->second;
    }

    std::size_t issued_count() const {
        std::lock_guard lock(mutex_);
        return mapping_.size();
    }

private:
    mutable std::mutex mutex_;
    std::set<std::array<std::uint8_t, 16>> issued_values_;
    std::map<Pseudonym, std::string> mapping_;
};

}  // namespace hashchain
