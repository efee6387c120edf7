#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>

#include <sodium.h>

#include "hashchain/bytes.hpp"

namespace hashchain {

using Digest = std::array<std::uint8_t, 32>;

inline void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
}

inline Digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    Digest d{};
    crypto_hash_sha256(d.data(), data.data(), data.size());
    return d;
}

// Double SHA-256. Every digest in the ledger (previous-block links and
// batch roots) goes through this and never through single sha256.
inline Digest dhash(std::span<const std::uint8_t> data) {
    const Digest first = sha256(data);
    return sha256(first);
}

inline std::string to_hex(const Digest& d) {
    return to_hex(std::span<const std::uint8_t>(d.data(), d.size()));
}

inline constexpr Digest zero_digest() { return Digest{}; }

}  // namespace hashchain
