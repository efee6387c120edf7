#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include <sodium.h>

#include "hashchain/hash.hpp"

namespace hashchain {

using PublicKey = std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES>;
using SecretKey = std::array<std::uint8_t, crypto_box_SECRETKEYBYTES>;

struct BoxKeyPair {
    PublicKey public_key{};
    SecretKey secret_key{};

    static BoxKeyPair from_seed(std::span<const std::uint8_t> seed32) {
        ensure_sodium();
        if (seed32.size() != crypto_box_SEEDBYTES)
            throw std::invalid_argument("BoxKeyPair::from_seed: seed must be 32 bytes");
        BoxKeyPair kp;
        crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed32.data());
        return kp;
    }
};

// Key handles are opaque identifiers; the store derives each handle's
// keypair from (master seed, handle), so a deployment is reproducible
// from its configuration alone.
class KeyStore {
public:
    explicit KeyStore(std::uint64_t master_seed) : master_seed_(master_seed) {}

    const BoxKeyPair& keypair(const std::string& handle) {
        auto it = cache_.find(handle);
        if (it != cache_.end()) return it->second;
        Bytes material;
        append_u64_be(material, master_seed_);
        material.insert(material.end(), handle.begin(), handle.end());
        const Digest seed = sha256(material);
        auto [pos, _] = cache_.emplace(handle, BoxKeyPair::from_seed(seed));
        return pos->second;
    }

    PublicKey public_key(const std::string& handle) { return keypair(handle).public_key; }

private:
    std::uint64_t master_seed_;
    std::map<std::string, BoxKeyPair> cache_;
};

}  // namespace hashchain
