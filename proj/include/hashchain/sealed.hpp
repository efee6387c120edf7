#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <sodium.h>

#include "hashchain/bytes.hpp"
#include "hashchain/encoding.hpp"
#include "hashchain/hash.hpp"
#include "hashchain/keys.hpp"
#include "hashchain/rng.hpp"

namespace hashchain {

/// Identity materials sealed to one recipient. Payload is an X25519
/// sealed box (ephemeral public key followed by the authenticated
/// ciphertext); the tag is a digest over recipient and payload so that
/// transport corruption is reported distinctly from a wrong key.
struct SealedMaterials {
    std::string recipient;
    Bytes payload;
    Digest tag{};

    friend bool operator==(const SealedMaterials&, const SealedMaterials&) = default;

    Bytes encode() const {
        FieldWriter w;
        w.field_string(recipient);
        w.field(payload);
        w.field(std::span<const std::uint8_t>(tag.data(), tag.size()));
        return w.take();
    }

    static SealedMaterials decode(std::span<const std::uint8_t> data) {
        FieldReader r(data);
        SealedMaterials s;
        s.recipient = r.field_string();
        s.payload = r.field_bytes();
        auto tag = r.field();
        if (tag.size() != s.tag.size())
            throw std::runtime_error("SealedMaterials::decode: tag must be 32 bytes");
        std::copy(tag.begin(), tag.end(), s.tag.begin());
        r.expect_exhausted("SealedMaterials");
        return s;
    }
};

enum class OpenStatus : std::uint8_t {
    ok,
    authentication_failure,  // opener's secret does not correspond to the recipient
    integrity_failure,       // envelope bytes were mutated in transit
};

struct OpenResult {
    OpenStatus status = OpenStatus::authentication_failure;
    Bytes plaintext;

    bool ok() const { return status == OpenStatus::ok; }
};

namespace detail {

inline Digest seal_tag(const std::string& recipient, const Bytes& payload) {
    Bytes material(recipient.begin(), recipient.end());
    append_bytes(material, payload);
    return sha256(material);
}

inline void sealed_box_nonce(std::uint8_t out[crypto_box_NONCEBYTES],
                             const std::uint8_t* ephemeral_pk, const std::uint8_t* recipient_pk) {
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, crypto_box_NONCEBYTES);
    crypto_generichash_update(&st, ephemeral_pk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_update(&st, recipient_pk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_final(&st, out, crypto_box_NONCEBYTES);
}

}  // namespace detail

// Deterministic given the rng: the ephemeral keypair is derived from it,
// so identical (inputs, seed) produce identical envelopes. The sealed box
// layout matches libsodium's, which the open path relies on.
inline SealedMaterials seal(std::span<const std::uint8_t> materials, const std::string& recipient,
                            const PublicKey& recipient_public, Rng& rng) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_box_SEEDBYTES> eseed;
    for (auto& b : eseed) b = static_cast<std::uint8_t>(rng.next_below(256));
    const BoxKeyPair ephemeral = BoxKeyPair::from_seed(eseed);

    std::uint8_t nonce[crypto_box_NONCEBYTES];
    detail::sealed_box_nonce(nonce, ephemeral.public_key.data(), recipient_public.data());

    SealedMaterials out;
    out.recipient = recipient;
    out.payload.resize(crypto_box_PUBLICKEYBYTES + materials.size() + crypto_box_MACBYTES);
    std::copy(ephemeral.public_key.begin(), ephemeral.public_key.end(), out.payload.begin());
    if (crypto_box_easy(out.payload.data() + crypto_box_PUBLICKEYBYTES, materials.data(),
                        materials.size(), nonce, recipient_public.data(),
                        ephemeral.secret_key.data()) != 0)
        throw std::runtime_error("seal: crypto_box_easy failed");
    out.tag = detail::seal_tag(out.recipient, out.payload);
    return out;
}

inline OpenResult open_sealed(const SealedMaterials& sealed, const BoxKeyPair& my_keys) {
    ensure_sodium();
    OpenResult result;
    if (sealed.payload.size() < crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES ||
        detail::seal_tag(sealed.recipient, sealed.payload) != sealed.tag) {
        result.status = OpenStatus::integrity_failure;
        return result;
    }
    result.plaintext.resize(sealed.payload.size() - crypto_box_PUBLICKEYBYTES -
                            crypto_box_MACBYTES);
    if (crypto_box_seal_open(result.plaintext.data(), sealed.payload.data(),
                             sealed.payload.size(), my_keys.public_key.data(),
                             my_keys.secret_key.data()) != 0) {
        result.plaintext.clear();
        result.status = OpenStatus::authentication_failure;
        return result;
    }
    result.status = OpenStatus::ok;
    return result;
}

}  // namespace hashchain
