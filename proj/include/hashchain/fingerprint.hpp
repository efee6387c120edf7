#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hashchain/bytes.hpp"
#include "hashchain/rng.hpp"

namespace hashchain {

/// Ternary radio-fingerprint feature vector. Each symbol is -1, 0 or +1;
/// the textual form is one character per symbol over {-,0,+}, e.g. "+0-+".
class Fingerprint {
public:
    static constexpr std::size_t default_length = 128;

    Fingerprint() = default;

    explicit Fingerprint(std::vector<std::int8_t> symbols) : symbols_(std::move(symbols)) {
        for (std::int8_t s : symbols_)
            if (s != -1 && s != 0 && s != 1)
                throw std::invalid_argument("Fingerprint: symbol outside {-1,0,+1}");
    }

    std::size_t length() const { return symbols_.size(); }
    const std::vector<std::int8_t>& symbols() const { return symbols_; }
    std::int8_t operator[](std::size_t i) const { return symbols_[i]; }

    friend auto operator<=>(const Fingerprint&, const Fingerprint&) = default;

    // One byte per symbol on the wire: 0x00 = -1, 0x01 = 0, 0x02 = +1.
    Bytes encode() const {
        Bytes out;
        out.reserve(symbols_.size());
        for (std::int8_t s : symbols_) out.push_back(static_cast<std::uint8_t>(s + 1));
        return out;
    }

    static Fingerprint decode(std::span<const std::uint8_t> data) {
        std::vector<std::int8_t> symbols;
        symbols.reserve(data.size());
        for (std::uint8_t b : data) {
            if (b > 2) throw std::runtime_error("Fingerprint::decode: byte outside {0,1,2}");
            symbols.push_back(static_cast<std::int8_t>(static_cast<int>(b) - 1));
        }
        return Fingerprint(std::move(symbols));
    }

    std::string to_string() const {
        std::string s;
        s.reserve(symbols_.size());
        for (std::int8_t v : symbols_) s.push_back(v < 0 ? '-' : (v == 0 ? '0' : '+'));
        return s;
    }

    static Fingerprint parse(std::string_view text) {
        std::vector<std::int8_t> symbols;
        symbols.reserve(text.size());
        for (char c : text) {
            switch (c) {
                case '-': symbols.push_back(-1); break;
                case '0': symbols.push_back(0); break;
                case '+': symbols.push_back(1); break;
                default: throw std::invalid_argument("Fingerprint::parse: character outside {+,0,-}");
            }
        }
        return Fingerprint(std::move(symbols));
    }

private:
    std::vector<std::int8_t> symbols_;
};

inline Fingerprint new_fingerprint(std::size_t length, Rng& rng) {
    if (length == 0) throw std::invalid_argument("new_fingerprint: length must be positive");
    std::vector<std::int8_t> symbols(length);
    for (auto& s : symbols) s = static_cast<std::int8_t>(rng.next_below(3)) - 1;
    return Fingerprint(std::move(symbols));
}

/// Noisy over-the-air observation: each symbol is independently replaced
/// by one of the two other symbols with probability flip_prob.
inline Fingerprint observe_fingerprint(const Fingerprint& truth, double flip_prob, Rng& rng) {
    if (flip_prob < 0.0 || flip_prob > 1.0)
        throw std::invalid_argument("observe_fingerprint: flip_prob outside [0,1]");
    std::vector<std::int8_t> symbols(truth.symbols());
    for (auto& s : symbols) {
        if (!rng.next_bool(flip_prob)) continue;
        // pick uniformly among the two symbols different from s
        std::int8_t candidates[2];
        int n = 0;
        for (std::int8_t c : {std::int8_t{-1}, std::int8_t{0}, std::int8_t{1}})
            if (c != s) candidates[n++] = c;
        s = candidates[rng.next_below(2)];
    }
    return Fingerprint(std::move(symbols));
}

struct MatchResult {
    bool accepted = false;
    double similarity = 0.0;
};

/// Positional-agreement similarity with threshold acceptance.
inline MatchResult match_fingerprint(const Fingerprint& claimed, const Fingerprint& observed,
                                     double threshold) {
    if (claimed.length() != observed.length())
        throw std::invalid_argument("match_fingerprint: fingerprint lengths differ");
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("match_fingerprint: threshold outside [0,1]");
    if (claimed.length() == 0)
        throw std::invalid_argument("match_fingerprint: empty fingerprints");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < claimed.length(); ++i)
        if (claimed[i] == observed[i]) ++agree;
    MatchResult r;
    r.similarity = static_cast<double>(agree) / static_cast<double>(claimed.length());
    r.accepted = r.similarity >= threshold;
    return r;
}

}  // namespace hashchain
