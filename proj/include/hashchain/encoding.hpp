#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hashchain/bytes.hpp"

namespace hashchain {

// Canonical wire format: a record is a sequence of fields, each a 4-byte
// big-endian length prefix followed by the field bytes. Integers travel
// as 8-byte big-endian fields. The format is injective per record type.

class FieldWriter {
public:
    void field(std::span<const std::uint8_t> data) {
        if (data.size() > std::numeric_limits<std::uint32_t>::max())
            throw std::invalid_argument("FieldWriter: field too large");
        append_u32_be(out_, static_cast<std::uint32_t>(data.size()));
        append_bytes(out_, data);
    }

    void field_u64(std::uint64_t v) {
        Bytes b;
        append_u64_be(b, v);
        field(b);
    }

    void field_string(std::string_view s) {
        field(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()),
                                            s.size()));
    }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class FieldReader {
public:
    explicit FieldReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::span<const std::uint8_t> field() {
        if (data_.size() - pos_ < 4) throw std::runtime_error("decode: truncated length prefix");
        const std::uint32_t len = read_u32_be(data_.subspan(pos_));
        pos_ += 4;
        if (data_.size() - pos_ < len) throw std::runtime_error("decode: truncated field body");
        auto out = data_.subspan(pos_, len);
        pos_ += len;
        return out;
    }

    std::uint64_t field_u64() {
        auto f = field();
        if (f.size() != 8) throw std::runtime_error("decode: integer field must be 8 bytes");
        return read_u64_be(f);
    }

    std::string field_string() {
        auto f = field();
        return std::string(reinterpret_cast<const char*>(f.data()), f.size());
    }

    Bytes field_bytes() {
        auto f = field();
        return Bytes(f.begin(), f.end());
    }

    bool exhausted() const { return pos_ == data_.size(); }

    void expect_exhausted(const char* what) const {
        if (!exhausted()) throw std::runtime_error(std::string("decode: trailing bytes in ") + what);
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace hashchain
