#pragma once

#include "ledgersim/core/amount.hpp"
#include "ledgersim/core/bytes.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ledgersim {

class DecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Canonical binary writer: big-endian fixed-width integers, u32 length
/// prefixes for variable-size data.
class Writer {
  public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    void amount(Amount a) {
        uint128 v = a.value();
        for (int shift = 120; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }

    void boolean(bool b) { u8(b ? 1 : 0); }

    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

    template <std::size_t N, class Tag>
    void fixed(const FixedBytes<N, Tag>& b) {
        raw(b.bytes);
    }

    void length(std::size_t n) {
        if (n > UINT32_MAX) throw std::length_error("sequence too long to encode");
        u32(static_cast<std::uint32_t>(n));
    }

    void bytes(ByteView data) {
        length(data.size());
        raw(data);
    }

    void text(std::string_view s) {
        length(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }

    const Bytes& data() const& { return out_; }
    Bytes take() && { return std::move(out_); }

  private:
    Bytes out_;
};

class Reader {
  public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint8_t u8() { return need(1)[0]; }

    std::uint32_t u32() {
        auto s = need(4);
        std::uint32_t v = 0;
        for (auto b : s) v = (v << 8) | b;
        return v;
    }

    std::uint64_t u64() {
        auto s = need(8);
        std::uint64_t v = 0;
        for (auto b : s) v = (v << 8) | b;
        return v;
    }

    Amount amount() {
        auto s = need(16);
        uint128 v = 0;
        for (auto b : s) v = (v << 8) | b;
        return Amount(v);
    }

    bool boolean() {
        auto v = u8();
        if (v > 1) throw DecodeError("boolean byte out of range");
        return v == 1;
    }

    template <class T>
    T fixed() {
        return T::from_span(need(T::size_bytes));
    }

    std::size_t length() {
        auto n = u32();
        if (n > remaining()) throw DecodeError("length prefix exceeds remaining input");
        return n;
    }

    Bytes bytes() {
        auto s = need(length());
        return Bytes(s.begin(), s.end());
    }

    std::string text() {
        auto s = need(length());
        return std::string(s.begin(), s.end());
    }

    std::size_t remaining() const { return data_.size() - pos_; }

    void expect_end() const {
        if (remaining() != 0) throw DecodeError("trailing bytes after value");
    }

  private:
    ByteView need(std::size_t n) {
        if (n > remaining()) throw DecodeError("unexpected end of input");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace ledgersim
