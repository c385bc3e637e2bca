#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "multiface/errors.hpp"

namespace multiface::binio {

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    template <class T>
    void le(T value) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        U u;
        std::memcpy(&u, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor; running past the end throws FormatError with the
/// code given at construction.
class Reader {
public:
    Reader(std::span<const std::uint8_t> data, std::string truncated_code)
        : data_(data), truncated_code_(std::move(truncated_code)) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(truncated_code_, std::string("truncated ") + what + ": need " + std::to_string(n) +
                                                   " bytes, " + std::to_string(remaining()) + " left");
        }
    }
    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    template <class T>
    T le(const char* what) {
        auto b = take(sizeof(T), what);
        std::uint64_t u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) u |= std::uint64_t(b[i]) << (8 * i);
        return cast<T>(u);
    }
    template <class T>
    T be(const char* what) {
        auto b = take(sizeof(T), what);
        std::uint64_t u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) u = (u << 8) | b[i];
        return cast<T>(u);
    }

private:
    template <class T>
    static T cast(std::uint64_t u) {
        T out;
        if constexpr (sizeof(T) == 8) {
            std::memcpy(&out, &u, 8);
        } else if constexpr (sizeof(T) == 4) {
            auto v = static_cast<std::uint32_t>(u);
            std::memcpy(&out, &v, 4);
        } else if constexpr (sizeof(T) == 2) {
            auto v = static_cast<std::uint16_t>(u);
            std::memcpy(&out, &v, 2);
        } else {
            auto v = static_cast<std::uint8_t>(u);
            std::memcpy(&out, &v, 1);
        }
        return out;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string truncated_code_;
};

}  // namespace multiface::binio
