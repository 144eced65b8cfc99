#pragma once

// Little-endian binary serialization helpers shared by the model and index
// dump formats. Every dump starts with a 4-byte magic and a u32 version.

#include "augrag/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace augrag::bin {

static_assert(std::endian::native == std::endian::little, "dump formats assume a little-endian host");

class Writer {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }

    void put_string(std::string_view s) {
        put<std::uint64_t>(s.size());
        buf_.append(s);
    }

    void put_doubles(const std::vector<double>& v) {
        put<std::uint64_t>(v.size());
        buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }

    void put_magic(std::string_view magic, std::uint32_t version) {
        buf_.append(magic);
        put(version);
    }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_string() {
        auto n = get<std::uint64_t>();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    std::vector<double> get_doubles() {
        auto n = get<std::uint64_t>();
        if (n > (data_.size() - pos_) / sizeof(double)) {
            fail("truncated array");
        }
        std::vector<double> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }

    /// Checks the magic and returns the version.
    std::uint32_t expect_magic(std::string_view magic) {
        need(magic.size());
        if (data_.substr(pos_, magic.size()) != magic) {
            fail("bad magic (not a " + std::string(magic) + " file)");
        }
        pos_ += magic.size();
        return get<std::uint32_t>();
    }

    bool at_end() const { return pos_ == data_.size(); }

    [[noreturn]] void fail(const std::string& msg) const { throw InputError(what_ + ": " + msg); }

private:
    void need(std::uint64_t n) const {
        if (n > data_.size() - pos_) {
            fail("unexpected end of data");
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string what_;
};

} // namespace augrag::bin
