#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "core/errors.hpp"

namespace urbanfield {

static_assert(std::endian::native == std::endian::little,
              "binary containers are little-endian; big-endian hosts need byte swapping");

class ByteWriter {
public:
    void magic(std::string_view m) { raw(m.data(), m.size()); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        raw(&v, sizeof(T));
    }

    template <typename T>
    void put_span(std::span<const T> values) {
        raw(values.data(), values.size_bytes());
    }

    void zeros(std::size_t count) { buf_.insert(buf_.end(), count, std::uint8_t{0}); }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every failure names the byte offset.
class ByteReader {
public:
    ByteReader(std::vector<std::uint8_t> data, std::string source)
        : data_(std::move(data)), source_(std::move(source)) {}

    static ByteReader load(const std::filesystem::path& path);

    void expect_magic(std::string_view m);
    // Reads a u32 version; errors report the field's own offset.
    void expect_version(std::uint32_t expected);

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        T v;
        need(sizeof(T), "value");
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    template <typename T>
    void get_span(std::span<T> out, const char* what) {
        need(out.size_bytes(), what);
        std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
        pos_ += out.size_bytes();
    }

    void skip(std::size_t n) {
        need(n, "reserved bytes");
        pos_ += n;
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end();

    [[noreturn]] void error(const std::string& what) const;

private:
    void need(std::size_t n, const char* what) const;

    std::vector<std::uint8_t> data_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace urbanfield
