#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "stockcnn/error.hpp"

namespace stockcnn::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in native little-endian order");

// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void put(const T& value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    void put_bytes(std::string_view bytes) { out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }

    void put_string(std::string_view s) {
        put(static_cast<std::uint32_t>(s.size()));
        put_bytes(s);
    }

    void put_doubles(std::span<const double> values) {
        out_.write(reinterpret_cast<const char*>(values.data()),
                   static_cast<std::streamsize>(values.size_bytes()));
    }

    void finish(const char* what) {
        out_.flush();
        if (!out_) throw Error("io.write_failed", std::string("failed writing ") + what);
    }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    BinaryReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T get() {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        check();
        return value;
    }

    std::string get_bytes(std::size_t n) {
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

    std::string get_string(std::size_t max_len = 4096) {
        auto n = get<std::uint32_t>();
        if (n > max_len) throw Error("io.corrupt", what_ + ": string length out of range");
        return get_bytes(n);
    }

    void get_doubles(std::span<double> out) {
        in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
        check();
    }

    void expect_magic(std::string_view magic, std::uint32_t version) {
        if (get_bytes(magic.size()) != magic) {
            throw Error("io.bad_magic", what_ + ": not a recognised file (bad magic)");
        }
        auto v = get<std::uint32_t>();
        if (v != version) {
            throw Error("io.bad_version", what_ + ": unsupported version " + std::to_string(v));
        }
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    void check() {
        if (!in_) throw Error("io.truncated", what_ + ": unexpected end of file");
    }

    std::istream& in_;
    std::string what_;
};

}  // namespace stockcnn::detail
