#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace spsgd {

/// Incremental FNV-1a 64-bit hash.  Used for content digests of run records
/// and canonicalized configuration text; stable across platforms.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t kPrime = 0x100000001b3ull;

  void absorb(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= kPrime;
    }
  }
  void absorb_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    absorb(b, 8);
  }
  void absorb_double(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    absorb_u64(bits);
  }
  std::uint64_t value() const { return state_; }

  /// 16 lowercase hex digits.
  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i)
      out[15 - i] = digits[(state_ >> (4 * i)) & 0xf];
    return out;
  }

 private:
  std::uint64_t state_ = kOffset;
};

/// Locale-independent decimal rendering with 17 significant digits, enough to
/// round-trip any IEEE double.  Used by the CSV/JSON writers.
inline std::string format_sig17(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Shorter rendering for SVG coordinates (still locale independent and
/// deterministic for identical inputs).
inline std::string format_sig6(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v,
                           std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

/// Configuration text could not be parsed at all.
struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& what, int l, int c)
      : std::runtime_error(what), line(l), column(c) {}
};

/// Configuration parsed but violates the schema; `path` names the field.
struct SchemaError : std::runtime_error {
  std::string path;
  SchemaError(const std::string& what, std::string p)
      : std::runtime_error(what), path(std::move(p)) {}
};

}  // namespace spsgd
