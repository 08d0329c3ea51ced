#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace hdkit {

// Scalar element types a hypervector or hypermatrix can hold. Bin1 is the
// 1-bit {+1,-1} representation; it is stored packed (see PackedBits) and is
// the target of the binarization pass.
enum class ElementType : std::uint8_t { I8, I16, I32, I64, F32, F64, Bin1 };

constexpr bool is_integer(ElementType t) {
  return t == ElementType::I8 || t == ElementType::I16 ||
         t == ElementType::I32 || t == ElementType::I64;
}

constexpr bool is_float(ElementType t) {
  return t == ElementType::F32 || t == ElementType::F64;
}

// Width in bits of one element.
constexpr int bit_width(ElementType t) {
  switch (t) {
    case ElementType::I8: return 8;
    case ElementType::I16: return 16;
    case ElementType::I32: return 32;
    case ElementType::I64: return 64;
    case ElementType::F32: return 32;
    case ElementType::F64: return 64;
    case ElementType::Bin1: return 1;
  }
  return 0;
}

constexpr std::string_view to_string(ElementType t) {
  switch (t) {
    case ElementType::I8: return "i8";
    case ElementType::I16: return "i16";
    case ElementType::I32: return "i32";
    case ElementType::I64: return "i64";
    case ElementType::F32: return "f32";
    case ElementType::F64: return "f64";
    case ElementType::Bin1: return "bin1";
  }
  return "?";
}

ElementType element_type_from_string(std::string_view s);

template <typename T> struct element_type_of;
template <> struct element_type_of<std::int8_t> {
  static constexpr ElementType value = ElementType::I8;
};
template <> struct element_type_of<std::int16_t> {
  static constexpr ElementType value = ElementType::I16;
};
template <> struct element_type_of<std::int32_t> {
  static constexpr ElementType value = ElementType::I32;
};
template <> struct element_type_of<std::int64_t> {
  static constexpr ElementType value = ElementType::I64;
};
template <> struct element_type_of<float> {
  static constexpr ElementType value = ElementType::F32;
};
template <> struct element_type_of<double> {
  static constexpr ElementType value = ElementType::F64;
};

// Narrowing conversions saturate instead of wrapping so results are identical
// across backends. Float -> int rounds to nearest (half away from zero).
template <typename To, typename From>
To saturate_cast(From v) {
  if constexpr (std::is_floating_point_v<To>) {
    return static_cast<To>(v);
  } else {
    static_assert(std::is_integral_v<To>);
    constexpr To lo = std::numeric_limits<To>::min();
    constexpr To hi = std::numeric_limits<To>::max();
    if constexpr (std::is_floating_point_v<From>) {
      if (std::isnan(v)) return To{0};
      From r = std::round(v);
      if (r <= static_cast<From>(lo)) return lo;
      if (r >= static_cast<From>(hi)) return hi;
      return static_cast<To>(r);
    } else {
      using Wide = std::int64_t;
      Wide w = static_cast<Wide>(v);
      if (w < static_cast<Wide>(lo)) return lo;
      if constexpr (sizeof(To) < sizeof(Wide)) {
        if (w > static_cast<Wide>(hi)) return hi;
      }
      return static_cast<To>(w);
    }
  }
}

// sign(0) is +1 throughout: it matches the PackedBits bit-1 <-> +1 mapping and
// keeps sign idempotent.
template <typename T>
constexpr bool sign_bit_of(T v) {
  return !(v < T{0});
}

// Error type for every user-facing failure (shape mismatch, bad index,
// parse error, ...). Messages are meant to be printed as-is by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hdkit
