#pragma once

#include <cstdint>
#include <variant>

#include "hdkit/element_type.hpp"

namespace hdkit {

// A typed scalar value flowing through programs (a distance, an index, one
// tensor element). Integer types carry an int64 payload, float types a
// double; the tag remembers the nominal element type.
struct Scalar {
  ElementType elem = ElementType::F64;
  std::variant<std::int64_t, double> v = 0.0;

  static Scalar of_int(std::int64_t x, ElementType t = ElementType::I64) {
    return Scalar{t, x};
  }
  static Scalar of_double(double x, ElementType t = ElementType::F64) {
    return Scalar{t, x};
  }

  bool holds_int() const { return std::holds_alternative<std::int64_t>(v); }

  double as_double() const {
    return holds_int() ? static_cast<double>(std::get<std::int64_t>(v))
                       : std::get<double>(v);
  }
  std::int64_t as_int() const {
    return holds_int() ? std::get<std::int64_t>(v)
                       : saturate_cast<std::int64_t>(std::get<double>(v));
  }

  bool operator==(const Scalar&) const = default;
};

}  // namespace hdkit
