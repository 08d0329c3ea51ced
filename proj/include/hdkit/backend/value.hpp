#pragma once

#include <variant>

#include "hdkit/ir/ir.hpp"
#include "hdkit/scalar.hpp"

namespace hdkit::backend {

// A runtime value bound to a program input/output or flowing along an edge.
struct Value {
  std::variant<Scalar, Hypervector, Hypermatrix> v;

  Value() : v(Scalar{}) {}
  Value(Scalar s) : v(std::move(s)) {}
  Value(Hypervector h) : v(std::move(h)) {}
  Value(Hypermatrix m) : v(std::move(m)) {}

  bool is_scalar() const { return std::holds_alternative<Scalar>(v); }
  bool is_vector() const { return std::holds_alternative<Hypervector>(v); }
  bool is_matrix() const { return std::holds_alternative<Hypermatrix>(v); }

  const Scalar& scalar() const { return std::get<Scalar>(v); }
  const Hypervector& vector() const { return std::get<Hypervector>(v); }
  const Hypermatrix& matrix() const { return std::get<Hypermatrix>(v); }
  Hypervector& vector() { return std::get<Hypervector>(v); }
  Hypermatrix& matrix() { return std::get<Hypermatrix>(v); }

  ir::ValueType type() const {
    if (is_scalar()) return ir::ValueType::scalar(scalar().elem);
    if (is_vector()) return ir::ValueType::vector(vector().elem(), vector().dim());
    return ir::ValueType::matrix(matrix().elem(), matrix().rows(), matrix().dim());
  }

  bool operator==(const Value&) const = default;
};

}  // namespace hdkit::backend
