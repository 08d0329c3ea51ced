#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "hdkit/element_type.hpp"
#include "hdkit/packed_bits.hpp"

namespace hdkit {

namespace detail {
using DenseStorage =
    std::variant<std::vector<std::int8_t>, std::vector<std::int16_t>,
                 std::vector<std::int32_t>, std::vector<std::int64_t>,
                 std::vector<float>, std::vector<double>>;

DenseStorage make_dense(ElementType t, std::size_t n);
}  // namespace detail

// Dense or bit-packed vector of dimension D. Bin1 vectors hold a PackedBits
// payload; all other element types hold a flat typed array.
class Hypervector {
 public:
  Hypervector() = default;
  Hypervector(ElementType elem, std::int64_t dim);
  static Hypervector from_packed(PackedBits bits);

  ElementType elem() const { return elem_; }
  std::int64_t dim() const { return dim_; }
  bool is_packed() const { return elem_ == ElementType::Bin1; }

  template <typename T>
  std::span<T> values() {
    return std::span<T>(std::get<std::vector<T>>(dense_));
  }
  template <typename T>
  std::span<const T> values() const {
    return std::span<const T>(std::get<std::vector<T>>(dense_));
  }

  PackedBits& packed() { return packed_; }
  const PackedBits& packed() const { return packed_; }

  // Element access through doubles; exact for every supported type up to
  // 2^53, which covers all integer values the kernels produce from tensors
  // fitting in memory. Hot loops use values<T>() instead.
  double get_as_double(std::int64_t i) const;
  std::int64_t get_as_int(std::int64_t i) const;
  void set_from_double(std::int64_t i, double v);
  void set_from_int(std::int64_t i, std::int64_t v);

  bool operator==(const Hypervector& other) const = default;

 private:
  ElementType elem_ = ElementType::F64;
  std::int64_t dim_ = 0;
  detail::DenseStorage dense_;
  PackedBits packed_;
};

// Row-major stack of K hypervectors sharing one element type. Bin1 matrices
// pack each row separately so every row starts on a word boundary (this is
// also the serialized layout).
class Hypermatrix {
 public:
  Hypermatrix() = default;
  Hypermatrix(ElementType elem, std::int64_t rows, std::int64_t dim);

  ElementType elem() const { return elem_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t dim() const { return dim_; }
  bool is_packed() const { return elem_ == ElementType::Bin1; }

  template <typename T>
  std::span<T> values() {
    return std::span<T>(std::get<std::vector<T>>(dense_));
  }
  template <typename T>
  std::span<const T> values() const {
    return std::span<const T>(std::get<std::vector<T>>(dense_));
  }
  template <typename T>
  std::span<T> row_values(std::int64_t r) {
    return values<T>().subspan(static_cast<std::size_t>(r * dim_),
                               static_cast<std::size_t>(dim_));
  }
  template <typename T>
  std::span<const T> row_values(std::int64_t r) const {
    return values<T>().subspan(static_cast<std::size_t>(r * dim_),
                               static_cast<std::size_t>(dim_));
  }

  std::int64_t words_per_row() const { return PackedBits::word_count(dim_); }
  std::span<std::uint64_t> row_words(std::int64_t r);
  std::span<const std::uint64_t> row_words(std::int64_t r) const;

  double get_as_double(std::int64_t r, std::int64_t c) const;
  std::int64_t get_as_int(std::int64_t r, std::int64_t c) const;
  void set_from_double(std::int64_t r, std::int64_t c, double v);
  void set_from_int(std::int64_t r, std::int64_t c, std::int64_t v);

  Hypervector row_copy(std::int64_t r) const;
  void set_row(std::int64_t r, const Hypervector& v);

  bool operator==(const Hypermatrix& other) const = default;

 private:
  ElementType elem_ = ElementType::F64;
  std::int64_t rows_ = 0;
  std::int64_t dim_ = 0;
  detail::DenseStorage dense_;
  std::vector<std::uint64_t> packed_rows_;  // rows_ * words_per_row() words
};

// Visit a dense element type with a callable templated on the C++ type.
// Bin1 must be handled by the caller before dispatching.
template <typename F>
decltype(auto) dispatch_dense(ElementType t, F&& f) {
  switch (t) {
    case ElementType::I8: return f(std::int8_t{});
    case ElementType::I16: return f(std::int16_t{});
    case ElementType::I32: return f(std::int32_t{});
    case ElementType::I64: return f(std::int64_t{});
    case ElementType::F32: return f(float{});
    case ElementType::F64: return f(double{});
    case ElementType::Bin1: break;
  }
  throw Error("dispatch_dense: Bin1 has no dense storage");
}

}  // namespace hdkit
