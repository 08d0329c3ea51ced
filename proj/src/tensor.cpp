#include "hdkit/tensor.hpp"

namespace hdkit {

namespace detail {
DenseStorage make_dense(ElementType t, std::size_t n) {
  return dispatch_dense(t, [n](auto tag) -> DenseStorage {
    return std::vector<decltype(tag)>(n);
  });
}
}  // namespace detail

ElementType element_type_from_string(std::string_view s) {
  for (ElementType t : {ElementType::I8, ElementType::I16, ElementType::I32,
                        ElementType::I64, ElementType::F32, ElementType::F64,
                        ElementType::Bin1}) {
    if (s == to_string(t)) return t;
  }
  throw Error("unknown element type '" + std::string(s) + "'");
}

Hypervector::Hypervector(ElementType elem, std::int64_t dim)
    : elem_(elem), dim_(dim) {
  if (dim <= 0) throw Error("Hypervector: dim must be positive");
  if (elem == ElementType::Bin1)
    packed_ = PackedBits(dim);
  else
    dense_ = detail::make_dense(elem, static_cast<std::size_t>(dim));
}

Hypervector Hypervector::from_packed(PackedBits bits) {
  Hypervector v;
  v.elem_ = ElementType::Bin1;
  v.dim_ = bits.dim();
  v.packed_ = std::move(bits);
  return v;
}

double Hypervector::get_as_double(std::int64_t i) const {
  if (is_packed()) return static_cast<double>(packed_.sign_at(i));
  return std::visit(
      [i](const auto& vec) { return static_cast<double>(vec[static_cast<std::size_t>(i)]); },
      dense_);
}

std::int64_t Hypervector::get_as_int(std::int64_t i) const {
  if (is_packed()) return packed_.sign_at(i);
  return std::visit(
      [i](const auto& vec) {
        return saturate_cast<std::int64_t>(vec[static_cast<std::size_t>(i)]);
      },
      dense_);
}

void Hypervector::set_from_double(std::int64_t i, double v) {
  if (is_packed()) {
    packed_.set(i, sign_bit_of(v));
    return;
  }
  std::visit(
      [i, v](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        vec[static_cast<std::size_t>(i)] = saturate_cast<T>(v);
      },
      dense_);
}

void Hypervector::set_from_int(std::int64_t i, std::int64_t v) {
  if (is_packed()) {
    packed_.set(i, sign_bit_of(v));
    return;
  }
  std::visit(
      [i, v](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        vec[static_cast<std::size_t>(i)] = saturate_cast<T>(v);
      },
      dense_);
}

Hypermatrix::Hypermatrix(ElementType elem, std::int64_t rows, std::int64_t dim)
    : elem_(elem), rows_(rows), dim_(dim) {
  if (rows <= 0 || dim <= 0) throw Error("Hypermatrix: rows and dim must be positive");
  if (elem == ElementType::Bin1)
    packed_rows_.assign(static_cast<std::size_t>(rows * words_per_row()), 0);
  else
    dense_ = detail::make_dense(elem, static_cast<std::size_t>(rows * dim));
}

std::span<std::uint64_t> Hypermatrix::row_words(std::int64_t r) {
  return std::span<std::uint64_t>(packed_rows_)
      .subspan(static_cast<std::size_t>(r * words_per_row()),
               static_cast<std::size_t>(words_per_row()));
}

std::span<const std::uint64_t> Hypermatrix::row_words(std::int64_t r) const {
  return std::span<const std::uint64_t>(packed_rows_)
      .subspan(static_cast<std::size_t>(r * words_per_row()),
               static_cast<std::size_t>(words_per_row()));
}

double Hypermatrix::get_as_double(std::int64_t r, std::int64_t c) const {
  if (is_packed()) {
    bool bit = (row_words(r)[static_cast<std::size_t>(c >> 6)] >> (c & 63)) & 1u;
    return bit ? 1.0 : -1.0;
  }
  return std::visit(
      [this, r, c](const auto& vec) {
        return static_cast<double>(vec[static_cast<std::size_t>(r * dim_ + c)]);
      },
      dense_);
}

std::int64_t Hypermatrix::get_as_int(std::int64_t r, std::int64_t c) const {
  if (is_packed()) {
    bool bit = (row_words(r)[static_cast<std::size_t>(c >> 6)] >> (c & 63)) & 1u;
    return bit ? 1 : -1;
  }
  return std::visit(
      [this, r, c](const auto& vec) {
        return saturate_cast<std::int64_t>(vec[static_cast<std::size_t>(r * dim_ + c)]);
      },
      dense_);
}

void Hypermatrix::set_from_double(std::int64_t r, std::int64_t c, double v) {
  if (is_packed()) {
    auto words = row_words(r);
    std::uint64_t m = std::uint64_t{1} << (c & 63);
    if (sign_bit_of(v))
      words[static_cast<std::size_t>(c >> 6)] |= m;
    else
      words[static_cast<std::size_t>(c >> 6)] &= ~m;
    return;
  }
  std::visit(
      [this, r, c, v](auto& vec) {
        using T = typename std::decay_t<decltype(vec)>::value_type;
        vec[static_cast<std::size_t>(r * dim_ + c)] = saturate_cast<T>(v);
      },
      dense_);
}

void Hypermatrix::set_from_int(std::int64_t r, std::int64_t c, std::int64_t v) {
  set_from_double(r, c, static_cast<double>(v));
  if (!is_packed() && elem_ == ElementType::I64) {
    // Re-store exactly; doubles round above 2^53.
    std::get<std::vector<std::int64_t>>(dense_)[static_cast<std::size_t>(r * dim_ + c)] = v;
  }
}

Hypervector Hypermatrix::row_copy(std::int64_t r) const {
  if (r < 0 || r >= rows_) throw Error("row index out of range");
  Hypervector v(elem_, dim_);
  if (is_packed()) {
    auto src = row_words(r);
    for (std::int64_t w = 0; w < words_per_row(); ++w)
      v.packed().data()[w] = src[static_cast<std::size_t>(w)];
    v.packed().clear_padding();
    return v;
  }
  dispatch_dense(elem_, [&](auto tag) {
    using T = decltype(tag);
    auto src = row_values<T>(r);
    auto dst = v.values<T>();
    std::copy(src.begin(), src.end(), dst.begin());
  });
  return v;
}

void Hypermatrix::set_row(std::int64_t r, const Hypervector& v) {
  if (r < 0 || r >= rows_) throw Error("row index out of range");
  if (v.dim() != dim_ || v.elem() != elem_)
    throw Error("set_row: row shape or element type mismatch");
  if (is_packed()) {
    auto dst = row_words(r);
    for (std::int64_t w = 0; w < words_per_row(); ++w)
      dst[static_cast<std::size_t>(w)] = v.packed().word(w);
    return;
  }
  dispatch_dense(elem_, [&](auto tag) {
    using T = decltype(tag);
    auto src = v.values<T>();
    auto dst = row_values<T>(r);
    std::copy(src.begin(), src.end(), dst.begin());
  });
}

}  // namespace hdkit
