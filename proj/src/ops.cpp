#include "hdkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hdkit::ops {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

void require_same_vv(const Hypervector& a, const Hypervector& b) {
  require(a.dim() == b.dim(), "dim mismatch: " + std::to_string(a.dim()) +
                                  " vs " + std::to_string(b.dim()));
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
}

void require_numeric(ElementType t, const char* op) {
  require(t != ElementType::Bin1,
          std::string(op) + ": no binarized variant for Bin1 operands");
}

PerforationSpec resolve(const Perf& perf, std::int64_t reduction_len) {
  PerforationSpec s =
      perf.value_or(PerforationSpec{0, reduction_len, 1});
  s.validate(reduction_len);
  return s;
}

// Sign of element i of a dense vector span, as the packed-bit convention
// (true <-> +1, zero counts as +1).
template <typename T>
inline bool sgn(std::span<const T> v, std::int64_t i) {
  return sign_bit_of(v[static_cast<std::size_t>(i)]);
}

}  // namespace

// --- constructors -----------------------------------------------------------

Hypervector create(std::int64_t dim, ElementType elem) {
  return Hypervector(elem, dim);  // zero fill; Bin1 zero word = all -1
}

Hypervector create(std::int64_t dim, ElementType elem,
                   const std::function<double(std::int64_t)>& init) {
  Hypervector v(elem, dim);
  for (std::int64_t i = 0; i < dim; ++i) v.set_from_double(i, init(i));
  return v;
}

Hypermatrix create_matrix(std::int64_t rows, std::int64_t dim, ElementType elem) {
  return Hypermatrix(elem, rows, dim);
}

Hypermatrix create_matrix(std::int64_t rows, std::int64_t dim, ElementType elem,
                          const std::function<double(std::int64_t, std::int64_t)>& init) {
  Hypermatrix m(elem, rows, dim);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < dim; ++c) m.set_from_double(r, c, init(r, c));
  return m;
}

namespace {

double draw_random(const CounterRng& rng, ElementType elem, std::uint64_t ctr) {
  if (is_float(elem)) return rng.uniform_pm1(ctr);
  return static_cast<double>(rng.sign(ctr));
}

}  // namespace

Hypervector random_hv(std::int64_t dim, ElementType elem, std::uint64_t seed) {
  CounterRng rng(seed, rng_stream::kRandom);
  Hypervector v(elem, dim);
  for (std::int64_t i = 0; i < dim; ++i)
    v.set_from_double(i, draw_random(rng, elem, static_cast<std::uint64_t>(i)));
  return v;
}

Hypermatrix random_hm(std::int64_t rows, std::int64_t dim, ElementType elem,
                      std::uint64_t seed) {
  CounterRng rng(seed, rng_stream::kRandom);
  Hypermatrix m(elem, rows, dim);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < dim; ++c)
      m.set_from_double(r, c, draw_random(rng, elem, static_cast<std::uint64_t>(r * dim + c)));
  return m;
}

Hypervector gaussian_hv(std::int64_t dim, ElementType elem, std::uint64_t seed) {
  CounterRng rng(seed, rng_stream::kGaussian);
  Hypervector v(elem, dim);
  for (std::int64_t i = 0; i < dim; ++i)
    v.set_from_double(i, rng.gaussian(static_cast<std::uint64_t>(i)));
  return v;
}

Hypermatrix gaussian_hm(std::int64_t rows, std::int64_t dim, ElementType elem,
                        std::uint64_t seed) {
  CounterRng rng(seed, rng_stream::kGaussian);
  Hypermatrix m(elem, rows, dim);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < dim; ++c)
      m.set_from_double(r, c, rng.gaussian(static_cast<std::uint64_t>(r * dim + c)));
  return m;
}

// --- element-wise -----------------------------------------------------------

Hypervector wrap_shift(const Hypervector& v, std::int64_t shift) {
  std::int64_t d = v.dim();
  std::int64_t s = ((shift % d) + d) % d;
  Hypervector out(v.elem(), d);
  if (v.is_packed()) {
    for (std::int64_t i = 0; i < d; ++i)
      out.packed().set(i, v.packed().get(((i - s) % d + d) % d));
    return out;
  }
  dispatch_dense(v.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto src = v.values<T>();
    auto dst = out.values<T>();
    for (std::int64_t i = 0; i < d; ++i)
      dst[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(((i - s) % d + d) % d)];
  });
  return out;
}

namespace {

template <typename F>
Hypervector map_hv(const Hypervector& v, F&& f) {
  Hypervector out(v.elem(), v.dim());
  dispatch_dense(v.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto src = v.values<T>();
    auto dst = out.values<T>();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  });
  return out;
}

template <typename F>
Hypermatrix map_hm(const Hypermatrix& m, F&& f) {
  Hypermatrix out(m.elem(), m.rows(), m.dim());
  dispatch_dense(m.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto src = m.values<T>();
    auto dst = out.values<T>();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  });
  return out;
}

template <typename T>
T sign_val(T x) {
  return sign_bit_of(x) ? T{1} : T{-1};
}

}  // namespace

Hypervector sign(const Hypervector& v) {
  if (v.is_packed()) return v;  // idempotent on Bin1
  return map_hv(v, [](auto x) { return sign_val(x); });
}

Hypermatrix sign(const Hypermatrix& m) {
  if (m.is_packed()) return m;
  return map_hm(m, [](auto x) { return sign_val(x); });
}

Hypervector sign_packed(const Hypervector& v) {
  if (v.is_packed()) return v;
  Hypervector out(ElementType::Bin1, v.dim());
  dispatch_dense(v.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto src = v.values<T>();
    for (std::int64_t i = 0; i < v.dim(); ++i)
      out.packed().set(i, sign_bit_of(src[static_cast<std::size_t>(i)]));
  });
  return out;
}

Hypermatrix sign_packed(const Hypermatrix& m) {
  if (m.is_packed()) return m;
  Hypermatrix out(ElementType::Bin1, m.rows(), m.dim());
  dispatch_dense(m.elem(), [&](auto tag) {
    using T = decltype(tag);
    for (std::int64_t r = 0; r < m.rows(); ++r) {
      auto src = m.row_values<T>(r);
      auto dst = out.row_words(r);
      for (std::int64_t c = 0; c < m.dim(); ++c)
        if (sign_bit_of(src[static_cast<std::size_t>(c)]))
          dst[static_cast<std::size_t>(c >> 6)] |= std::uint64_t{1} << (c & 63);
    }
  });
  return out;
}

Hypervector sign_flip(const Hypervector& v) {
  if (v.is_packed()) {
    Hypervector out(ElementType::Bin1, v.dim());
    for (std::int64_t w = 0; w < v.packed().words(); ++w)
      out.packed().data()[w] = ~v.packed().word(w);
    out.packed().clear_padding();
    return out;
  }
  return map_hv(v, [](auto x) { return static_cast<decltype(x)>(-x); });
}

Hypermatrix sign_flip(const Hypermatrix& m) {
  if (m.is_packed()) {
    Hypermatrix out(ElementType::Bin1, m.rows(), m.dim());
    for (std::int64_t r = 0; r < m.rows(); ++r) {
      auto src = m.row_words(r);
      auto dst = out.row_words(r);
      for (std::size_t w = 0; w < src.size(); ++w) dst[w] = ~src[w];
      // keep padding zero
      if (!dst.empty()) dst.back() &= PackedBits(m.dim()).tail_mask();
    }
    return out;
  }
  return map_hm(m, [](auto x) { return static_cast<decltype(x)>(-x); });
}

Hypervector absolute_value(const Hypervector& v) {
  require_numeric(v.elem(), "absolute_value");
  return map_hv(v, [](auto x) {
    using T = decltype(x);
    if constexpr (std::is_floating_point_v<T>) return std::abs(x);
    else return x < 0 ? static_cast<T>(-x) : x;
  });
}

Hypermatrix absolute_value(const Hypermatrix& m) {
  require_numeric(m.elem(), "absolute_value");
  return map_hm(m, [](auto x) {
    using T = decltype(x);
    if constexpr (std::is_floating_point_v<T>) return std::abs(x);
    else return x < 0 ? static_cast<T>(-x) : x;
  });
}

Hypervector cosine(const Hypervector& v) {
  require(is_float(v.elem()), "cosine: floating element type required");
  return map_hv(v, [](auto x) { return static_cast<decltype(x)>(std::cos(x)); });
}

Hypermatrix cosine(const Hypermatrix& m) {
  require(is_float(m.elem()), "cosine: floating element type required");
  return map_hm(m, [](auto x) { return static_cast<decltype(x)>(std::cos(x)); });
}

namespace {

template <typename T>
T ewise_apply(EwOp op, T a, T b) {
  switch (op) {
    case EwOp::Add: return static_cast<T>(a + b);
    case EwOp::Sub: return static_cast<T>(a - b);
    case EwOp::Mul: return static_cast<T>(a * b);
    case EwOp::Div:
      if constexpr (std::is_integral_v<T>) {
        if (b == 0) throw Error("integer division by zero");
        return static_cast<T>(a / b);
      } else {
        return a / b;  // IEEE inf/nan
      }
  }
  return T{};
}

}  // namespace

Hypervector ewise(EwOp op, const Hypervector& a, const Hypervector& b) {
  require_same_vv(a, b);
  if (a.is_packed()) {
    require(op == EwOp::Mul, "ewise: only mul has a binarized variant");
    // product of {+1,-1} values: +1 iff signs agree, i.e. XNOR of the bits
    Hypervector out(ElementType::Bin1, a.dim());
    for (std::int64_t w = 0; w < a.packed().words(); ++w)
      out.packed().data()[w] = ~(a.packed().word(w) ^ b.packed().word(w));
    out.packed().clear_padding();
    return out;
  }
  Hypervector out(a.elem(), a.dim());
  dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto pa = a.values<T>();
    auto pb = b.values<T>();
    auto po = out.values<T>();
    for (std::size_t i = 0; i < pa.size(); ++i) po[i] = ewise_apply(op, pa[i], pb[i]);
  });
  return out;
}

Hypermatrix ewise(EwOp op, const Hypermatrix& a, const Hypermatrix& b) {
  require(a.rows() == b.rows() && a.dim() == b.dim(), "shape mismatch");
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  if (a.is_packed()) {
    require(op == EwOp::Mul, "ewise: only mul has a binarized variant");
    Hypermatrix out(ElementType::Bin1, a.rows(), a.dim());
    std::uint64_t tail = PackedBits(a.dim()).tail_mask();
    for (std::int64_t r = 0; r < a.rows(); ++r) {
      auto ra = a.row_words(r);
      auto rb = b.row_words(r);
      auto ro = out.row_words(r);
      for (std::size_t w = 0; w < ra.size(); ++w) ro[w] = ~(ra[w] ^ rb[w]);
      if (!ro.empty()) ro.back() &= tail;
    }
    return out;
  }
  Hypermatrix out(a.elem(), a.rows(), a.dim());
  dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto pa = a.values<T>();
    auto pb = b.values<T>();
    auto po = out.values<T>();
    for (std::size_t i = 0; i < pa.size(); ++i) po[i] = ewise_apply(op, pa[i], pb[i]);
  });
  return out;
}

// --- shape / access ---------------------------------------------------------

Scalar get_element(const Hypervector& v, std::int64_t i) {
  require(i >= 0 && i < v.dim(), "index out of range");
  if (v.is_packed()) return Scalar::of_int(v.packed().sign_at(i), ElementType::Bin1);
  if (is_float(v.elem())) return Scalar::of_double(v.get_as_double(i), v.elem());
  return Scalar::of_int(v.get_as_int(i), v.elem());
}

Scalar get_element(const Hypermatrix& m, std::int64_t r, std::int64_t c) {
  require(r >= 0 && r < m.rows() && c >= 0 && c < m.dim(), "index out of range");
  if (m.is_packed()) return Scalar::of_int(m.get_as_int(r, c), ElementType::Bin1);
  if (is_float(m.elem())) return Scalar::of_double(m.get_as_double(r, c), m.elem());
  return Scalar::of_int(m.get_as_int(r, c), m.elem());
}

Hypervector type_cast(const Hypervector& v, ElementType to) {
  if (to == v.elem()) return v;
  if (to == ElementType::Bin1) return sign_packed(v);
  Hypervector out(to, v.dim());
  if (is_float(v.elem())) {
    for (std::int64_t i = 0; i < v.dim(); ++i) out.set_from_double(i, v.get_as_double(i));
  } else {
    for (std::int64_t i = 0; i < v.dim(); ++i) out.set_from_int(i, v.get_as_int(i));
  }
  return out;
}

Hypermatrix type_cast(const Hypermatrix& m, ElementType to) {
  if (to == m.elem()) return m;
  if (to == ElementType::Bin1) return sign_packed(m);
  Hypermatrix out(to, m.rows(), m.dim());
  if (is_float(m.elem())) {
    for (std::int64_t r = 0; r < m.rows(); ++r)
      for (std::int64_t c = 0; c < m.dim(); ++c)
        out.set_from_double(r, c, m.get_as_double(r, c));
  } else {
    for (std::int64_t r = 0; r < m.rows(); ++r)
      for (std::int64_t c = 0; c < m.dim(); ++c)
        out.set_from_int(r, c, m.get_as_int(r, c));
  }
  return out;
}

Hypermatrix matrix_transpose(const Hypermatrix& m) {
  Hypermatrix out(m.elem(), m.dim(), m.rows());
  if (m.is_packed()) {
    for (std::int64_t r = 0; r < m.rows(); ++r)
      for (std::int64_t c = 0; c < m.dim(); ++c)
        out.set_from_int(c, r, m.get_as_int(r, c));
    return out;
  }
  dispatch_dense(m.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto src = m.values<T>();
    auto dst = out.values<T>();
    for (std::int64_t r = 0; r < m.rows(); ++r)
      for (std::int64_t c = 0; c < m.dim(); ++c)
        dst[static_cast<std::size_t>(c * m.rows() + r)] =
            src[static_cast<std::size_t>(r * m.dim() + c)];
  });
  return out;
}

Hypervector get_matrix_row(const Hypermatrix& m, std::int64_t r) {
  return m.row_copy(r);
}

void set_matrix_row(Hypermatrix& m, const Hypervector& v, std::int64_t r) {
  m.set_row(r, v);
}

namespace {

template <bool kMax>
std::int64_t arg_extreme(const Hypervector& v) {
  std::int64_t best = 0;
  if (v.is_packed()) {
    for (std::int64_t i = 1; i < v.dim(); ++i) {
      int a = v.packed().sign_at(i), b = v.packed().sign_at(best);
      if (kMax ? a > b : a < b) best = i;
    }
    return best;
  }
  return dispatch_dense(v.elem(), [&](auto tag) -> std::int64_t {
    using T = decltype(tag);
    auto p = v.values<T>();
    std::int64_t idx = 0;
    for (std::int64_t i = 1; i < v.dim(); ++i) {
      // ties keep the lowest index
      if (kMax ? (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(idx)])
               : (p[static_cast<std::size_t>(i)] < p[static_cast<std::size_t>(idx)]))
        idx = i;
    }
    return idx;
  });
}

}  // namespace

std::int64_t arg_min(const Hypervector& v) { return arg_extreme<false>(v); }
std::int64_t arg_max(const Hypervector& v) { return arg_extreme<true>(v); }

Hypervector arg_min_rows(const Hypermatrix& m) {
  Hypervector out(ElementType::I64, m.rows());
  for (std::int64_t r = 0; r < m.rows(); ++r)
    out.set_from_int(r, arg_min(m.row_copy(r)));
  return out;
}

Hypervector arg_max_rows(const Hypermatrix& m) {
  Hypervector out(ElementType::I64, m.rows());
  for (std::int64_t r = 0; r < m.rows(); ++r)
    out.set_from_int(r, arg_max(m.row_copy(r)));
  return out;
}

// --- reductions -------------------------------------------------------------

namespace {

double l2_sumsq(const Hypervector& v, const PerforationSpec& s) {
  if (v.is_packed()) {
    // every element is +-1
    return static_cast<double>(s.visited());
  }
  return dispatch_dense(v.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto p = v.values<T>();
    double acc = 0.0;
    for (std::int64_t i = s.begin; i < s.end; i += s.stride) {
      double x = static_cast<double>(p[static_cast<std::size_t>(i)]);
      acc += x * x;
    }
    return acc;
  });
}

double l2_row_sumsq(const Hypermatrix& m, std::int64_t r, const PerforationSpec& s) {
  if (m.is_packed()) return static_cast<double>(s.visited());
  return dispatch_dense(m.elem(), [&](auto tag) {
    using T = decltype(tag);
    auto p = m.row_values<T>(r);
    double acc = 0.0;
    for (std::int64_t i = s.begin; i < s.end; i += s.stride) {
      double x = static_cast<double>(p[static_cast<std::size_t>(i)]);
      acc += x * x;
    }
    return acc;
  });
}

double scale_sum(double acc, const PerforationSpec& s, std::int64_t full) {
  if (s.covers_all(full)) return acc;
  return acc * static_cast<double>(full) / static_cast<double>(s.visited());
}

}  // namespace

double l2norm(const Hypervector& v, const Perf& perf) {
  PerforationSpec s = resolve(perf, v.dim());
  return std::sqrt(scale_sum(l2_sumsq(v, s), s, v.dim()));
}

Hypervector l2norm_rows(const Hypermatrix& m, const Perf& perf) {
  PerforationSpec s = resolve(perf, m.dim());
  Hypervector out(ElementType::F64, m.rows());
  for (std::int64_t r = 0; r < m.rows(); ++r)
    out.set_from_double(r, std::sqrt(scale_sum(l2_row_sumsq(m, r, s), s, m.dim())));
  return out;
}

namespace {

// Dense sign-compare Hamming between two spans over sampled indices.
template <typename T>
std::int64_t hamming_dense(std::span<const T> a, std::span<const T> b,
                           const PerforationSpec& s) {
  std::int64_t mismatches = 0;
  for (std::int64_t i = s.begin; i < s.end; i += s.stride)
    mismatches += (sgn(a, i) != sgn(b, i)) ? 1 : 0;
  return mismatches;
}

std::int64_t hamming_packed(std::span<const std::uint64_t> a,
                            std::span<const std::uint64_t> b,
                            const PackedBits* mask) {
  std::int64_t mismatches = 0;
  if (mask == nullptr) {
    for (std::size_t w = 0; w < a.size(); ++w) mismatches += std::popcount(a[w] ^ b[w]);
  } else {
    for (std::size_t w = 0; w < a.size(); ++w)
      mismatches += std::popcount((a[w] ^ b[w]) & mask->word(static_cast<std::int64_t>(w)));
  }
  return mismatches;
}

std::span<const std::uint64_t> packed_span(const Hypervector& v) {
  return std::span<const std::uint64_t>(v.packed().data(),
                                        static_cast<std::size_t>(v.packed().words()));
}

}  // namespace

std::int64_t hamming(const Hypervector& a, const Hypervector& b, const Perf& perf) {
  require_same_vv(a, b);
  PerforationSpec s = resolve(perf, a.dim());
  if (a.is_packed()) {
    if (s.covers_all(a.dim())) return hamming_packed(packed_span(a), packed_span(b), nullptr);
    PackedBits mask = PackedBits::perforation_mask(a.dim(), s.begin, s.end, s.stride);
    return hamming_packed(packed_span(a), packed_span(b), &mask);
  }
  return dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    return hamming_dense<T>(a.values<T>(), b.values<T>(), s);
  });
}

Hypervector hamming_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.dim(), "dim mismatch");
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  PerforationSpec s = resolve(perf, a.dim());
  Hypervector out(ElementType::I64, b.rows());
  if (a.is_packed()) {
    PackedBits mask;
    const PackedBits* mp = nullptr;
    if (!s.covers_all(a.dim())) {
      mask = PackedBits::perforation_mask(a.dim(), s.begin, s.end, s.stride);
      mp = &mask;
    }
    for (std::int64_t r = 0; r < b.rows(); ++r)
      out.set_from_int(r, hamming_packed(packed_span(a), b.row_words(r), mp));
    return out;
  }
  dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    for (std::int64_t r = 0; r < b.rows(); ++r)
      out.set_from_int(r, hamming_dense<T>(a.values<T>(), b.row_values<T>(r), s));
  });
  return out;
}

Hypermatrix hamming_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.dim(), "dim mismatch");
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  PerforationSpec s = resolve(perf, a.dim());
  Hypermatrix out(ElementType::I64, a.rows(), b.rows());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    Hypervector row = a.row_copy(i);
    Hypervector d = hamming_vm(row, b, s);
    for (std::int64_t j = 0; j < b.rows(); ++j) out.set_from_int(i, j, d.get_as_int(j));
  }
  return out;
}

namespace {

struct DotNorms {
  double dot = 0.0, na = 0.0, nb = 0.0;
};

template <typename T>
DotNorms dot_norms_dense(std::span<const T> a, std::span<const T> b,
                         const PerforationSpec& s) {
  DotNorms r;
  for (std::int64_t i = s.begin; i < s.end; i += s.stride) {
    double x = static_cast<double>(a[static_cast<std::size_t>(i)]);
    double y = static_cast<double>(b[static_cast<std::size_t>(i)]);
    r.dot += x * y;
    r.na += x * x;
    r.nb += y * y;
  }
  return r;
}

DotNorms dot_norms_packed(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b, std::int64_t visited,
                          const PackedBits* mask) {
  // dot of +-1 vectors over the sampled set = visited - 2 * mismatches
  std::int64_t mism = hamming_packed(a, b, mask);
  DotNorms r;
  r.dot = static_cast<double>(visited - 2 * mism);
  r.na = static_cast<double>(visited);
  r.nb = static_cast<double>(visited);
  return r;
}

double cossim_from(const DotNorms& dn) {
  if (dn.na == 0.0 || dn.nb == 0.0) return 0.0;  // zero-norm operand
  return dn.dot / (std::sqrt(dn.na) * std::sqrt(dn.nb));
}

}  // namespace

double cossim(const Hypervector& a, const Hypervector& b, const Perf& perf) {
  require_same_vv(a, b);
  PerforationSpec s = resolve(perf, a.dim());
  if (a.is_packed()) {
    PackedBits mask;
    const PackedBits* mp = nullptr;
    if (!s.covers_all(a.dim())) {
      mask = PackedBits::perforation_mask(a.dim(), s.begin, s.end, s.stride);
      mp = &mask;
    }
    return cossim_from(dot_norms_packed(packed_span(a), packed_span(b), s.visited(), mp));
  }
  return dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    return cossim_from(dot_norms_dense<T>(a.values<T>(), b.values<T>(), s));
  });
}

Hypervector cossim_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.dim(), "dim mismatch");
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  PerforationSpec s = resolve(perf, a.dim());
  Hypervector out(ElementType::F64, b.rows());
  if (a.is_packed()) {
    PackedBits mask;
    const PackedBits* mp = nullptr;
    if (!s.covers_all(a.dim())) {
      mask = PackedBits::perforation_mask(a.dim(), s.begin, s.end, s.stride);
      mp = &mask;
    }
    for (std::int64_t r = 0; r < b.rows(); ++r)
      out.set_from_double(r, cossim_from(dot_norms_packed(packed_span(a), b.row_words(r),
                                                          s.visited(), mp)));
    return out;
  }
  dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    for (std::int64_t r = 0; r < b.rows(); ++r)
      out.set_from_double(
          r, cossim_from(dot_norms_dense<T>(a.values<T>(), b.row_values<T>(r), s)));
  });
  return out;
}

Hypermatrix cossim_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.dim(), "dim mismatch");
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  Hypermatrix out(ElementType::F64, a.rows(), b.rows());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    Hypervector sims = cossim_vm(a.row_copy(i), b, perf);
    for (std::int64_t j = 0; j < b.rows(); ++j)
      out.set_from_double(i, j, sims.get_as_double(j));
  }
  return out;
}

namespace {

// matmul row kernel: out[j] += a_k * b[k][j] over sampled k, ascending.
// Integer inputs accumulate in i64, float in f64; perforation scales by the
// exact rational full/visited in the accumulator domain.
template <typename T, typename Acc>
void matmul_accumulate(std::span<const T> a, const Hypermatrix& b,
                       const PerforationSpec& s, std::vector<Acc>& acc) {
  for (std::int64_t k = s.begin; k < s.end; k += s.stride) {
    // keep the multiplier in its narrow type: integer lanes then widen via
    // 32x32->64 multiplies instead of full 64-bit products
    T av = a[static_cast<std::size_t>(k)];
    auto brow = b.row_values<T>(k);
    for (std::int64_t j = 0; j < b.dim(); ++j)
      acc[static_cast<std::size_t>(j)] +=
          static_cast<Acc>(av) * static_cast<Acc>(brow[static_cast<std::size_t>(j)]);
  }
}

}  // namespace

Hypervector matmul_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.rows(), "inner dimension mismatch: " + std::to_string(a.dim()) +
                                   " vs " + std::to_string(b.rows()));
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  PerforationSpec s = resolve(perf, a.dim());
  std::int64_t full = a.dim();

  if (a.is_packed()) {
    // +-1 dot via bit counting along the reduction axis
    Hypervector out(ElementType::I64, b.dim());
    for (std::int64_t j = 0; j < b.dim(); ++j) {
      std::int64_t dot = 0;
      for (std::int64_t k = s.begin; k < s.end; k += s.stride)
        dot += a.packed().sign_at(k) * b.get_as_int(k, j);
      if (!s.covers_all(full)) dot = dot * full / s.visited();
      out.set_from_int(j, dot);
    }
    return out;
  }

  ElementType oe = a.elem();
  Hypervector out(oe, b.dim());
  dispatch_dense(a.elem(), [&](auto tag) {
    using T = decltype(tag);
    using Acc = std::conditional_t<std::is_integral_v<T>, std::int64_t, double>;
    std::vector<Acc> acc(static_cast<std::size_t>(b.dim()), Acc{0});
    matmul_accumulate<T, Acc>(a.values<T>(), b, s, acc);
    for (std::int64_t j = 0; j < b.dim(); ++j) {
      Acc v = acc[static_cast<std::size_t>(j)];
      if (!s.covers_all(full)) {
        if constexpr (std::is_integral_v<Acc>)
          v = v * full / s.visited();
        else
          v = v * static_cast<double>(full) / static_cast<double>(s.visited());
      }
      if constexpr (std::is_integral_v<Acc>)
        out.set_from_int(j, v);
      else
        out.set_from_double(j, v);
    }
  });
  return out;
}

Hypermatrix matmul_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf) {
  require(a.dim() == b.rows(), "inner dimension mismatch: " + std::to_string(a.dim()) +
                                   " vs " + std::to_string(b.rows()));
  require(a.elem() == b.elem(), "element type mismatch (use type_cast first)");
  ElementType oe = a.is_packed() ? ElementType::I64 : a.elem();
  Hypermatrix out(oe, a.rows(), b.dim());
  for (std::int64_t r = 0; r < a.rows(); ++r) {
    Hypervector row = matmul_vm(a.row_copy(r), b, perf);
    out.set_row(r, row);
  }
  return out;
}

}  // namespace hdkit::ops
