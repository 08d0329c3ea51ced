#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hdkit/ops.hpp"
#include "hdkit/par.hpp"

using namespace hdkit;
using ops::EwOp;

namespace {

Hypervector hv_f64(std::initializer_list<double> xs) {
  Hypervector v(ElementType::F64, static_cast<std::int64_t>(xs.size()));
  std::int64_t i = 0;
  for (double x : xs) v.set_from_double(i++, x);
  return v;
}

Hypervector hv_i32(std::initializer_list<std::int32_t> xs) {
  Hypervector v(ElementType::I32, static_cast<std::int64_t>(xs.size()));
  std::int64_t i = 0;
  for (auto x : xs) v.set_from_int(i++, x);
  return v;
}

Hypermatrix hm_f64(std::int64_t rows, std::int64_t dim, std::initializer_list<double> xs) {
  Hypermatrix m(ElementType::F64, rows, dim);
  std::int64_t i = 0;
  for (double x : xs) {
    m.set_from_double(i / dim, i % dim, x);
    ++i;
  }
  return m;
}

// Independent oracle for packed Hamming: expand bits to +-1 ints and count
// sign mismatches with a plain loop.
std::int64_t dense_hamming_oracle(const Hypervector& a, const Hypervector& b,
                                  std::int64_t begin, std::int64_t end,
                                  std::int64_t stride) {
  std::int64_t n = 0;
  for (std::int64_t i = begin; i < end; i += stride)
    n += (a.get_as_double(i) >= 0) != (b.get_as_double(i) >= 0) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("create fills with zero and with init function") {
  Hypervector z = ops::create(4, ElementType::I32);
  for (int i = 0; i < 4; ++i) CHECK(z.get_as_int(i) == 0);

  Hypervector v = ops::create(3, ElementType::F32, [](std::int64_t i) { return i * 1.5; });
  CHECK(v.get_as_double(0) == doctest::Approx(0.0));
  CHECK(v.get_as_double(1) == doctest::Approx(1.5));
  CHECK(v.get_as_double(2) == doctest::Approx(3.0));

  CHECK_THROWS_AS(ops::create(0, ElementType::I32), Error);
}

TEST_CASE("random constructors are pure functions of seed, shape, distribution") {
  Hypervector a = ops::random_hv(2048, ElementType::I32, 7);
  Hypervector b = ops::random_hv(2048, ElementType::I32, 7);
  CHECK(a == b);
  Hypervector c = ops::random_hv(2048, ElementType::I32, 8);
  CHECK(a != c);
  // integer random draws only +-1
  for (std::int64_t i = 0; i < a.dim(); ++i)
    CHECK((a.get_as_int(i) == 1 || a.get_as_int(i) == -1));
  // gaussian stream differs from uniform stream
  Hypervector g1 = ops::gaussian_hv(64, ElementType::F64, 7);
  Hypervector g2 = ops::gaussian_hv(64, ElementType::F64, 7);
  CHECK(g1 == g2);
  Hypervector u = ops::random_hv(64, ElementType::F64, 7);
  CHECK(g1 != u);
}

TEST_CASE("wrap_shift rotates with wrap-around") {
  Hypervector v = hv_i32({1, 2, 3, 4});
  Hypervector r = ops::wrap_shift(v, 1);
  CHECK(r.get_as_int(0) == 4);
  CHECK(r.get_as_int(1) == 1);
  CHECK(r.get_as_int(2) == 2);
  CHECK(r.get_as_int(3) == 3);

  CHECK(ops::wrap_shift(v, 0) == v);
  // inverse pair and group law: shift k then m == shift (k+m) mod D
  Hypervector w = ops::random_hv(37, ElementType::I16, 3);
  for (std::int64_t k : {1, 5, 36, -4, 40}) {
    CHECK(ops::wrap_shift(ops::wrap_shift(w, k), 37 - ((k % 37 + 37) % 37)) == w);
    for (std::int64_t m : {0, 2, 19}) {
      CHECK(ops::wrap_shift(ops::wrap_shift(w, k), m) == ops::wrap_shift(w, k + m));
    }
  }
  // packed rotation matches dense rotation
  Hypervector d = ops::random_hv(130, ElementType::I8, 11);
  Hypervector p = ops::sign_packed(d);
  for (std::int64_t k : {1, 63, 64, 65, 129}) {
    Hypervector dp = ops::sign_packed(ops::wrap_shift(d, k));
    CHECK(dp == ops::wrap_shift(p, k));
  }
}

TEST_CASE("sign maps zero to +1 and is idempotent") {
  Hypervector v = hv_f64({-2.5, 0.0, 3.1});
  Hypervector s = ops::sign(v);
  CHECK(s.get_as_double(0) == -1.0);
  CHECK(s.get_as_double(1) == 1.0);
  CHECK(s.get_as_double(2) == 1.0);
  CHECK(s.elem() == ElementType::F64);  // sign keeps the element type
  CHECK(ops::sign(s) == s);

  // seeded-RNG statistics oracle: fraction of +1 over 1e4 gaussian draws
  Hypervector g = ops::gaussian_hv(10000, ElementType::F64, 42);
  Hypervector gs = ops::sign(g);
  std::int64_t plus = 0;
  for (std::int64_t i = 0; i < gs.dim(); ++i) plus += gs.get_as_int(i) == 1;
  double frac = static_cast<double>(plus) / 10000.0;
  CHECK(frac > 0.47);
  CHECK(frac < 0.53);
}

TEST_CASE("sign_flip, absolute_value, cosine element-wise") {
  CHECK(ops::sign_flip(hv_i32({1, -2})) == hv_i32({-1, 2}));
  CHECK(ops::absolute_value(hv_i32({-3, 3})) == hv_i32({3, 3}));
  Hypervector c = ops::cosine(hv_f64({0.0}));
  CHECK(c.get_as_double(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ops::cosine(hv_i32({1})), Error);
  // packed sign_flip flips every sign and keeps padding clean
  Hypervector p = ops::sign_packed(ops::random_hv(70, ElementType::I8, 5));
  Hypervector f = ops::sign_flip(p);
  for (std::int64_t i = 0; i < 70; ++i) CHECK(f.get_as_int(i) == -p.get_as_int(i));
  CHECK(ops::hamming(p, f) == 70);
}

TEST_CASE("element-wise binary ops") {
  CHECK(ops::ewise(EwOp::Add, hv_i32({1, 2}), hv_i32({3, 4})) == hv_i32({4, 6}));
  Hypervector v = ops::random_hv(100, ElementType::I32, 1);
  CHECK(ops::ewise(EwOp::Sub, v, v) == ops::create(100, ElementType::I32));
  Hypervector s = ops::sign(ops::gaussian_hv(100, ElementType::F64, 2));
  Hypervector ones = ops::create(100, ElementType::F64, [](std::int64_t) { return 1.0; });
  CHECK(ops::ewise(EwOp::Mul, s, s) == ones);

  CHECK_THROWS_AS(ops::ewise(EwOp::Add, hv_i32({1}), hv_i32({1, 2})), Error);
  CHECK_THROWS_AS(ops::ewise(EwOp::Div, hv_i32({1}), hv_i32({0})), Error);
  // float div by zero follows IEEE
  Hypervector inf = ops::ewise(EwOp::Div, hv_f64({1.0}), hv_f64({0.0}));
  CHECK(std::isinf(inf.get_as_double(0)));
  // packed mul is the xnor kernel: s * s = all +1
  Hypervector sp = ops::sign_packed(s);
  Hypervector prod = ops::ewise(EwOp::Mul, sp, sp);
  for (std::int64_t i = 0; i < 100; ++i) CHECK(prod.get_as_int(i) == 1);
  CHECK_THROWS_AS(ops::ewise(EwOp::Add, sp, sp), Error);
}

TEST_CASE("l2norm") {
  CHECK(ops::l2norm(hv_f64({3.0, 4.0})) == doctest::Approx(5.0));
  CHECK(ops::l2norm(ops::create(16, ElementType::F32)) == 0.0);
  Hypervector p = ops::sign_packed(ops::random_hv(129, ElementType::I8, 1));
  CHECK(ops::l2norm(p) == doctest::Approx(std::sqrt(129.0)));
  // per-row form
  Hypermatrix m = hm_f64(2, 2, {3, 4, 0, 0});
  Hypervector n = ops::l2norm_rows(m);
  CHECK(n.get_as_double(0) == doctest::Approx(5.0));
  CHECK(n.get_as_double(1) == 0.0);
}

TEST_CASE("get_element, type_cast saturation, transpose involution") {
  Hypermatrix m = hm_f64(2, 2, {1, 2, 3, 4});
  CHECK(ops::get_element(m, 1, 0).as_double() == 3.0);
  CHECK_THROWS_AS(ops::get_element(m, 2, 0), Error);

  Hypervector big = hv_i32({300});
  Hypervector cast = ops::type_cast(big, ElementType::I8);
  CHECK(cast.get_as_int(0) == 127);
  CHECK(ops::type_cast(hv_i32({-300}), ElementType::I8).get_as_int(0) == -128);
  CHECK(ops::type_cast(hv_f64({2.6}), ElementType::I32).get_as_int(0) == 3);

  Hypermatrix r = ops::random_hm(5, 9, ElementType::I16, 4);
  CHECK(ops::matrix_transpose(ops::matrix_transpose(r)) == r);
  Hypermatrix rp = ops::sign_packed(r);
  CHECK(ops::matrix_transpose(ops::matrix_transpose(rp)) == rp);
}

TEST_CASE("get/set matrix row") {
  Hypermatrix m = ops::random_hm(4, 33, ElementType::F32, 9);
  Hypervector row = ops::get_matrix_row(m, 2);
  Hypermatrix m2 = ops::create_matrix(4, 33, ElementType::F32);
  ops::set_matrix_row(m2, row, 2);
  CHECK(ops::get_matrix_row(m2, 2) == row);
  CHECK_THROWS_AS(ops::set_matrix_row(m2, ops::create(8, ElementType::F32), 0), Error);
  CHECK_THROWS_AS(ops::get_matrix_row(m, 7), Error);
}

TEST_CASE("arg_min / arg_max with lowest-index ties") {
  CHECK(ops::arg_min(hv_i32({5, 1, 1, 9})) == 1);
  CHECK(ops::arg_max(hv_f64({-1.0})) == 0);
  CHECK(ops::arg_max(hv_i32({2, 7, 7})) == 1);

  // invariance: shifting by a constant or scaling by a positive constant
  // never changes the index
  Hypervector v = ops::gaussian_hv(257, ElementType::F64, 12);
  std::int64_t i0 = ops::arg_min(v);
  std::int64_t a0 = ops::arg_max(v);
  Hypervector shifted = ops::create(257, ElementType::F64,
                                    [&](std::int64_t i) { return v.get_as_double(i) + 3.25; });
  Hypervector scaled = ops::create(257, ElementType::F64,
                                   [&](std::int64_t i) { return v.get_as_double(i) * 1.75; });
  CHECK(ops::arg_min(shifted) == i0);
  CHECK(ops::arg_min(scaled) == i0);
  CHECK(ops::arg_max(shifted) == a0);
  CHECK(ops::arg_max(scaled) == a0);
}

TEST_CASE("hamming basics") {
  CHECK(ops::hamming(hv_f64({1, 1, -1}), hv_f64({1, -1, -1})) == 1);
  Hypervector v = ops::random_hv(777, ElementType::I32, 5);
  CHECK(ops::hamming(v, v) == 0);
  CHECK_THROWS_AS(ops::hamming(hv_i32({1}), hv_i32({1, 1})), Error);
  // zero counts as +1 on both sides
  CHECK(ops::hamming(hv_f64({0.0}), hv_f64({1.0})) == 0);
  CHECK(ops::hamming(hv_f64({0.0}), hv_f64({-1.0})) == 1);
}

TEST_CASE("packed/dense hamming duality: exhaustive word-boundary sweep") {
  // all dims 1..129 catches every boundary around one and two words
  for (std::int64_t d = 1; d <= 129; ++d) {
    Hypervector a = ops::random_hv(d, ElementType::I8, 1000 + d);
    Hypervector b = ops::random_hv(d, ElementType::I8, 2000 + d);
    Hypervector pa = ops::sign_packed(a);
    Hypervector pb = ops::sign_packed(b);
    CHECK(ops::hamming(pa, pb) == ops::hamming(a, b));
    CHECK(ops::hamming(a, b) == dense_hamming_oracle(a, b, 0, d, 1));
  }
  // random large dims
  for (std::uint64_t s = 0; s < 8; ++s) {
    std::int64_t d = 1500 + static_cast<std::int64_t>(CounterRng(s, 1).bits(0) % 2048);
    Hypervector a = ops::random_hv(d, ElementType::F32, 3000 + s);
    Hypervector b = ops::random_hv(d, ElementType::F32, 4000 + s);
    CHECK(ops::hamming(ops::sign_packed(a), ops::sign_packed(b)) ==
          dense_hamming_oracle(a, b, 0, d, 1));
  }
}

TEST_CASE("packed hamming with perforation equals sampled dense oracle") {
  const std::int64_t d = 300;
  Hypervector a = ops::random_hv(d, ElementType::I8, 21);
  Hypervector b = ops::random_hv(d, ElementType::I8, 22);
  Hypervector pa = ops::sign_packed(a);
  Hypervector pb = ops::sign_packed(b);
  for (auto [begin, end, stride] :
       std::vector<std::array<std::int64_t, 3>>{{0, d, 1}, {0, d / 2, 1}, {0, d, 2},
                                                {7, 200, 3}, {64, 128, 1}, {1, d, 64}}) {
    PerforationSpec s{begin, end, stride};
    CHECK(ops::hamming(pa, pb, s) == dense_hamming_oracle(a, b, begin, end, stride));
    CHECK(ops::hamming(a, b, s) == dense_hamming_oracle(a, b, begin, end, stride));
  }
}

TEST_CASE("hamming metric axioms on sign-valued inputs") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Hypervector a = ops::sign_packed(ops::random_hv(200, ElementType::I8, s * 3));
    Hypervector b = ops::sign_packed(ops::random_hv(200, ElementType::I8, s * 3 + 1));
    Hypervector c = ops::sign_packed(ops::random_hv(200, ElementType::I8, s * 3 + 2));
    CHECK(ops::hamming(a, a) == 0);
    CHECK(ops::hamming(a, b) == ops::hamming(b, a));
    CHECK(ops::hamming(a, c) <= ops::hamming(a, b) + ops::hamming(b, c));
  }
}

TEST_CASE("cossim") {
  Hypervector v = ops::gaussian_hv(512, ElementType::F64, 31);
  CHECK(ops::cossim(v, v) == doctest::Approx(1.0));
  CHECK(ops::cossim(v, ops::sign_flip(v)) == doctest::Approx(-1.0));
  Hypervector e0 = ops::create(4, ElementType::F64, [](std::int64_t i) { return i == 0 ? 1.0 : 0.0; });
  Hypervector e1 = ops::create(4, ElementType::F64, [](std::int64_t i) { return i == 1 ? 1.0 : 0.0; });
  CHECK(ops::cossim(e0, e1) == 0.0);
  // zero-norm operand yields 0, not NaN
  CHECK(ops::cossim(ops::create(4, ElementType::F64), e0) == 0.0);

  // bounds under f64 accumulation
  for (std::uint64_t s = 0; s < 30; ++s) {
    Hypervector a = ops::gaussian_hv(100, ElementType::F64, 100 + s);
    Hypervector b = ops::gaussian_hv(100, ElementType::F64, 200 + s);
    double c = ops::cossim(a, b);
    CHECK(c >= -1.0 - 1e-9);
    CHECK(c <= 1.0 + 1e-9);
  }

  // packed cossim agrees with dense cossim on +-1 data
  Hypervector sa = ops::sign(ops::gaussian_hv(300, ElementType::F64, 7));
  Hypervector sb = ops::sign(ops::gaussian_hv(300, ElementType::F64, 8));
  CHECK(ops::cossim(ops::sign_packed(sa), ops::sign_packed(sb)) ==
        doctest::Approx(ops::cossim(sa, sb)).epsilon(1e-12));
}

TEST_CASE("matmul identity and shapes") {
  Hypervector v = hv_f64({1, 2});
  Hypermatrix eye = hm_f64(2, 2, {1, 0, 0, 1});
  Hypervector r = ops::matmul_vm(v, eye);
  CHECK(r == v);
  CHECK_THROWS_AS(ops::matmul_vm(hv_f64({1, 2, 3}), eye), Error);

  Hypermatrix a = ops::random_hm(3, 4, ElementType::I32, 1);
  Hypermatrix b = ops::random_hm(4, 5, ElementType::I32, 2);
  Hypermatrix c = ops::matmul_mm(a, b);
  CHECK(c.rows() == 3);
  CHECK(c.dim() == 5);
  // spot-check one entry against a plain loop
  std::int64_t acc = 0;
  for (int k = 0; k < 4; ++k) acc += a.get_as_int(1, k) * b.get_as_int(k, 3);
  CHECK(c.get_as_int(1, 3) == acc);
}

TEST_CASE("perforated matmul on constant integrand is exact") {
  const std::int64_t d = 8;
  Hypervector ones = ops::create(d, ElementType::F64, [](std::int64_t) { return 1.0; });
  Hypermatrix onesm = ops::create_matrix(d, 3, ElementType::F64,
                                         [](std::int64_t, std::int64_t) { return 1.0; });
  Hypervector full = ops::matmul_vm(ones, onesm);
  Hypervector perf = ops::matmul_vm(ones, onesm, PerforationSpec{0, d, 2});
  CHECK(full == perf);
  // same for integer accumulation
  Hypervector onesi = ops::create(d, ElementType::I32, [](std::int64_t) { return 1.0; });
  Hypermatrix onesmi = ops::create_matrix(d, 3, ElementType::I32,
                                          [](std::int64_t, std::int64_t) { return 1.0; });
  CHECK(ops::matmul_vm(onesi, onesmi) ==
        ops::matmul_vm(onesi, onesmi, PerforationSpec{0, d, 2}));
}

TEST_CASE("perforated matmul error vs full-matmul oracle at stride 2") {
  // Full matmul is the oracle; D=2048, stride 2, median over 100 trials.
  const std::int64_t d = 2048;
  auto median_rel_err = [&](bool positive) {
    std::vector<double> errs;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      Hypervector a = ops::gaussian_hv(d, ElementType::F64, 9000 + trial);
      Hypermatrix b = ops::gaussian_hm(d, 1, ElementType::F64, 9500 + trial);
      if (positive) {
        a = ops::absolute_value(a);
        b = ops::absolute_value(b);
      }
      double full = ops::matmul_vm(a, b).get_as_double(0);
      double perf = ops::matmul_vm(a, b, PerforationSpec{0, d, 2}).get_as_double(0);
      errs.push_back(std::abs(perf - full) / std::max(1e-12, std::abs(full)));
    }
    std::nth_element(errs.begin(), errs.begin() + 50, errs.end());
    return errs[50];
  };

  // Concentrated (positive) integrand: sampling error shrinks like 1/sqrt(D).
  // Observed median 0.017; frozen band below.
  double pos = median_rel_err(true);
  CHECK(pos < 0.15);
  CHECK(pos < 0.06);

  // Zero-mean integrand: perf-full and full are independent same-scale
  // normals, so the per-output relative error is |Cauchy| with median 1 —
  // no sampling scheme can shrink it. Observed median 0.840; frozen band.
  double sym = median_rel_err(false);
  CHECK(sym > 0.4);
  CHECK(sym < 1.6);
}

TEST_CASE("perforation identity: spec (0, D, 1) is bitwise the unperforated op") {
  Hypervector a = ops::gaussian_hv(500, ElementType::F64, 61);
  Hypermatrix b = ops::gaussian_hm(500, 7, ElementType::F64, 62);
  Hypermatrix cls = ops::gaussian_hm(7, 500, ElementType::F64, 63);
  PerforationSpec all{0, 500, 1};
  CHECK(ops::matmul_vm(a, b) == ops::matmul_vm(a, b, all));
  CHECK(ops::hamming_vm(a, cls) == ops::hamming_vm(a, cls, all));
  CHECK(ops::cossim_vm(a, cls) == ops::cossim_vm(a, cls, all));
  CHECK(ops::l2norm(a) == ops::l2norm(a, all));
  CHECK_THROWS_AS(ops::l2norm(a, PerforationSpec{0, 501, 1}), Error);
  CHECK_THROWS_AS(ops::l2norm(a, PerforationSpec{3, 3, 1}), Error);
}

TEST_CASE("hamming perforation is unscaled; matmul/l2norm perforation is scaled") {
  // first-half hamming: distance counts only first-half mismatches
  Hypervector a = hv_f64({1, 1, 1, 1, -1, -1, -1, -1});
  Hypervector b = ops::sign_flip(a);
  CHECK(ops::hamming(a, b) == 8);
  CHECK(ops::hamming(a, b, PerforationSpec{0, 4, 1}) == 4);

  // l2norm scaling: uniform vector keeps its norm under sampling
  Hypervector u = ops::create(16, ElementType::F64, [](std::int64_t) { return 2.0; });
  CHECK(ops::l2norm(u, PerforationSpec{0, 16, 4}) == doctest::Approx(ops::l2norm(u)));
}

TEST_CASE("parallel kernels are bit-identical to serial reference") {
  Hypervector q = ops::gaussian_hv(617, ElementType::F32, 5);
  Hypermatrix proj = ops::gaussian_hm(617, 1024, ElementType::F32, 6);
  Hypermatrix classes = ops::gaussian_hm(26, 1024, ElementType::F32, 7);
  Hypervector enc = ops::matmul_vm(q, proj);

  for (int threads : {1, 2, 8}) {
    par::set_threads(threads);
    CHECK(par::matmul_vm(q, proj) == enc);
    CHECK(par::cossim_vm(enc, classes) == ops::cossim_vm(enc, classes));
    CHECK(par::hamming_vm(enc, classes) == ops::hamming_vm(enc, classes));
    CHECK(par::l2norm_rows(classes) == ops::l2norm_rows(classes));
    CHECK(par::sign(classes) == ops::sign(classes));
    CHECK(par::sign_packed(classes) == ops::sign_packed(classes));
    CHECK(par::ewise(EwOp::Add, classes, classes) ==
          ops::ewise(EwOp::Add, classes, classes));
    CHECK(par::type_cast(classes, ElementType::I16) ==
          ops::type_cast(classes, ElementType::I16));
    PerforationSpec perf{0, 1024, 2};
    CHECK(par::matmul_vm(q, proj, {}) == enc);
    CHECK(par::hamming_vm(enc, classes, perf) == ops::hamming_vm(enc, classes, perf));
    Hypermatrix qs = ops::gaussian_hm(9, 617, ElementType::F32, 8);
    CHECK(par::matmul_mm(qs, proj) == ops::matmul_mm(qs, proj));
    Hypermatrix encs = ops::matmul_mm(qs, proj);
    CHECK(par::hamming_mm(encs, classes) == ops::hamming_mm(encs, classes));
    CHECK(par::cossim_mm(encs, classes) == ops::cossim_mm(encs, classes));
  }
  par::set_threads(0);
}
