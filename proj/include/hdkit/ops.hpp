#pragma once

// Serial reference implementations of the HDC primitives. Every other
// execution path in the project (OpenMP kernels, lowered loop nests, the
// accelerator simulator) is tested for equivalence against these.
//
// Conventions shared by all reductions:
//   - float reductions accumulate in f64, integer reductions in i64,
//     in ascending index order;
//   - Hamming treats an element as +1 when its sign bit would be (>= 0);
//   - perforation visits {begin, begin+stride, ... < end} of the reduction
//     axis; matmul/l2norm rescale by full/visited, hamming/cossim do not.

#include <functional>
#include <optional>

#include "hdkit/perforation.hpp"
#include "hdkit/rng.hpp"
#include "hdkit/scalar.hpp"
#include "hdkit/tensor.hpp"

namespace hdkit::ops {

enum class EwOp { Add, Sub, Mul, Div };

using Perf = std::optional<PerforationSpec>;

// --- constructors -----------------------------------------------------------

Hypervector create(std::int64_t dim, ElementType elem);
Hypervector create(std::int64_t dim, ElementType elem,
                   const std::function<double(std::int64_t)>& init);
Hypermatrix create_matrix(std::int64_t rows, std::int64_t dim, ElementType elem);
Hypermatrix create_matrix(std::int64_t rows, std::int64_t dim, ElementType elem,
                          const std::function<double(std::int64_t, std::int64_t)>& init);

// random_*: uniform over {-1,+1} for integer and Bin1 elements, uniform
// [-1,1) for floats. gaussian_*: standard normal (cast per element type).
Hypervector random_hv(std::int64_t dim, ElementType elem, std::uint64_t seed);
Hypermatrix random_hm(std::int64_t rows, std::int64_t dim, ElementType elem,
                      std::uint64_t seed);
Hypervector gaussian_hv(std::int64_t dim, ElementType elem, std::uint64_t seed);
Hypermatrix gaussian_hm(std::int64_t rows, std::int64_t dim, ElementType elem,
                        std::uint64_t seed);

// --- element-wise -----------------------------------------------------------

Hypervector wrap_shift(const Hypervector& v, std::int64_t shift);

// sign keeps the input element type (+1/-1 values); sign_packed is the
// binarized variant producing a packed Bin1 tensor.
Hypervector sign(const Hypervector& v);
Hypermatrix sign(const Hypermatrix& m);
Hypervector sign_packed(const Hypervector& v);
Hypermatrix sign_packed(const Hypermatrix& m);

Hypervector sign_flip(const Hypervector& v);
Hypermatrix sign_flip(const Hypermatrix& m);
Hypervector absolute_value(const Hypervector& v);
Hypermatrix absolute_value(const Hypermatrix& m);
Hypervector cosine(const Hypervector& v);
Hypermatrix cosine(const Hypermatrix& m);

Hypervector ewise(EwOp op, const Hypervector& a, const Hypervector& b);
Hypermatrix ewise(EwOp op, const Hypermatrix& a, const Hypermatrix& b);

// --- shape / access ---------------------------------------------------------

Scalar get_element(const Hypervector& v, std::int64_t i);
Scalar get_element(const Hypermatrix& m, std::int64_t r, std::int64_t c);
Hypervector type_cast(const Hypervector& v, ElementType to);
Hypermatrix type_cast(const Hypermatrix& m, ElementType to);
Hypermatrix matrix_transpose(const Hypermatrix& m);
Hypervector get_matrix_row(const Hypermatrix& m, std::int64_t r);
void set_matrix_row(Hypermatrix& m, const Hypervector& v, std::int64_t r);

std::int64_t arg_min(const Hypervector& v);
std::int64_t arg_max(const Hypervector& v);
Hypervector arg_min_rows(const Hypermatrix& m);
Hypervector arg_max_rows(const Hypermatrix& m);

// --- reductions -------------------------------------------------------------

double l2norm(const Hypervector& v, const Perf& perf = {});
Hypervector l2norm_rows(const Hypermatrix& m, const Perf& perf = {});

std::int64_t hamming(const Hypervector& a, const Hypervector& b, const Perf& perf = {});
Hypervector hamming_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf = {});
Hypermatrix hamming_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf = {});

double cossim(const Hypervector& a, const Hypervector& b, const Perf& perf = {});
Hypervector cossim_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf = {});
Hypermatrix cossim_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf = {});

Hypervector matmul_vm(const Hypervector& a, const Hypermatrix& b, const Perf& perf = {});
Hypermatrix matmul_mm(const Hypermatrix& a, const Hypermatrix& b, const Perf& perf = {});

}  // namespace hdkit::ops
