#pragma once

// OpenMP twins of the hot reference kernels. Parallelism is always over
// independent output elements (rows, classes, or flat element index) and the
// inner reduction order is the same ascending order the serial kernels use,
// so results are bit-identical to hdkit::ops for every element type and
// invariant under thread count.

#include "hdkit/ops.hpp"

namespace hdkit::par {

// Worker cap: HDKIT_THREADS env var if set, else OpenMP's default. Returns
// the number of threads parallel regions will use (1 when built serial).
int max_threads();
void set_threads(int n);

Hypervector matmul_vm(const Hypervector& a, const Hypermatrix& b,
                      const ops::Perf& perf = {});
Hypermatrix matmul_mm(const Hypermatrix& a, const Hypermatrix& b,
                      const ops::Perf& perf = {});
Hypervector hamming_vm(const Hypervector& a, const Hypermatrix& b,
                       const ops::Perf& perf = {});
Hypermatrix hamming_mm(const Hypermatrix& a, const Hypermatrix& b,
                       const ops::Perf& perf = {});
Hypervector cossim_vm(const Hypervector& a, const Hypermatrix& b,
                      const ops::Perf& perf = {});
Hypermatrix cossim_mm(const Hypermatrix& a, const Hypermatrix& b,
                      const ops::Perf& perf = {});
Hypervector l2norm_rows(const Hypermatrix& m, const ops::Perf& perf = {});
Hypermatrix sign(const Hypermatrix& m);
Hypermatrix sign_packed(const Hypermatrix& m);
Hypermatrix ewise(ops::EwOp op, const Hypermatrix& a, const Hypermatrix& b);
Hypermatrix type_cast(const Hypermatrix& m, ElementType to);

// Run f(i) for i in [0, n) across the worker pool with a static schedule.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f);

}  // namespace hdkit::par
