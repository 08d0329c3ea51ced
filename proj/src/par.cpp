#include "hdkit/par.hpp"

#include <atomic>
#include <cstdlib>

#ifdef HDKIT_HAVE_OPENMP
#include <omp.h>
#endif

namespace hdkit::par {

namespace {

std::atomic<int> g_threads{0};  // 0 = uninitialized

int env_threads() {
  const char* s = std::getenv("HDKIT_THREADS");
  if (s == nullptr) return 0;
  int n = std::atoi(s);
  return n > 0 ? n : 0;
}

}  // namespace

int max_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n > 0) return n;
#ifdef HDKIT_HAVE_OPENMP
  int def = env_threads();
  if (def == 0) def = omp_get_max_threads();
#else
  int def = 1;
#endif
  g_threads.store(def, std::memory_order_relaxed);
  return def;
}

void set_threads(int n) { g_threads.store(n > 0 ? n : 0, std::memory_order_relaxed); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f) {
#ifdef HDKIT_HAVE_OPENMP
  int nt = max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) f(i);
#else
  for (std::int64_t i = 0; i < n; ++i) f(i);
#endif
}

Hypervector matmul_vm(const Hypervector& a, const Hypermatrix& b, const ops::Perf& perf) {
  // The serial kernel already streams b row-major with one accumulator array;
  // parallelizing the k loop would change float summation order, so instead
  // split the output axis into contiguous column blocks per thread.
  if (a.is_packed() || b.dim() < 256) return ops::matmul_vm(a, b, perf);
  PerforationSpec s = perf.value_or(PerforationSpec{0, a.dim(), 1});
  s.validate(a.dim());
  Hypervector out(a.elem(), b.dim());
  std::int64_t nblk = max_threads();
  std::int64_t blk = (b.dim() + nblk - 1) / nblk;
  parallel_for(nblk, [&](std::int64_t t) {
    std::int64_t j0 = t * blk;
    std::int64_t j1 = std::min(b.dim(), j0 + blk);
    if (j0 >= j1) return;
    dispatch_dense(a.elem(), [&](auto tag) {
      using T = decltype(tag);
      using Acc = std::conditional_t<std::is_integral_v<T>, std::int64_t, double>;
      std::vector<Acc> acc(static_cast<std::size_t>(j1 - j0), Acc{0});
      auto av = a.values<T>();
      for (std::int64_t k = s.begin; k < s.end; k += s.stride) {
        T x = av[static_cast<std::size_t>(k)];
        auto brow = b.row_values<T>(k);
        for (std::int64_t j = j0; j < j1; ++j)
          acc[static_cast<std::size_t>(j - j0)] +=
              static_cast<Acc>(x) * static_cast<Acc>(brow[static_cast<std::size_t>(j)]);
      }
      bool all = s.covers_all(a.dim());
      for (std::int64_t j = j0; j < j1; ++j) {
        Acc v = acc[static_cast<std::size_t>(j - j0)];
        if (!all) {
          if constexpr (std::is_integral_v<Acc>)
            v = v * a.dim() / s.visited();
          else
            v = v * static_cast<double>(a.dim()) / static_cast<double>(s.visited());
        }
        if constexpr (std::is_integral_v<Acc>)
          out.set_from_int(j, v);
        else
          out.set_from_double(j, v);
      }
    });
  });
  return out;
}

Hypermatrix matmul_mm(const Hypermatrix& a, const Hypermatrix& b, const ops::Perf& perf) {
  ElementType oe = a.is_packed() ? ElementType::I64 : a.elem();
  if (a.dim() != b.rows())
    throw Error("inner dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                std::to_string(b.rows()));
  Hypermatrix out(oe, a.rows(), b.dim());
  parallel_for(a.rows(), [&](std::int64_t r) {
    out.set_row(r, ops::matmul_vm(a.row_copy(r), b, perf));
  });
  return out;
}

Hypervector hamming_vm(const Hypervector& a, const Hypermatrix& b, const ops::Perf& perf) {
  if (a.dim() != b.dim()) throw Error("dim mismatch");
  if (a.elem() != b.elem()) throw Error("element type mismatch (use type_cast first)");
  PerforationSpec s = perf.value_or(PerforationSpec{0, a.dim(), 1});
  s.validate(a.dim());
  Hypervector out(ElementType::I64, b.rows());
  parallel_for(b.rows(), [&](std::int64_t r) {
    Hypervector row = b.row_copy(r);
    out.set_from_int(r, ops::hamming(a, row, s));
  });
  return out;
}

Hypermatrix hamming_mm(const Hypermatrix& a, const Hypermatrix& b, const ops::Perf& perf) {
  if (a.dim() != b.dim()) throw Error("dim mismatch");
  if (a.elem() != b.elem()) throw Error("element type mismatch (use type_cast first)");
  Hypermatrix out(ElementType::I64, a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::int64_t i) {
    Hypervector d = ops::hamming_vm(a.row_copy(i), b, perf);
    for (std::int64_t j = 0; j < b.rows(); ++j) out.set_from_int(i, j, d.get_as_int(j));
  });
  return out;
}

Hypervector cossim_vm(const Hypervector& a, const Hypermatrix& b, const ops::Perf& perf) {
  if (a.dim() != b.dim()) throw Error("dim mismatch");
  if (a.elem() != b.elem()) throw Error("element type mismatch (use type_cast first)");
  Hypervector out(ElementType::F64, b.rows());
  parallel_for(b.rows(), [&](std::int64_t r) {
    out.set_from_double(r, ops::cossim(a, b.row_copy(r), perf));
  });
  return out;
}

Hypermatrix cossim_mm(const Hypermatrix& a, const Hypermatrix& b, const ops::Perf& perf) {
  if (a.dim() != b.dim()) throw Error("dim mismatch");
  if (a.elem() != b.elem()) throw Error("element type mismatch (use type_cast first)");
  Hypermatrix out(ElementType::F64, a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::int64_t i) {
    Hypervector sims = ops::cossim_vm(a.row_copy(i), b, perf);
    for (std::int64_t j = 0; j < b.rows(); ++j)
      out.set_from_double(i, j, sims.get_as_double(j));
  });
  return out;
}

Hypervector l2norm_rows(const Hypermatrix& m, const ops::Perf& perf) {
  Hypervector out(ElementType::F64, m.rows());
  parallel_for(m.rows(), [&](std::int64_t r) {
    out.set_from_double(r, ops::l2norm(m.row_copy(r), perf));
  });
  return out;
}

Hypermatrix sign(const Hypermatrix& m) {
  if (m.is_packed()) return m;
  Hypermatrix out(m.elem(), m.rows(), m.dim());
  parallel_for(m.rows(), [&](std::int64_t r) {
    out.set_row(r, ops::sign(m.row_copy(r)));
  });
  return out;
}

Hypermatrix sign_packed(const Hypermatrix& m) {
  if (m.is_packed()) return m;
  Hypermatrix out(ElementType::Bin1, m.rows(), m.dim());
  parallel_for(m.rows(), [&](std::int64_t r) {
    out.set_row(r, ops::sign_packed(m.row_copy(r)));
  });
  return out;
}

Hypermatrix ewise(ops::EwOp op, const Hypermatrix& a, const Hypermatrix& b) {
  if (a.rows() != b.rows() || a.dim() != b.dim()) throw Error("shape mismatch");
  if (a.elem() != b.elem()) throw Error("element type mismatch (use type_cast first)");
  Hypermatrix out(a.elem(), a.rows(), a.dim());
  parallel_for(a.rows(), [&](std::int64_t r) {
    out.set_row(r, ops::ewise(op, a.row_copy(r), b.row_copy(r)));
  });
  return out;
}

Hypermatrix type_cast(const Hypermatrix& m, ElementType to) {
  if (to == m.elem()) return m;
  if (to == ElementType::Bin1) return sign_packed(m);
  Hypermatrix out(to, m.rows(), m.dim());
  parallel_for(m.rows(), [&](std::int64_t r) {
    out.set_row(r, ops::type_cast(m.row_copy(r), to));
  });
  return out;
}

}  // namespace hdkit::par
