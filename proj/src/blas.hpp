#pragma once

#include <cstddef>

namespace multiface::blas {

enum class Trans { no, yes };

// C[m,n] = alpha * op(A)[m,k] * op(B)[k,n] + beta * C, row-major.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, const double* b, double beta, double* c);

}  // namespace multiface::blas
