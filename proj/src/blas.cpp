#include "blas.hpp"

#include <Eigen/Core>

namespace multiface::blas {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
          const double* b, double beta, double* c) {
    if (m == 0 || n == 0) return;
    const auto M = static_cast<Eigen::Index>(m), N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(k);
    Eigen::Map<RowMajor> out(c, M, N);
    if (beta == 0.0) {
        out.setZero();
    } else if (beta != 1.0) {
        out *= beta;
    }
    if (k == 0) return;
    // Stored shapes: a is m x k (or k x m when transposed), b is k x n (or n x k).
    const ConstMap am(a, ta == Trans::no ? M : K, ta == Trans::no ? K : M);
    const ConstMap bm(b, tb == Trans::no ? K : N, tb == Trans::no ? N : K);
    if (ta == Trans::no && tb == Trans::no) {
        out.noalias() += alpha * am * bm;
    } else if (ta == Trans::no) {
        out.noalias() += alpha * am * bm.transpose();
    } else if (tb == Trans::no) {
        out.noalias() += alpha * am.transpose() * bm;
    } else {
        out.noalias() += alpha * am.transpose() * bm.transpose();
    }
}

}  // namespace multiface::blas
