#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kbound {

// Dense symmetric matrix, full row-major storage. Everything in this project
// that needs a factorization is small (reduced systems are 2d x 2d with
// 2d <= 256, dense verification paths cap at m <= 2048), so the solvers below
// are plain textbook implementations with no blocking.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<const double> data() const { return a_; }

  static SymMatrix identity(std::size_t n) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  void set_symmetric(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

// Solves A x = b for symmetric positive definite A via a Cholesky
// factorization computed in place on a copy. Throws std::runtime_error if a
// non-positive pivot shows up.
std::vector<double> cholesky_solve(const SymMatrix& a, std::span<const double> b);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  SymMatrix vectors;           // column k is the eigenvector for values[k]
};

// Cyclic Jacobi eigensolver for symmetric matrices; eigenpairs sorted by
// ascending eigenvalue.
EigenDecomposition jacobi_eigensolve(const SymMatrix& a);

// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via the Jacobi
// eigendecomposition; eigenvalues below cutoff_ratio * max|eigenvalue| are
// treated as zero.
SymMatrix pseudo_inverse(const SymMatrix& a, double cutoff_ratio = 1e-10);

// Numerically stable sum used by the aggregation paths: pairwise summation,
// deterministic for a fixed element order.
double pairwise_sum(std::span<const double> values);

}  // namespace kbound
