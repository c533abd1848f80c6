#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fastbeam {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

/// Dense complex matrix, row-major storage.
struct CMat {
  int rows = 0;
  int cols = 0;
  std::vector<cplx> a;

  CMat() = default;
  CMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  cplx& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  const cplx& operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  static CMat identity(int n);

  CVec col(int c) const;
  void set_col(int c, const CVec& v);
};

double norm2(const CVec& v);
cplx dot(const CVec& x, const CVec& y);  // x^H y
bool all_finite(const CMat& m);

CVec matvec(const CMat& m, const CVec& v);

/// x = A^{-1} b for Hermitian positive-definite A, via Cholesky.
/// Throws std::invalid_argument if A is not Hermitian (1e-10 relative) and
/// std::runtime_error if a pivot falls below 1e-12 * max diagonal.
CVec hermitian_solve(const CMat& A, const CVec& b);

/// Cholesky factor cache for repeated solves against one matrix.
class CholeskySolver {
 public:
  explicit CholeskySolver(const CMat& A);  // same preconditions as hermitian_solve
  CVec solve(const CVec& b) const;
  int dim() const { return n_; }

 private:
  int n_;
  std::vector<cplx> l_;  // lower factor, row-major
};

struct EigPair {
  double value = 0.0;
  std::vector<double> vector;  // scaled so the last component equals 1
};

/// Dominant eigenpair of a real nonnegative square matrix by power iteration.
/// Intended for irreducible (Perron-Frobenius) inputs; the returned vector has
/// strictly positive entries in that regime. Throws std::runtime_error when the
/// eigenvalue has not stabilised after max_iters.
EigPair principal_eig(const std::vector<double>& m, int n, int max_iters = 10000,
                      double tol = 1e-12);

}  // namespace fastbeam
