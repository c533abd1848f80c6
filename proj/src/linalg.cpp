#include "fastbeam/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace fastbeam {

CMat CMat::identity(int n) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CVec CMat::col(int c) const {
  CVec v(rows);
  for (int r = 0; r < rows; ++r) v[r] = (*this)(r, c);
  return v;
}

void CMat::set_col(int c, const CVec& v) {
  for (int r = 0; r < rows; ++r) (*this)(r, c) = v[r];
}

double norm2(const CVec& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

cplx dot(const CVec& x, const CVec& y) {
  cplx s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

bool all_finite(const CMat& m) {
  for (const auto& z : m.a) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

CVec matvec(const CMat& m, const CVec& v) {
  if (static_cast<int>(v.size()) != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
  CVec out(m.rows, cplx(0.0));
  for (int r = 0; r < m.rows; ++r) {
    cplx s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += m(r, c) * v[c];
    out[r] = s;
  }
  return out;
}

namespace {

void check_hermitian(const CMat& A) {
  if (A.rows != A.cols) throw std::invalid_argument("hermitian_solve: matrix not square");
  double scale = 0.0;
  for (const auto& z : A.a) scale = std::max(scale, std::abs(z));
  for (int i = 0; i < A.rows; ++i) {
    for (int j = i; j < A.cols; ++j) {
      if (std::abs(A(i, j) - std::conj(A(j, i))) > 1e-10 * std::max(scale, 1e-300)) {
        throw std::invalid_argument("hermitian_solve: matrix not Hermitian");
      }
    }
  }
}

}  // namespace

CholeskySolver::CholeskySolver(const CMat& A) : n_(A.rows), l_(A.a.size()) {
  check_hermitian(A);
  double max_diag = 0.0;
  for (int i = 0; i < n_; ++i) max_diag = std::max(max_diag, A(i, i).real());
  const double pivot_floor = 1e-12 * std::max(max_diag, 1e-300);

  // In-place lower Cholesky: A = L L^H.
  const int n = n_;
  auto L = [&](int r, int c) -> cplx& { return l_[static_cast<size_t>(r) * n + c]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L(i, j) = A(i, j);
  for (int j = 0; j < n; ++j) {
    double d = L(j, j).real();
    for (int k = 0; k < j; ++k) d -= std::norm(L(j, k));
    if (!(d > pivot_floor)) throw std::runtime_error("hermitian_solve: pivot breakdown, matrix not PD");
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      cplx s = L(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / ljj;
    }
  }
}

CVec CholeskySolver::solve(const CVec& b) const {
  if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("hermitian_solve: rhs dimension mismatch");
  const int n = n_;
  auto L = [&](int r, int c) -> const cplx& { return l_[static_cast<size_t>(r) * n + c]; };
  CVec y(b);
  for (int i = 0; i < n; ++i) {
    cplx s = y[i];
    for (int k = 0; k < i; ++k) s -= L(i, k) * y[k];
    y[i] = s / L(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    cplx s = y[i];
    for (int k = i + 1; k < n; ++k) s -= std::conj(L(k, i)) * y[k];
    y[i] = s / L(i, i);
  }
  return y;
}

CVec hermitian_solve(const CMat& A, const CVec& b) { return CholeskySolver(A).solve(b); }

EigPair principal_eig(const std::vector<double>& m, int n, int max_iters, double tol) {
  if (static_cast<int>(m.size()) != n * n) throw std::invalid_argument("principal_eig: bad dimensions");
  for (double x : m) {
    if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("principal_eig: entries must be finite and >= 0");
  }

  std::vector<double> v(n, 1.0 / n), w(n);
  double lambda = 0.0, lambda_prev = -1.0;
  for (int it = 0; it < max_iters; ++it) {
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += m[static_cast<size_t>(r) * n + c] * v[c];
      w[r] = s;
    }
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw std::runtime_error("principal_eig: matrix annihilated the iterate");
    for (int r = 0; r < n; ++r) v[r] = w[r] / nrm;
    lambda = nrm;  // v stays nonnegative, so ||Mv|| is the Rayleigh estimate
    if (it > 0 && std::abs(lambda - lambda_prev) <= tol * std::max(lambda, 1e-300)) {
      // residual check in infinity norm
      double resid = 0.0;
      for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += m[static_cast<size_t>(r) * n + c] * v[c];
        resid = std::max(resid, std::abs(s - lambda * v[r]));
      }
      if (resid <= 1e-9 * lambda) {
        EigPair out;
        out.value = lambda;
        out.vector.assign(v.begin(), v.end());
        const double last = out.vector.back();
        if (last != 0.0) {
          for (double& x : out.vector) x /= last;
        }
        return out;
      }
    }
    lambda_prev = lambda;
  }
  throw std::runtime_error("principal_eig: power iteration did not converge");
}

}  // namespace fastbeam
