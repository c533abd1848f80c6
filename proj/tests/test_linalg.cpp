#include <cmath>

#include "doctest.h"
#include "fastbeam/linalg.hpp"
#include "fastbeam/rng.hpp"

using namespace fastbeam;

namespace {

// random Hermitian positive-definite matrix: sigma*I + G G^H
CMat random_hpd(int n, Rng& rng, double ridge = 0.5) {
  CMat g(n, n);
  for (auto& z : g.a) z = cplx(rng.normal(), rng.normal());
  CMat a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      cplx s = 0.0;
      for (int k = 0; k < n; ++k) s += g(r, k) * std::conj(g(c, k));
      a(r, c) = s;
    }
  for (int i = 0; i < n; ++i) a(i, i) += ridge;
  return a;
}

double perron_residual(const std::vector<double>& m, int n, const EigPair& e) {
  double worst = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += m[static_cast<size_t>(r) * n + c] * e.vector[c];
    worst = std::max(worst, std::abs(s - e.value * e.vector[r]));
  }
  return worst;
}

// Perron root bounds for a nonnegative matrix (Collatz-Wielandt with x = 1)
void check_perron_bounds(const std::vector<double>& m, int n, double lambda) {
  double min_row = 1e300, max_row = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += m[static_cast<size_t>(r) * n + c];
    min_row = std::min(min_row, s);
    max_row = std::max(max_row, s);
  }
  CHECK(lambda >= min_row - 1e-9 * max_row);
  CHECK(lambda <= max_row + 1e-9 * max_row);
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("hermitian_solve identity returns rhs") {
    const CMat a = CMat::identity(3);
    const CVec b = {cplx(1, 2), cplx(-0.5, 0), cplx(3, -1)};
    const CVec x = hermitian_solve(a, b);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(x[i] - b[i]) == doctest::Approx(0.0));
  }

  TEST_CASE("hermitian_solve scaled identity") {
    CMat a = CMat::identity(3);
    for (int i = 0; i < 3; ++i) a(i, i) = 2.0;
    const CVec x = hermitian_solve(a, CVec(3, cplx(1.0)));
    for (int i = 0; i < 3; ++i) CHECK(x[i].real() == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("hermitian_solve residual oracle on random PD systems") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 4;
      const CMat a = random_hpd(n, rng);
      CVec b(n);
      for (auto& z : b) z = cplx(rng.normal(), rng.normal());
      const CVec x = hermitian_solve(a, b);
      const CVec ax = matvec(a, x);
      double resid = 0.0, bn = norm2(b);
      for (int i = 0; i < n; ++i) resid += std::norm(ax[i] - b[i]);
      CHECK(std::sqrt(resid) <= 1e-8 * bn);
    }
  }

  TEST_CASE("hermitian_solve rejects non-hermitian input") {
    CMat a = CMat::identity(2);
    a(0, 1) = cplx(1.0, 0.0);  // a(1,0) stays 0
    CHECK_THROWS_AS(hermitian_solve(a, CVec(2, cplx(1.0))), std::invalid_argument);
  }

  TEST_CASE("hermitian_solve pivot breakdown on singular matrix") {
    CMat a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 1.0;  // rank 1
    CHECK_THROWS_AS(hermitian_solve(a, CVec(2, cplx(1.0))), std::runtime_error);
  }

  TEST_CASE("principal_eig diagonal dominant value") {
    const std::vector<double> m = {3.0, 0.0, 0.0, 1.0};
    const EigPair e = principal_eig(m, 2);
    CHECK(e.value == doctest::Approx(3.0).epsilon(1e-9));
  }

  TEST_CASE("principal_eig symmetric exchange") {
    const std::vector<double> m = {0.0, 1.0, 1.0, 0.0};
    const EigPair e = principal_eig(m, 2);
    CHECK(e.value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(e.vector[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(e.vector[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("principal_eig matches repeated-squaring oracle on random positive matrices") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 5;
      std::vector<double> m(n * n);
      for (auto& v : m) v = 0.05 + rng.uniform();

      // oracle: square the matrix repeatedly; columns converge to the Perron
      // direction, and the value follows from one mat-vec with that direction
      std::vector<double> p = m;
      for (int s = 0; s < 40; ++s) {
        std::vector<double> q(n * n, 0.0);
        double scale = 0.0;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += p[r * n + k] * p[k * n + c];
            q[r * n + c] = acc;
            scale = std::max(scale, acc);
          }
        for (auto& v : q) v /= scale;  // keep finite
        p = std::move(q);
      }
      std::vector<double> v(n);
      double vn = 0.0;
      for (int r = 0; r < n; ++r) {
        v[r] = p[r * n];  // first column
        vn += v[r] * v[r];
      }
      vn = std::sqrt(vn);
      double lambda_oracle = 0.0;
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += m[r * n + c] * v[c] / vn;
        lambda_oracle = std::max(lambda_oracle, acc / (v[r] / vn));
      }

      const EigPair e = principal_eig(m, n);
      CHECK(e.value == doctest::Approx(lambda_oracle).epsilon(1e-7));
      CHECK(perron_residual(m, n, e) <= 1e-9 * e.value * 10.0);
      for (double x : e.vector) CHECK(x > 0.0);
      CHECK(e.vector.back() == doctest::Approx(1.0));
      check_perron_bounds(m, n, e.value);
    }
  }

  TEST_CASE("principal_eig rejects negative entries") {
    CHECK_THROWS_AS(principal_eig({1.0, -0.1, 0.2, 1.0}, 2), std::invalid_argument);
  }
}
