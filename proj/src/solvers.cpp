#include "fastbeam/solvers.hpp"

#include <cmath>
#include <stdexcept>

#include "fastbeam/rng.hpp"

namespace fastbeam {

namespace {

void reject_degenerate(const CMat& h) {
  for (int k = 0; k < h.cols; ++k) {
    if (norm2(h.col(k)) == 0.0) throw std::invalid_argument("solver: zero channel column");
  }
}

}  // namespace

SinrBalanceResult sinr_balance_solve(const CMat& h, double power_budget,
                                     const std::vector<double>& noise, double tol, int max_iter) {
  if (!(power_budget > 0.0)) throw std::invalid_argument("power budget must be > 0");
  reject_degenerate(h);
  const int k_users = h.cols;

  SinrBalanceResult res;
  res.q.assign(k_users, power_budget / k_users);
  double gamma_prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const CMat dirs = mmse_directions(h, res.q, noise);
    const auto ws = make_duality_workspace(h, dirs, noise);
    const auto ext = extended_matrix(ws, power_budget, /*uplink=*/true);
    const EigPair eig = principal_eig(ext, k_users + 1);
    res.q.assign(eig.vector.begin(), eig.vector.end() - 1);
    const double gamma = 1.0 / eig.value;
    res.report.objective_trace.push_back(gamma);
    res.report.iterations = it + 1;
    if (it > 0 && std::abs(gamma - gamma_prev) <= tol * gamma) {
      res.report.converged = true;
      break;
    }
    gamma_prev = gamma;
  }
  res.balanced_sinr = res.report.objective_trace.back();
  res.report.final_objective = res.balanced_sinr;

  auto rec = recover_beamforming_sinr(h, res.q, power_budget, noise);
  res.w = std::move(rec.w);
  return res;
}

namespace {

// Precoder columns for a given power multiplier; A is the weighted channel Gram.
CMat wmmse_precoders(const CMat& h, const CMat& A, const std::vector<cplx>& rx,
                     const std::vector<double>& wt, double mu) {
  const int nt = h.rows, k_users = h.cols;
  CMat Areg = A;
  for (int r = 0; r < nt; ++r) Areg(r, r) += mu;
  const CholeskySolver chol(Areg);
  CMat w(nt, k_users);
  for (int k = 0; k < k_users; ++k) {
    CVec rhs = h.col(k);
    for (auto& z : rhs) z *= wt[k] * rx[k];
    w.set_col(k, chol.solve(rhs));
  }
  return w;
}

}  // namespace

WmmseResult wmmse_solve(const CMat& h, double power_budget, const std::vector<double>& noise,
                        double tol, int max_iter, WmmseInit init, std::uint64_t init_seed) {
  if (!(power_budget > 0.0)) throw std::invalid_argument("power budget must be > 0");
  reject_degenerate(h);
  const int nt = h.rows, k_users = h.cols;

  WmmseResult res;
  res.w = CMat(nt, k_users);
  if (init == WmmseInit::Mrt) {
    for (int k = 0; k < k_users; ++k) {
      CVec hk = h.col(k);
      const double s = std::sqrt(power_budget / k_users) / norm2(hk);
      for (int r = 0; r < nt; ++r) res.w(r, k) = s * hk[r];
    }
  } else {
    Rng rng(init_seed);
    for (auto& z : res.w.a) z = cplx(rng.normal(), rng.normal());
    const double s = std::sqrt(power_budget / total_power(res.w));
    for (auto& z : res.w.a) z *= s;
  }

  double rate_prev = sum_rate(h, res.w, noise);
  res.report.objective_trace.push_back(rate_prev);
  for (int it = 0; it < max_iter; ++it) {
    // receiver and MSE-weight updates
    std::vector<cplx> rx(k_users);
    std::vector<double> wt(k_users);
    for (int k = 0; k < k_users; ++k) {
      const CVec hk = h.col(k);
      double den = noise[k];
      for (int j = 0; j < k_users; ++j) den += std::norm(dot(hk, res.w.col(j)));
      const cplx gain = dot(hk, res.w.col(k));
      rx[k] = gain / den;
      const double mse = 1.0 - (std::conj(rx[k]) * gain).real();
      wt[k] = 1.0 / mse;
    }
    CMat A(nt, nt);
    for (int j = 0; j < k_users; ++j) {
      const CVec hj = h.col(j);
      const double c = wt[j] * std::norm(rx[j]);
      for (int r = 0; r < nt; ++r)
        for (int cc = 0; cc < nt; ++cc) A(r, cc) += c * hj[r] * std::conj(hj[cc]);
    }
    // power multiplier: mu = 0 when feasible, otherwise bisect to the budget
    CMat w_new(nt, k_users);
    bool mu0_ok = false;
    try {
      w_new = wmmse_precoders(h, A, rx, wt, 0.0);
      mu0_ok = total_power(w_new) <= power_budget;
    } catch (const std::runtime_error&) {
      mu0_ok = false;  // singular at mu = 0
    }
    if (!mu0_ok) {
      double hi = 1e-6;
      int doublings = 0;
      while (total_power(wmmse_precoders(h, A, rx, wt, hi)) > power_budget) {
        hi *= 2.0;
        if (++doublings > 200) throw std::runtime_error("wmmse: power bisection bracket failure");
      }
      double lo = 0.0;
      for (int b = 0; b < 100; ++b) {
        const double mid = 0.5 * (lo + hi);
        double pw;
        try {
          pw = total_power(wmmse_precoders(h, A, rx, wt, mid));
        } catch (const std::runtime_error&) {
          pw = power_budget * 2.0;  // singular counts as infeasible
        }
        (pw > power_budget ? lo : hi) = mid;
      }
      w_new = wmmse_precoders(h, A, rx, wt, hi);
    }
    res.w = std::move(w_new);

    const double rate = sum_rate(h, res.w, noise);
    res.report.objective_trace.push_back(rate);
    res.report.iterations = it + 1;
    if (rate - rate_prev <= tol * std::max(std::abs(rate), 1e-12)) {
      res.report.converged = true;
      break;
    }
    rate_prev = rate;
  }
  res.report.final_objective = res.report.objective_trace.back();
  res.q.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    double p = 0.0;
    for (int r = 0; r < nt; ++r) p += std::norm(res.w(r, k));
    res.q[k] = p;
  }
  return res;
}

Dataset label_dataset(const Dataset& ds, ProblemKind problem, DatasetBuildStats* stats) {
  if (ds.samples.empty()) throw std::invalid_argument("label_dataset: empty dataset");
  const Labeler labeler = make_labeler(problem, ds.power_budget, ds.noise);
  Dataset out = ds;
  out.samples.clear();
  int dropped = 0;
  for (const auto& s : ds.samples) {
    Sample labeled = s;
    try {
      labeled.label = labeler(s.h);
    } catch (const std::exception&) {
      ++dropped;
      continue;
    }
    out.samples.push_back(std::move(labeled));
  }
  if (stats) {
    stats->requested = static_cast<int>(ds.samples.size());
    stats->dropped = dropped;
  }
  if (dropped * 100 > static_cast<int>(ds.samples.size()))
    throw std::runtime_error("label_dataset: more than 1% of samples dropped");
  return out;
}

Labeler make_labeler(ProblemKind problem, double power_budget, const std::vector<double>& noise) {
  if (problem == ProblemKind::SinrBalancing) {
    return [power_budget, noise](const CMat& h) { return sinr_balance_solve(h, power_budget, noise).q; };
  }
  return [power_budget, noise](const CMat& h) { return wmmse_solve(h, power_budget, noise).q; };
}

}  // namespace fastbeam
