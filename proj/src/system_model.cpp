#include "fastbeam/system_model.hpp"

#include <cmath>
#include <stdexcept>

namespace fastbeam {

namespace {

void check_dims(const CMat& h, const CMat& w, const std::vector<double>& noise) {
  if (h.rows != w.rows || h.cols != w.cols) throw std::invalid_argument("channel/beamformer dimension mismatch");
  if (noise.size() != static_cast<size_t>(h.cols)) throw std::invalid_argument("noise dimension mismatch");
}

}  // namespace

std::vector<double> compute_sinr(const CMat& h, const CMat& w, const std::vector<double>& noise) {
  check_dims(h, w, noise);
  const int k_users = h.cols;
  std::vector<double> sinr(k_users);
  for (int k = 0; k < k_users; ++k) {
    const CVec hk = h.col(k);
    double desired = 0.0, interference = 0.0;
    for (int j = 0; j < k_users; ++j) {
      const double g = std::norm(dot(hk, w.col(j)));
      if (j == k)
        desired = g;
      else
        interference += g;
    }
    sinr[k] = desired / (interference + noise[k]);
  }
  return sinr;
}

double sum_rate(const CMat& h, const CMat& w, const std::vector<double>& noise) {
  double rate = 0.0;
  for (double g : compute_sinr(h, w, noise)) rate += std::log2(1.0 + g);
  return rate;
}

double total_power(const CMat& w) {
  double p = 0.0;
  for (const auto& z : w.a) p += std::norm(z);
  return p;
}

CMat mmse_directions(const CMat& h, const PowerVector& q, const std::vector<double>& noise) {
  const int nt = h.rows, k_users = h.cols;
  if (q.size() != static_cast<size_t>(k_users)) throw std::invalid_argument("q dimension mismatch");
  CMat gram(nt, nt);
  for (int j = 0; j < k_users; ++j) {
    const CVec hj = h.col(j);
    for (int r = 0; r < nt; ++r)
      for (int c = 0; c < nt; ++c) gram(r, c) += q[j] * hj[r] * std::conj(hj[c]);
  }
  CMat dirs(nt, k_users);
  for (int k = 0; k < k_users; ++k) {
    CMat A = gram;
    for (int r = 0; r < nt; ++r) A(r, r) += noise[k];
    CVec g = hermitian_solve(A, h.col(k));
    const double n = norm2(g);
    if (n == 0.0) throw std::runtime_error("mmse_directions: zero channel column");
    for (auto& z : g) z /= n;
    dirs.set_col(k, g);
  }
  return dirs;
}

DualityWorkspace make_duality_workspace(const CMat& h, const CMat& directions,
                                        const std::vector<double>& noise) {
  const int k_users = h.cols;
  DualityWorkspace ws;
  ws.directions = directions;
  ws.noise = noise;
  ws.coupling.assign(static_cast<size_t>(k_users) * k_users, 0.0);
  ws.inv_gain.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const CVec hk = h.col(k);
    for (int kp = 0; kp < k_users; ++kp) {
      const double g = std::norm(dot(directions.col(kp), hk));
      if (kp == k)
        ws.inv_gain[k] = 1.0 / g;
      else
        ws.coupling[static_cast<size_t>(k) * k_users + kp] = g;
    }
  }
  return ws;
}

std::vector<double> extended_matrix(const DualityWorkspace& ws, double power_budget, bool uplink) {
  const int k = ws.users();
  const int n = k + 1;
  std::vector<double> m(static_cast<size_t>(n) * n, 0.0);
  auto cpl = [&](int r, int c) {
    return uplink ? ws.coupling[static_cast<size_t>(c) * k + r] : ws.coupling[static_cast<size_t>(r) * k + c];
  };
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) m[static_cast<size_t>(r) * n + c] = ws.inv_gain[r] * cpl(r, c);
    m[static_cast<size_t>(r) * n + k] = ws.inv_gain[r] * ws.noise[r];
  }
  for (int c = 0; c <= k; ++c) {
    double col_sum = 0.0;
    for (int r = 0; r < k; ++r) col_sum += m[static_cast<size_t>(r) * n + c];
    m[static_cast<size_t>(k) * n + c] = col_sum / power_budget;
  }
  return m;
}

SinrRecovery recover_beamforming_sinr(const CMat& h, const PowerVector& q, double power_budget,
                                      const std::vector<double>& noise) {
  const int k_users = h.cols;
  double q_sum = 0.0;
  for (double v : q) {
    if (v < 0.0) throw std::invalid_argument("uplink powers must be nonnegative");
    q_sum += v;
  }
  if (q_sum > power_budget * (1.0 + 1e-9)) throw std::invalid_argument("uplink powers exceed the budget");

  SinrRecovery out;
  const CMat dirs = mmse_directions(h, q, noise);
  const auto ws = make_duality_workspace(h, dirs, noise);
  const auto ext = extended_matrix(ws, power_budget, /*uplink=*/false);
  const EigPair eig = principal_eig(ext, k_users + 1);
  out.balanced_sinr = 1.0 / eig.value;
  out.p.assign(eig.vector.begin(), eig.vector.end() - 1);
  out.w = dirs;
  for (int k = 0; k < k_users; ++k) {
    const double s = std::sqrt(out.p[k]);
    for (int r = 0; r < h.rows; ++r) out.w(r, k) *= s;
  }
  return out;
}

CMat recover_beamforming_sumrate(const CMat& h, const PowerVector& q, double noise_power) {
  const int nt = h.rows, k_users = h.cols;
  if (q.size() != static_cast<size_t>(k_users)) throw std::invalid_argument("q dimension mismatch");
  CMat A = CMat::identity(nt);
  for (int j = 0; j < k_users; ++j) {
    if (q[j] < 0.0) throw std::invalid_argument("uplink powers must be nonnegative");
    const CVec hj = h.col(j);
    for (int r = 0; r < nt; ++r)
      for (int c = 0; c < nt; ++c) A(r, c) += (q[j] / noise_power) * hj[r] * std::conj(hj[c]);
  }
  const CholeskySolver chol(A);
  CMat w(nt, k_users);
  for (int k = 0; k < k_users; ++k) {
    if (q[k] == 0.0) continue;  // zero-power user keeps a zero column
    CVec g = chol.solve(h.col(k));
    const double n = norm2(g);
    const double s = std::sqrt(q[k]) / n;
    for (int r = 0; r < nt; ++r) w(r, k) = s * g[r];
  }
  return w;
}

}  // namespace fastbeam
