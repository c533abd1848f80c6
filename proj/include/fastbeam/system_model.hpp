#pragma once

#include <vector>

#include "fastbeam/linalg.hpp"

namespace fastbeam {

using PowerVector = std::vector<double>;

/// Per-user downlink SINRs, linear scale.
std::vector<double> compute_sinr(const CMat& h, const CMat& w, const std::vector<double>& noise);

/// sum_k log2(1 + sinr_k), bits/s/Hz.
double sum_rate(const CMat& h, const CMat& w, const std::vector<double>& noise);

/// sum_k ||w_k||_2^2.
double total_power(const CMat& w);

/// Unit-norm MMSE directions for the virtual uplink with powers q:
/// column k is (sigma_k^2 I + sum_j q_j h_j h_j^H)^{-1} h_k normalized.
CMat mmse_directions(const CMat& h, const PowerVector& q, const std::vector<double>& noise);

/// Coupling data for the extended eigenproblem. The off-diagonal coupling
/// matrix holds |w_dir_{k'}^H h_k|^2 at (k,k') with a zero diagonal; its
/// transpose couples the virtual uplink. inv_gain is 1/|w_dir_k^H h_k|^2.
struct DualityWorkspace {
  CMat directions;                     // unit-norm columns
  std::vector<double> coupling;        // K x K row-major, zero diagonal (downlink)
  std::vector<double> inv_gain;        // diagonal of D
  std::vector<double> noise;

  int users() const { return directions.cols; }
};

DualityWorkspace make_duality_workspace(const CMat& h, const CMat& directions,
                                        const std::vector<double>& noise);

/// (K+1)x(K+1) extended coupling matrix whose Perron eigenpair yields the
/// balanced powers; uplink=true transposes the coupling block.
std::vector<double> extended_matrix(const DualityWorkspace& ws, double power_budget, bool uplink);

struct SinrRecovery {
  CMat w;            // downlink beamformers, power-loaded
  PowerVector p;     // downlink powers, sums to the budget
  double balanced_sinr = 0.0;  // 1 / perron(extended downlink matrix)
};

/// Downlink beamformers from an uplink power vector via duality: MMSE
/// directions, then downlink powers from the Perron eigenvector of the
/// extended downlink matrix.
SinrRecovery recover_beamforming_sinr(const CMat& h, const PowerVector& q, double power_budget,
                                      const std::vector<double>& noise);

/// Sum-rate beamformer structure with equal uplink/downlink powers:
/// w_k = sqrt(q_k) * normalize((I + sum_j q_j/sigma^2 h_j h_j^H)^{-1} h_k).
/// Uses a common noise power. total_power(w) == sum(q).
CMat recover_beamforming_sumrate(const CMat& h, const PowerVector& q, double noise_power);

}  // namespace fastbeam
