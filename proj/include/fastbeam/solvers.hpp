#pragma once

#include <cstdint>
#include <vector>

#include "fastbeam/channel.hpp"
#include "fastbeam/system_model.hpp"

namespace fastbeam {

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  double final_objective = 0.0;
};

struct SinrBalanceResult {
  PowerVector q;          // uplink powers, ||q||_1 == P
  CMat w;                 // recovered downlink beamformers
  double balanced_sinr = 0.0;
  SolveReport report;
};

/// Max-min SINR under a total power budget: alternates MMSE uplink directions
/// with the Perron eigenvector of the extended uplink matrix until the
/// balanced level stabilises, then recovers the downlink solution.
SinrBalanceResult sinr_balance_solve(const CMat& h, double power_budget,
                                     const std::vector<double>& noise, double tol = 1e-8,
                                     int max_iter = 500);

enum class WmmseInit { Mrt, Random };

struct WmmseResult {
  CMat w;
  PowerVector q;  // q_k = ||w_k||^2
  SolveReport report;
};

/// Weighted-MMSE sum rate ascent: receiver, MSE weight, and precoder updates
/// with a bisected power multiplier. The rate trace is non-decreasing.
WmmseResult wmmse_solve(const CMat& h, double power_budget, const std::vector<double>& noise,
                        double tol = 1e-6, int max_iter = 200, WmmseInit init = WmmseInit::Mrt,
                        std::uint64_t init_seed = 0);

enum class ProblemKind { SinrBalancing, SumRate };

/// Attaches solver labels q to every sample. Failed solves drop the sample;
/// more than 1% drops is an error.
Dataset label_dataset(const Dataset& ds, ProblemKind problem, DatasetBuildStats* stats = nullptr);

/// Labeler closure for build_pretrain_dataset / online slot labelling.
Labeler make_labeler(ProblemKind problem, double power_budget, const std::vector<double>& noise);

}  // namespace fastbeam
