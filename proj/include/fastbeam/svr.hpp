#pragma once

#include <string>
#include <vector>

namespace fastbeam {

struct SvrConfig {
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;    // RBF width; <= 0 means "scale" = 1/(n_features * feature_variance)
  double smo_tol = 1e-3;
  int max_passes = 200;  // SMO sweeps without progress before giving up

  void validate() const;
};

/// One RBF eps-SVR per output dimension: f_k(x) = sum_s coef_{k,s}
/// exp(-gamma ||x - sv_{k,s}||^2) + b_k with |coef| <= C.
struct SvrModel {
  int n_features = 0;
  int n_outputs = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double c = 0.0;
  struct Output {
    std::vector<std::vector<double>> support;  // support vectors
    std::vector<double> coef;                  // alpha - alpha*
    double bias = 0.0;
  };
  std::vector<Output> outputs;

  void save(const std::string& path) const;
  static SvrModel load(const std::string& path);
};

struct SvrFitReport {
  std::vector<double> dual_trace;  // maximization-form dual per sweep, per output
  long iterations = 0;
};

/// Fits K independent regressors by sequential minimal optimization on the
/// eps-insensitive dual. Rows of x are feature vectors, columns of y are the
/// per-output targets. Identical rows collapse to a bias-only model.
SvrModel svr_fit(const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y, const SvrConfig& cfg,
                 SvrFitReport* report = nullptr);

/// Worst per-point KKT violation of a fitted model against its training set
/// (rows are matched to stored support vectors by value).
double svr_kkt_violation(const SvrModel& model, const std::vector<std::vector<double>>& x,
                         const std::vector<std::vector<double>>& y);

std::vector<std::vector<double>> svr_predict(const SvrModel& model,
                                             const std::vector<std::vector<double>>& x);

}  // namespace fastbeam
