#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fastbeam/channel.hpp"
#include "fastbeam/linalg.hpp"

namespace fastbeam {

/// Network input: 2 x (Nt*K) real image, row 0 the real parts and row 1 the
/// imaginary parts of vec(H), column-major over users, scaled by 1/norm.
std::vector<double> make_net_input(const CMat& h, double norm);

/// Sum rate of the structure-recovered beamformers at uplink powers q, plus
/// its analytic gradient in q. Common noise power. At q_k == 0 the sqrt(q_k)
/// branch uses subgradient 0.
std::pair<double, std::vector<double>> sumrate_and_grad_q(const CMat& h, const std::vector<double>& q,
                                                          double noise_power);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam state over a flat parameter vector. An optional index mask restricts
/// updates to a parameter subset (used by the last-layer fine-tune baseline).
class Adam {
 public:
  Adam(int n, AdamConfig cfg = {});
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  AdamConfig cfg_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

enum class NetMode { Train, Eval };
enum class Objective { SupervisedMse, UnsupervisedSumRate };

struct TrainConfig {
  AdamConfig adam;
  int epochs = 60;
  int batch_size = 100;
  double val_fraction = 0.1;
  int patience = 20;  // epochs without val improvement; 0 disables early stop
  std::uint64_t seed = 0;
  double noise_power = 1.0;  // unsupervised objective only
};

struct TrainReport {
  std::vector<double> loss_trace;  // per-epoch training loss
  std::vector<double> val_trace;
  int epochs_run = 0;
  bool early_stopped = false;
  std::int64_t sample_passes = 0;  // forward+backward sample evaluations during this run
};

/// Convolutional embedding model mapping a channel image to an uplink power
/// vector on the scaled simplex {q >= 0, sum q = P}. Two 3x3/8-kernel conv
/// blocks with batch norm and ReLU, then a fully connected layer with a
/// sigmoid output renormalized to the power budget.
class EmbeddingNet {
 public:
  static constexpr int kChannels = 8;
  static constexpr int kHeight = 2;

  EmbeddingNet(int nt, int k_users, double power_budget, std::uint64_t init_seed = 1);
  EmbeddingNet() : EmbeddingNet(1, 1, 1.0, 0) {}  // placeholder for value members

  int nt() const { return nt_; }
  int k_users() const { return k_; }
  double power_budget() const { return power_; }
  int width() const { return nt_ * k_; }
  int flat_features() const { return kChannels * kHeight * width(); }

  int num_params() const { return static_cast<int>(params_.size()); }
  const std::vector<double>& params() const { return params_; }
  void set_params(std::vector<double> p);
  std::pair<int, int> fc_param_range() const;  // [begin, end) in the flat vector

  const std::vector<double>& running_stats() const { return buffers_; }
  void set_running_stats(std::vector<double> b);

  /// Single-sample forward. Train mode normalizes with the sample's own
  /// statistics and updates the running stats; Eval mode is a pure function.
  std::vector<double> forward(const std::vector<double>& x, NetMode mode);

  /// Batch forward in Eval mode; rows of `out` are the per-sample outputs.
  /// Logically const: running statistics are read, never written.
  std::vector<std::vector<double>> forward_eval_batch(const std::vector<std::vector<double>>& xs) const;

  /// Mean squared error objective (1/(2LK)) sum ||label - output||^2 and its
  /// gradient. Train-mode batch statistics.
  std::pair<double, std::vector<double>> loss_grad_supervised(const std::vector<const Sample*>& batch,
                                                              bool update_running = true);

  /// Negative mean sum rate objective -(1/(2KL)) sum rate(q_hat; raw H).
  std::pair<double, std::vector<double>> loss_grad_unsupervised(const std::vector<const Sample*>& batch,
                                                                double noise_power,
                                                                bool update_running = true);

  /// Full training loop with Adam, deterministic shuffling, optional
  /// validation split and early stopping. Returns best-validation parameters
  /// in place.
  TrainReport train(const Dataset& ds, Objective objective, const TrainConfig& cfg);

  std::int64_t forward_sample_count() const { return fwd_samples_; }
  std::int64_t backward_sample_count() const { return bwd_samples_; }
  void reset_counters() { fwd_samples_ = bwd_samples_ = 0; }

  void save(const std::string& path) const;
  static EmbeddingNet load(const std::string& path);

 private:
  struct Cache;
  void forward_batch(const std::vector<const double*>& xs, NetMode mode, bool update_running,
                     Cache& cache);
  std::vector<double> backward_batch(const Cache& cache, const std::vector<std::vector<double>>& d_out);

  int nt_, k_;
  double power_;
  std::vector<double> params_;
  std::vector<double> buffers_;  // bn1 mean, bn1 var, bn2 mean, bn2 var
  // flat layout offsets
  int o_conv1_, o_conv2_, o_bn1g_, o_bn1b_, o_bn2g_, o_bn2b_, o_fcw_, o_fcb_;
  mutable std::int64_t fwd_samples_ = 0, bwd_samples_ = 0;
};

}  // namespace fastbeam
