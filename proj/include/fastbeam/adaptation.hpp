#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fastbeam/embedding_net.hpp"
#include "fastbeam/solvers.hpp"
#include "fastbeam/svr.hpp"

namespace fastbeam {

/// Frozen embedding plus the per-task regression head fitted on the
/// adaptation set. The embedding parameters are never touched.
struct AdaptBundle {
  EmbeddingNet net;
  SvrModel svr;
  ProblemKind problem = ProblemKind::SinrBalancing;
  std::vector<double> noise;
  int n_adapt = 0;
  std::uint64_t seed = 0;
};

/// Extracts features of the adaptation samples with the frozen embedding and
/// fits the regression head on (feature, label) pairs.
AdaptBundle adapt_fast(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                       const SvrConfig& cfg, ProblemKind problem, const std::vector<double>& noise);

struct Prediction {
  std::vector<double> q;  // clipped to >= 0 and rescaled to the power budget
  CMat w;
  double metric = 0.0;  // min-SINR or sum rate, per problem kind
};

Prediction predict(const AdaptBundle& bundle, const CMat& h);

/// Pre-trained model applied directly, no adaptation.
Prediction predict_direct(const EmbeddingNet& net, ProblemKind problem,
                          const std::vector<double>& noise, const CMat& h);

struct FineTuneConfig {
  AdamConfig adam;
  int steps = 100;
  std::uint64_t seed = 0;
};

/// Last-layer fine-tuning: gradient steps on the fully connected parameters
/// only; convolution and batch-norm state stays bit-identical.
EmbeddingNet baseline_transfer(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                               const FineTuneConfig& cfg);

struct MamlTask {
  std::vector<Sample> support;
  std::vector<Sample> query;
};

using TaskSampler = std::function<MamlTask(std::uint64_t seed)>;

struct MamlConfig {
  double inner_lr = 0.01;
  double outer_lr = 1e-3;
  int inner_steps = 3;
  int meta_batch = 8;   // tasks per meta-iteration
  int meta_iters = 100;
  bool first_order = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MamlReport {
  std::vector<double> meta_loss_trace;
  std::int64_t sample_passes = 0;
};

/// Meta-training: per meta-iteration, inner gradient steps on each sampled
/// task's support set, then an outer step on the summed query losses. The
/// outer gradient is the first-order one, evaluated at the adapted
/// parameters; exact second order exists only via maml_exact_outer_grad.
MamlReport maml_pretrain(EmbeddingNet& net, const TaskSampler& sampler, const MamlConfig& cfg);

/// Task-specific adaptation: j full-batch gradient steps on all parameters.
EmbeddingNet maml_adapt(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                        const MamlConfig& cfg);

/// Small-model hooks for validating the second-order outer gradient against
/// finite differences; the production network is first-order only.
struct SmallDiffModel {
  std::function<std::vector<double>(const std::vector<double>&)> support_grad;
  std::function<std::vector<double>(const std::vector<double>&)> query_grad;
  std::function<std::vector<std::vector<double>>(const std::vector<double>&)> support_hessian;
};

std::vector<double> maml_exact_outer_grad(const SmallDiffModel& model, std::vector<double> theta,
                                          double inner_lr, int inner_steps);

enum class Method { Fast, Transfer, Maml, NonAdaptive };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct CostReport {
  long param_count = 0;      // trainable parameters in the adaptation stage
  long pretrain_passes = 0;  // 100-sample passes
  long adapt_passes = 0;     // 20-sample passes
};

/// Parameter counts and pass counters; a pretraining pass covers 100 samples
/// and an adaptation pass 20, so pass counts are ceil(samples/width).
CostReport count_cost(Method method, const EmbeddingNet& net, std::int64_t pretrain_samples,
                      std::int64_t adapt_samples);

}  // namespace fastbeam
