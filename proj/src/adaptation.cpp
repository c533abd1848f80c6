#include "fastbeam/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fastbeam/rng.hpp"
#include "fastbeam/system_model.hpp"

namespace fastbeam {

namespace {

std::vector<std::vector<double>> extract_features(const EmbeddingNet& net,
                                                  const std::vector<Sample>& samples) {
  std::vector<std::vector<double>> xs;
  xs.reserve(samples.size());
  for (const auto& s : samples) xs.push_back(make_net_input(s.h, s.norm));
  return net.forward_eval_batch(xs);
}

std::vector<double> feasible_q(std::vector<double> q, double power) {
  double sum = 0.0;
  for (auto& v : q) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= 0.0) {
    q.assign(q.size(), power / q.size());
    return q;
  }
  for (auto& v : q) v *= power / sum;
  return q;
}

Prediction complete_prediction(const CMat& h, std::vector<double> q, ProblemKind problem,
                               double power, const std::vector<double>& noise) {
  Prediction out;
  out.q = feasible_q(std::move(q), power);
  if (problem == ProblemKind::SinrBalancing) {
    auto rec = recover_beamforming_sinr(h, out.q, power, noise);
    out.w = std::move(rec.w);
    const auto sinr = compute_sinr(h, out.w, noise);
    out.metric = *std::min_element(sinr.begin(), sinr.end());
  } else {
    out.w = recover_beamforming_sumrate(h, out.q, noise.front());
    out.metric = sum_rate(h, out.w, noise);
  }
  return out;
}

}  // namespace

AdaptBundle adapt_fast(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                       const SvrConfig& cfg, ProblemKind problem, const std::vector<double>& noise) {
  if (d_ad.empty()) throw std::invalid_argument("adapt_fast: empty adaptation set");
  for (const auto& s : d_ad)
    if (s.label.size() != static_cast<size_t>(net.k_users()))
      throw std::invalid_argument("adapt_fast: adaptation samples must be labeled");

  AdaptBundle bundle;
  bundle.net = net;
  bundle.problem = problem;
  bundle.noise = noise;
  bundle.n_adapt = static_cast<int>(d_ad.size());

  // regression runs on the unit power simplex so the epsilon tube and the
  // kernel width keep their meaning at any power budget
  const double power = net.power_budget();
  auto features = extract_features(bundle.net, d_ad);
  for (auto& f : features)
    for (auto& v : f) v /= power;
  std::vector<std::vector<double>> targets;
  targets.reserve(d_ad.size());
  for (const auto& s : d_ad) {
    auto y = s.label;
    for (auto& v : y) v /= power;
    targets.push_back(std::move(y));
  }
  bundle.svr = svr_fit(features, targets, cfg);
  return bundle;
}

Prediction predict(const AdaptBundle& bundle, const CMat& h) {
  const double power = bundle.net.power_budget();
  auto feat = extract_features(bundle.net, {Sample{h, channel_norm_factor(h), {}}});
  for (auto& v : feat[0]) v /= power;
  auto q = svr_predict(bundle.svr, feat)[0];
  for (auto& v : q) v *= power;
  return complete_prediction(h, q, bundle.problem, power, bundle.noise);
}

Prediction predict_direct(const EmbeddingNet& net, ProblemKind problem,
                          const std::vector<double>& noise, const CMat& h) {
  const auto feat = extract_features(net, {Sample{h, channel_norm_factor(h), {}}});
  return complete_prediction(h, feat[0], problem, net.power_budget(), noise);
}

EmbeddingNet baseline_transfer(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                               const FineTuneConfig& cfg) {
  EmbeddingNet tuned = net;
  if (cfg.steps == 0) return tuned;
  if (d_ad.empty()) throw std::invalid_argument("baseline_transfer: empty adaptation set");
  std::vector<const Sample*> batch;
  batch.reserve(d_ad.size());
  for (const auto& s : d_ad) batch.push_back(&s);

  const auto [fc_begin, fc_end] = tuned.fc_param_range();
  Adam adam(tuned.num_params(), cfg.adam);
  auto params = tuned.params();
  for (int step = 0; step < cfg.steps; ++step) {
    auto [loss, grad] = tuned.loss_grad_supervised(batch, /*update_running=*/false);
    if (!std::isfinite(loss)) throw std::runtime_error("baseline_transfer: diverged");
    std::fill(grad.begin(), grad.begin() + fc_begin, 0.0);
    std::fill(grad.begin() + fc_end, grad.end(), 0.0);
    adam.step(params, grad);
    tuned.set_params(params);
  }
  return tuned;
}

void MamlConfig::validate() const {
  if (!(inner_lr > 0.0) && inner_lr != 0.0) throw std::invalid_argument("maml: inner_lr must be >= 0");
  if (!(outer_lr > 0.0)) throw std::invalid_argument("maml: outer_lr must be > 0");
  if (inner_steps < 1) throw std::invalid_argument("maml: inner_steps must be >= 1");
  if (meta_batch < 1 || meta_iters < 0) throw std::invalid_argument("maml: bad meta batch/iter counts");
}

MamlReport maml_pretrain(EmbeddingNet& net, const TaskSampler& sampler, const MamlConfig& cfg) {
  cfg.validate();
  if (!cfg.first_order)
    throw std::invalid_argument(
        "maml_pretrain: exact second order is only available through maml_exact_outer_grad");
  MamlReport report;
  const int n = net.num_params();
  for (int iter = 0; iter < cfg.meta_iters; ++iter) {
    const auto theta = net.params();
    std::vector<double> outer_grad(n, 0.0);
    double meta_loss = 0.0;
    for (int t = 0; t < cfg.meta_batch; ++t) {
      const MamlTask task = sampler(Rng::derive(cfg.seed, static_cast<std::uint64_t>(iter) * cfg.meta_batch + t));
      if (task.support.empty() || task.query.empty())
        throw std::invalid_argument("maml_pretrain: task with empty support or query set");
      std::vector<const Sample*> sup, que;
      for (const auto& s : task.support) sup.push_back(&s);
      for (const auto& s : task.query) que.push_back(&s);

      auto phi = theta;
      for (int j = 0; j < cfg.inner_steps; ++j) {
        net.set_params(phi);
        // the first inner pass runs at theta and keeps the meta model's
        // running statistics calibrated
        auto [loss, grad] = net.loss_grad_supervised(sup, /*update_running=*/j == 0);
        (void)loss;
        for (int i = 0; i < n; ++i) phi[i] -= cfg.inner_lr * grad[i];
        report.sample_passes += static_cast<std::int64_t>(sup.size());
      }
      net.set_params(phi);
      auto [qloss, qgrad] = net.loss_grad_supervised(que, /*update_running=*/false);
      if (!std::isfinite(qloss)) throw std::runtime_error("maml_pretrain: diverged");
      meta_loss += qloss;
      for (int i = 0; i < n; ++i) outer_grad[i] += qgrad[i];
      report.sample_passes += static_cast<std::int64_t>(que.size());
    }
    auto theta_next = theta;
    for (int i = 0; i < n; ++i) theta_next[i] -= cfg.outer_lr * outer_grad[i];
    net.set_params(theta_next);
    report.meta_loss_trace.push_back(meta_loss);
  }
  return report;
}

EmbeddingNet maml_adapt(const EmbeddingNet& net, const std::vector<Sample>& d_ad,
                        const MamlConfig& cfg) {
  EmbeddingNet adapted = net;
  if (d_ad.empty()) return adapted;
  std::vector<const Sample*> batch;
  for (const auto& s : d_ad) batch.push_back(&s);
  auto phi = adapted.params();
  for (int j = 0; j < cfg.inner_steps; ++j) {
    adapted.set_params(phi);
    auto [loss, grad] = adapted.loss_grad_supervised(batch, /*update_running=*/false);
    if (!std::isfinite(loss)) throw std::runtime_error("maml_adapt: diverged");
    for (size_t i = 0; i < phi.size(); ++i) phi[i] -= cfg.inner_lr * grad[i];
  }
  adapted.set_params(phi);
  return adapted;
}

std::vector<double> maml_exact_outer_grad(const SmallDiffModel& model, std::vector<double> theta,
                                          double inner_lr, int inner_steps) {
  const size_t n = theta.size();
  std::vector<std::vector<double>> trajectory;
  trajectory.push_back(theta);
  for (int j = 0; j < inner_steps; ++j) {
    const auto g = model.support_grad(trajectory.back());
    auto next = trajectory.back();
    for (size_t i = 0; i < n; ++i) next[i] -= inner_lr * g[i];
    trajectory.push_back(std::move(next));
  }
  std::vector<double> v = model.query_grad(trajectory.back());
  // back-propagate through phi_{j+1} = phi_j - lr * grad(phi_j)
  for (int j = inner_steps - 1; j >= 0; --j) {
    const auto hess = model.support_hessian(trajectory[j]);
    std::vector<double> hv(n, 0.0);
    for (size_t r = 0; r < n; ++r)
      for (size_t c = 0; c < n; ++c) hv[r] += hess[r][c] * v[c];
    for (size_t i = 0; i < n; ++i) v[i] -= inner_lr * hv[i];
  }
  return v;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Fast: return "fast";
    case Method::Transfer: return "transfer";
    case Method::Maml: return "maml";
    case Method::NonAdaptive: return "nonadaptive";
  }
  return "fast";
}

Method method_from_string(const std::string& s) {
  if (s == "fast") return Method::Fast;
  if (s == "transfer") return Method::Transfer;
  if (s == "maml") return Method::Maml;
  if (s == "nonadaptive") return Method::NonAdaptive;
  throw std::invalid_argument("unknown method: " + s);
}

namespace {
long ceil_div(std::int64_t a, int b) { return static_cast<long>((a + b - 1) / b); }
}  // namespace

CostReport count_cost(Method method, const EmbeddingNet& net, std::int64_t pretrain_samples,
                      std::int64_t adapt_samples) {
  CostReport r;
  const auto [fc_begin, fc_end] = net.fc_param_range();
  switch (method) {
    case Method::Fast:
      // linear view of the regression head: K weights + 1 bias per output
      r.param_count = static_cast<long>(net.k_users()) * net.k_users() + net.k_users();
      break;
    case Method::Transfer:
      r.param_count = fc_end - fc_begin;
      break;
    case Method::Maml:
      r.param_count = net.num_params();
      break;
    case Method::NonAdaptive:
      r.param_count = 0;
      break;
  }
  r.pretrain_passes = ceil_div(pretrain_samples, 100);
  r.adapt_passes = ceil_div(adapt_samples, 20);
  return r;
}

}  // namespace fastbeam
