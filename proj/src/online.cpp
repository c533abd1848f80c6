#include "fastbeam/online.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fastbeam/io_util.hpp"
#include "fastbeam/system_model.hpp"

namespace fastbeam {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
}

std::vector<Sample> label_slot(const std::vector<CMat>& channels, const Labeler& labeler) {
  std::vector<Sample> out;
  out.reserve(channels.size());
  for (const auto& h : channels) {
    Sample s;
    s.h = h;
    s.norm = channel_norm_factor(h);
    s.label = labeler(h);  // throws on solver failure; caller records the skip
    out.push_back(std::move(s));
  }
  return out;
}

template <typename MetricFn>
SlotRecord evaluate_slot(int slot, int segment, const std::string& method,
                         const std::vector<CMat>& test, MetricFn&& metric_of) {
  std::vector<double> metrics;
  metrics.reserve(test.size());
  const auto t0 = Clock::now();
  for (const auto& h : test) metrics.push_back(metric_of(h));
  SlotRecord rec;
  rec.slot = slot;
  rec.segment = segment;
  rec.method = method;
  rec.predict_ms = ms_since(t0);
  mean_std(metrics, rec.metric_mean, rec.metric_std);
  return rec;
}

}  // namespace

OnlineTrace run_online_fast(const EmbeddingNet& net, const SystemConfig& sys,
                            const ScenarioSchedule& schedule, OnlineVariant variant,
                            const OnlineConfig& cfg) {
  const Labeler labeler = make_labeler(cfg.problem, sys.power_budget, sys.noise);
  const std::string method = variant == OnlineVariant::CurrentSlot ? "fast_online_current" : "fast_online_cumulative";
  OnlineTrace trace;
  std::vector<Sample> buffer;  // cumulative variant only
  for (int t = 0; t < schedule.horizon(); ++t) {
    const int seg = schedule.segment_at(t);
    const auto slot = next_slot(sys, schedule, t, cfg.n_adapt, cfg.u_test, cfg.seed);
    std::vector<Sample> labeled;
    try {
      labeled = label_slot(slot.adapt, labeler);
    } catch (const std::exception&) {
      SlotRecord rec;
      rec.slot = t;
      rec.segment = seg;
      rec.method = method;
      rec.metric_mean = std::nan("");
      rec.label_failure = true;
      trace.push_back(rec);
      continue;
    }
    const auto t0 = Clock::now();
    AdaptBundle bundle;
    if (variant == OnlineVariant::CurrentSlot) {
      bundle = adapt_fast(net, labeled, cfg.svr, cfg.problem, sys.noise);
    } else {
      buffer.insert(buffer.end(), labeled.begin(), labeled.end());
      bundle = adapt_fast(net, buffer, cfg.svr, cfg.problem, sys.noise);
    }
    const double fit_ms = ms_since(t0);
    auto rec = evaluate_slot(t, seg, method, slot.test,
                             [&](const CMat& h) { return predict(bundle, h).metric; });
    rec.fit_ms = fit_ms;
    trace.push_back(std::move(rec));
  }
  return trace;
}

OnlineTrace run_online_ftml(const EmbeddingNet& net0, const SystemConfig& sys,
                            const ScenarioSchedule& schedule, const MamlConfig& maml,
                            const OnlineConfig& cfg) {
  if (cfg.ftml_support + cfg.ftml_query > cfg.n_adapt)
    throw std::invalid_argument("ftml: support+query larger than the per-slot sample count");
  const Labeler labeler = make_labeler(cfg.problem, sys.power_budget, sys.noise);
  EmbeddingNet net = net0;
  OnlineTrace trace;
  std::vector<std::vector<Sample>> task_store;  // one stored task per past slot
  for (int t = 0; t < schedule.horizon(); ++t) {
    const int seg = schedule.segment_at(t);
    const auto slot = next_slot(sys, schedule, t, cfg.n_adapt, cfg.u_test, cfg.seed);
    std::vector<Sample> labeled;
    try {
      labeled = label_slot(slot.adapt, labeler);
    } catch (const std::exception&) {
      SlotRecord rec;
      rec.slot = t;
      rec.segment = seg;
      rec.method = "ftml";
      rec.metric_mean = std::nan("");
      rec.label_failure = true;
      trace.push_back(rec);
      continue;
    }

    const auto t0 = Clock::now();
    if (t >= 1) {
      // meta-update from tasks sampled out of the previous slots
      MamlConfig slot_cfg = maml;
      slot_cfg.meta_batch = std::min<int>(cfg.n_task, static_cast<int>(task_store.size()));
      slot_cfg.meta_iters = cfg.meta_iters_per_slot;
      slot_cfg.seed = Rng::derive(cfg.seed, 0xf7f7ULL + t);
      const auto sampler = [&](std::uint64_t s) {
        Rng rng(s);
        const auto& stored = task_store[rng.uniform_int(static_cast<int>(task_store.size()))];
        MamlTask task;
        task.support.assign(stored.begin(), stored.begin() + cfg.ftml_support);
        task.query.assign(stored.begin() + cfg.ftml_support,
                          stored.begin() + cfg.ftml_support + cfg.ftml_query);
        return task;
      };
      maml_pretrain(net, sampler, slot_cfg);
    }
    task_store.push_back(labeled);

    EmbeddingNet adapted = t >= 1 ? maml_adapt(net, labeled, maml) : net;
    const double fit_ms = ms_since(t0);
    auto rec = evaluate_slot(t, seg, "ftml", slot.test, [&](const CMat& h) {
      return predict_direct(adapted, cfg.problem, sys.noise, h).metric;
    });
    rec.fit_ms = fit_ms;
    trace.push_back(std::move(rec));
  }
  return trace;
}

OnlineTrace run_online_nonadaptive(const EmbeddingNet& net, const SystemConfig& sys,
                                   const ScenarioSchedule& schedule, const OnlineConfig& cfg) {
  OnlineTrace trace;
  for (int t = 0; t < schedule.horizon(); ++t) {
    const auto slot = next_slot(sys, schedule, t, cfg.n_adapt, cfg.u_test, cfg.seed);
    trace.push_back(evaluate_slot(t, schedule.segment_at(t), "nonadaptive", slot.test, [&](const CMat& h) {
      return predict_direct(net, cfg.problem, sys.noise, h).metric;
    }));
  }
  return trace;
}

OnlineTrace run_online_reference(const SystemConfig& sys, const ScenarioSchedule& schedule,
                                 const OnlineConfig& cfg) {
  OnlineTrace trace;
  const std::string method = cfg.problem == ProblemKind::SinrBalancing ? "optimal" : "wmmse";
  for (int t = 0; t < schedule.horizon(); ++t) {
    const auto slot = next_slot(sys, schedule, t, cfg.n_adapt, cfg.u_test, cfg.seed);
    trace.push_back(evaluate_slot(t, schedule.segment_at(t), method, slot.test, [&](const CMat& h) {
      if (cfg.problem == ProblemKind::SinrBalancing)
        return sinr_balance_solve(h, sys.power_budget, sys.noise).balanced_sinr;
      return wmmse_solve(h, sys.power_budget, sys.noise).report.final_objective;
    }));
  }
  return trace;
}

void save_trace_csv(const OnlineTrace& trace, const std::string& path, bool with_timings,
                    const std::string& metric_units) {
  std::ostringstream out;
  out << "# metric units: " << metric_units << "; timings in milliseconds\n";
  out << "slot,segment,method,metric_mean,metric_std";
  if (with_timings) out << ",fit_ms,predict_ms";
  out << "\n";
  for (const auto& r : trace) {
    out << r.slot << "," << r.segment << "," << r.method << "," << g17(r.metric_mean) << ","
        << g17(r.metric_std);
    if (with_timings) out << "," << g17(r.fit_ms) << "," << g17(r.predict_ms);
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace fastbeam
