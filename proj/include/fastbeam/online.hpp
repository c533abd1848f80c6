#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastbeam/adaptation.hpp"
#include "fastbeam/channel.hpp"

namespace fastbeam {

enum class OnlineVariant { CurrentSlot, Cumulative };

struct SlotRecord {
  int slot = 0;
  int segment = 0;
  std::string method;
  double metric_mean = 0.0;
  double metric_std = 0.0;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
  bool label_failure = false;  // slot skipped: no adaptation labels
};

using OnlineTrace = std::vector<SlotRecord>;

struct OnlineConfig {
  ProblemKind problem = ProblemKind::SinrBalancing;
  int n_adapt = 5;   // adaptation pairs per slot
  int u_test = 10;   // test channels per slot
  std::uint64_t seed = 1;
  SvrConfig svr;
  // FTML knobs
  int n_task = 5;            // past tasks sampled per slot
  int ftml_support = 3;      // support/query split of a stored slot
  int ftml_query = 2;
  int meta_iters_per_slot = 1;
};

/// Per-slot fast adaptation with a frozen embedding: label the slot's
/// adaptation pairs with the classical solver, fit the regression head on the
/// variant-selected buffer, evaluate on the slot's test channels.
OnlineTrace run_online_fast(const EmbeddingNet& net, const SystemConfig& sys,
                            const ScenarioSchedule& schedule, OnlineVariant variant,
                            const OnlineConfig& cfg);

/// Follow-the-meta-leader baseline: per slot, meta-update on tasks sampled
/// from past slots, then adapt on the current slot's pairs. Slot 0 evaluates
/// the unadapted model.
OnlineTrace run_online_ftml(const EmbeddingNet& net0, const SystemConfig& sys,
                            const ScenarioSchedule& schedule, const MamlConfig& maml,
                            const OnlineConfig& cfg);

/// Pre-trained model applied directly at every slot.
OnlineTrace run_online_nonadaptive(const EmbeddingNet& net, const SystemConfig& sys,
                                   const ScenarioSchedule& schedule, const OnlineConfig& cfg);

/// Per-slot classical solution on the same test channels: exact balancing for
/// the SINR problem, WMMSE for sum rate.
OnlineTrace run_online_reference(const SystemConfig& sys, const ScenarioSchedule& schedule,
                                 const OnlineConfig& cfg);

/// Trace CSV (slot, segment, method, metric mean/std, optional timing
/// columns). A leading comment line states the metric units.
void save_trace_csv(const OnlineTrace& trace, const std::string& path, bool with_timings = false,
                    const std::string& metric_units = "balanced SINR, linear");

}  // namespace fastbeam
