#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fastbeam/io_util.hpp"
#include "fastbeam/online.hpp"
#include "fastbeam/system_model.hpp"

using namespace fastbeam;

namespace {

constexpr double kP = 2.0;

SystemConfig sys2() { return SystemConfig(2, 2, kP, 1.0); }

// compact drift schedule with link budgets recentered for unit noise
ScenarioSchedule small_schedule(int slots) {
  const double recenter = 128.1 + 37.6 * std::log10(0.25);
  ScenarioSchedule sch;
  FadingSpec fading;
  LargeScaleSpec a;
  a.enabled = true;
  a.cell_radius_m = 260.0;
  a.min_dist_m = 240.0;
  a.shadow_std_db = 2.0;
  a.gain_offset_db = recenter + 6.0;
  LargeScaleSpec b = a;
  b.gain_offset_db = recenter;
  LargeScaleSpec c = a;
  c.gain_offset_db = recenter - 6.0;
  sch.segments.push_back({fading, a, slots, "near"});
  sch.segments.push_back({fading, b, slots, "mid"});
  sch.segments.push_back({fading, c, slots, "far"});
  return sch;
}

const EmbeddingNet& pretrained() {
  static const EmbeddingNet net = [] {
    SystemConfig cfg = sys2();
    std::vector<FadingSpec> fams(3);
    fams[1].family = Fading::Ricean;
    fams[2].family = Fading::Nakagami;
    Dataset ds = build_pretrain_dataset(cfg, fams, 100,
                                        make_labeler(ProblemKind::SinrBalancing, kP, cfg.noise), 501);
    EmbeddingNet n(2, 2, kP, 78);
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 50;
    tc.patience = 0;
    tc.seed = 4;
    n.train(ds, Objective::SupervisedMse, tc);
    return n;
  }();
  return net;
}

double segment_mean(const OnlineTrace& t, int segment) {
  double acc = 0.0;
  int n = 0;
  for (const auto& r : t)
    if (r.segment == segment) {
      acc += r.metric_mean;
      ++n;
    }
  return acc / n;
}

}  // namespace

TEST_SUITE("online") {
  TEST_CASE("trace shape: one record per slot per method") {
    const auto sch = small_schedule(4);
    OnlineConfig oc;
    oc.n_adapt = 5;
    oc.u_test = 10;
    oc.seed = 10;
    const auto fast = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::Cumulative, oc);
    CHECK(fast.size() == 12);
    for (int t = 0; t < 12; ++t) {
      CHECK(fast[t].slot == t);
      CHECK(fast[t].segment == t / 4);
      CHECK(fast[t].method == "fast_online_cumulative");
      CHECK(std::isfinite(fast[t].metric_mean));
    }
    const auto ref = run_online_reference(sys2(), sch, oc);
    CHECK(ref.size() == 12);
    CHECK(ref[0].method == "optimal");
  }

  TEST_CASE("optimal reference dominates the learned methods slot-wise") {
    const auto sch = small_schedule(3);
    OnlineConfig oc;
    oc.seed = 11;
    const auto ref = run_online_reference(sys2(), sch, oc);
    const auto fast = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::Cumulative, oc);
    const auto naive = run_online_nonadaptive(pretrained(), sys2(), sch, oc);
    for (size_t t = 0; t < ref.size(); ++t) {
      CHECK(ref[t].metric_mean >= fast[t].metric_mean * (1.0 - 1e-9));
      CHECK(ref[t].metric_mean >= naive[t].metric_mean * (1.0 - 1e-9));
    }
  }

  TEST_CASE("identical seeds give identical traces") {
    const auto sch = small_schedule(2);
    OnlineConfig oc;
    oc.seed = 12;
    const auto a = run_online_reference(sys2(), sch, oc);
    const auto b = run_online_reference(sys2(), sch, oc);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].metric_mean == b[i].metric_mean);
      CHECK(a[i].metric_std == b[i].metric_std);
    }
  }

  TEST_CASE("current-slot variant depends only on that slot's data") {
    const auto sch = small_schedule(3);
    OnlineConfig oc;
    oc.seed = 13;
    const int t_probe = 5;
    const auto trace = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::CurrentSlot, oc);

    // rebuild slot t in isolation: same labels, same fit, same evaluation
    const auto slot = next_slot(sys2(), sch, t_probe, oc.n_adapt, oc.u_test, oc.seed);
    const Labeler labeler = make_labeler(oc.problem, kP, sys2().noise);
    std::vector<Sample> labeled;
    for (const auto& h : slot.adapt) {
      Sample s;
      s.h = h;
      s.norm = channel_norm_factor(h);
      s.label = labeler(h);
      labeled.push_back(std::move(s));
    }
    const AdaptBundle bundle = adapt_fast(pretrained(), labeled, oc.svr, oc.problem, sys2().noise);
    double mean = 0.0;
    for (const auto& h : slot.test) mean += predict(bundle, h).metric;
    mean /= slot.test.size();
    CHECK(mean == trace[t_probe].metric_mean);  // bit-identical rebuild
  }

  TEST_CASE("ftml slot zero equals the non-adaptive metric") {
    const auto sch = small_schedule(2);
    OnlineConfig oc;
    oc.seed = 14;
    oc.n_adapt = 5;
    MamlConfig mc;
    mc.inner_lr = 0.005;
    mc.inner_steps = 2;
    const auto ftml = run_online_ftml(pretrained(), sys2(), sch, mc, oc);
    const auto naive = run_online_nonadaptive(pretrained(), sys2(), sch, oc);
    CHECK(ftml[0].metric_mean == naive[0].metric_mean);
    CHECK(ftml.size() == naive.size());
  }

  TEST_CASE("ftml rejects oversized support/query splits") {
    const auto sch = small_schedule(2);
    OnlineConfig oc;
    oc.n_adapt = 4;  // < support(3) + query(2)
    MamlConfig mc;
    CHECK_THROWS_AS(run_online_ftml(pretrained(), sys2(), sch, mc, oc), std::invalid_argument);
  }

  TEST_CASE("stationary cumulative run approaches the offline head") {
    ScenarioSchedule sch;
    sch.segments.push_back(small_schedule(1).segments[1]);
    sch.segments.back().slot_count = 24;
    OnlineConfig oc;
    oc.seed = 15;
    const auto trace = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::Cumulative, oc);

    // offline reference: the same embedding adapted on all 24 slots of data,
    // evaluated on the final ten slots' test channels
    const Labeler labeler = make_labeler(oc.problem, kP, sys2().noise);
    std::vector<Sample> cumulative;
    std::vector<CMat> final_tests;
    for (int t = 0; t < 24; ++t) {
      const auto slot = next_slot(sys2(), sch, t, oc.n_adapt, oc.u_test, oc.seed);
      for (const auto& h : slot.adapt) {
        Sample s;
        s.h = h;
        s.norm = channel_norm_factor(h);
        s.label = labeler(h);
        cumulative.push_back(std::move(s));
      }
      if (t >= 14)
        for (const auto& h : slot.test) final_tests.push_back(h);
    }
    const AdaptBundle offline = adapt_fast(pretrained(), cumulative, oc.svr, oc.problem, sys2().noise);
    double offline_mean = 0.0;
    for (const auto& h : final_tests) offline_mean += predict(offline, h).metric;
    offline_mean /= final_tests.size();

    double online_mean = 0.0;
    for (int t = 14; t < 24; ++t) online_mean += trace[t].metric_mean;
    online_mean /= 10.0;
    CHECK(std::abs(online_mean - offline_mean) <= 0.05 * offline_mean);
  }

  TEST_CASE("cumulative buffer beats the single-slot buffer late in a drift") {
    const auto sch = small_schedule(5);
    OnlineConfig oc;
    oc.seed = 16;
    const auto cum = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::Cumulative, oc);
    const auto cur = run_online_fast(pretrained(), sys2(), sch, OnlineVariant::CurrentSlot, oc);
    CHECK(segment_mean(cum, 2) >= segment_mean(cur, 2));
  }

  TEST_CASE("trace csv carries the header, units and optional timing columns") {
    OnlineTrace t;
    SlotRecord r;
    r.slot = 0;
    r.segment = 0;
    r.method = "optimal";
    r.metric_mean = 1.25;
    r.metric_std = 0.5;
    r.fit_ms = 3.5;
    t.push_back(r);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string plain = (dir / "fastbeam_trace_plain.csv").string();
    const std::string timed = (dir / "fastbeam_trace_timed.csv").string();
    save_trace_csv(t, plain, false);
    save_trace_csv(t, timed, true);
    const std::string a = read_text_file(plain);
    const std::string b = read_text_file(timed);
    CHECK(a.find("# metric units:") == 0);
    CHECK(a.find("slot,segment,method,metric_mean,metric_std\n") != std::string::npos);
    CHECK(a.find("fit_ms") == std::string::npos);
    CHECK(b.find("slot,segment,method,metric_mean,metric_std,fit_ms,predict_ms\n") != std::string::npos);
    CHECK(b.find("3.5") != std::string::npos);
    std::filesystem::remove(plain);
    std::filesystem::remove(timed);
  }
}
