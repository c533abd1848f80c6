#include "fastbeam/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "fastbeam/dataset_io.hpp"
#include "fastbeam/io_util.hpp"
#include "fastbeam/metrics.hpp"
#include "fastbeam/system_model.hpp"

namespace fastbeam {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig::RunConfig() {
  scenario.enabled = true;
  maml.meta_iters = 150;
  maml.meta_batch = 8;
  maml.inner_steps = 3;
  maml.inner_lr = 0.01;
  maml.outer_lr = 1e-3;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["problem"] = problem == ProblemKind::SinrBalancing ? "sinr" : "sumrate";
  j["seed"] = seed;
  j["out"] = out;
  j["system"] = {{"nt", nt}, {"k", k_users}, {"power_dbm", power_dbm}, {"noise_mode", noise_mode}};
  j["data"] = {{"families", families},
               {"n_per_family", n_per_family},
               {"labeled", labeled},
               {"ricean_factor", ricean_factor},
               {"nakagami_m", nakagami_m},
               {"nakagami_power", nakagami_power}};
  j["train"] = {{"epochs", epochs},
                {"batch", batch},
                {"lr", lr},
                {"val_fraction", val_fraction},
                {"patience", patience}};
  j["maml"] = {{"inner_lr", maml.inner_lr},   {"outer_lr", maml.outer_lr},
               {"inner_steps", maml.inner_steps}, {"meta_batch", maml.meta_batch},
               {"meta_iters", maml.meta_iters},   {"first_order", maml.first_order},
               {"support", maml_support},         {"query", maml_query}};
  j["adapt"] = {{"n_ad", n_ad},
                {"repeats", repeats},
                {"svr_c", svr.c},
                {"svr_epsilon", svr.epsilon},
                {"svr_gamma", svr.gamma},
                {"transfer_steps", transfer_steps},
                {"transfer_lr", transfer_lr},
                {"scenario_fading", scenario_fading},
                {"scenario",
                 {{"cell_radius_m", scenario.cell_radius_m},
                  {"min_dist_m", scenario.min_dist_m},
                  {"shadow_std_db", scenario.shadow_std_db},
                  {"pathloss_a", scenario.pathloss_a},
                  {"pathloss_b", scenario.pathloss_b},
                  {"gain_offset_db", scenario.gain_offset_db}}}};
  j["eval"] = {{"n_test", n_test}, {"methods", methods}};
  j["online"] = {{"slots_per_segment", slots_per_segment},
                 {"n", online_n},
                 {"u", online_u},
                 {"methods", online_methods},
                 {"timings", timings}};
  j["report"] = {{"runs", report_runs}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  if (j.contains("problem")) {
    const std::string p = j["problem"];
    if (p == "sinr")
      c.problem = ProblemKind::SinrBalancing;
    else if (p == "sumrate")
      c.problem = ProblemKind::SumRate;
    else
      throw std::invalid_argument("config: unknown problem '" + p + "'");
  }
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  if (j.contains("system")) {
    const auto& s = j["system"];
    c.nt = s.value("nt", c.nt);
    c.k_users = s.value("k", c.k_users);
    c.power_dbm = s.value("power_dbm", c.power_dbm);
    c.noise_mode = s.value("noise_mode", c.noise_mode);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    if (d.contains("families")) c.families = d["families"].get<std::vector<std::string>>();
    c.n_per_family = d.value("n_per_family", c.n_per_family);
    c.labeled = d.value("labeled", c.labeled);
    c.ricean_factor = d.value("ricean_factor", c.ricean_factor);
    c.nakagami_m = d.value("nakagami_m", c.nakagami_m);
    c.nakagami_power = d.value("nakagami_power", c.nakagami_power);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    c.epochs = t.value("epochs", c.epochs);
    c.batch = t.value("batch", c.batch);
    c.lr = t.value("lr", c.lr);
    c.val_fraction = t.value("val_fraction", c.val_fraction);
    c.patience = t.value("patience", c.patience);
  }
  if (j.contains("maml")) {
    const auto& m = j["maml"];
    c.maml.inner_lr = m.value("inner_lr", c.maml.inner_lr);
    c.maml.outer_lr = m.value("outer_lr", c.maml.outer_lr);
    c.maml.inner_steps = m.value("inner_steps", c.maml.inner_steps);
    c.maml.meta_batch = m.value("meta_batch", c.maml.meta_batch);
    c.maml.meta_iters = m.value("meta_iters", c.maml.meta_iters);
    c.maml.first_order = m.value("first_order", c.maml.first_order);
    c.maml_support = m.value("support", c.maml_support);
    c.maml_query = m.value("query", c.maml_query);
  }
  if (j.contains("adapt")) {
    const auto& a = j["adapt"];
    c.n_ad = a.value("n_ad", c.n_ad);
    c.repeats = a.value("repeats", c.repeats);
    c.svr.c = a.value("svr_c", c.svr.c);
    c.svr.epsilon = a.value("svr_epsilon", c.svr.epsilon);
    c.svr.gamma = a.value("svr_gamma", c.svr.gamma);
    c.transfer_steps = a.value("transfer_steps", c.transfer_steps);
    c.transfer_lr = a.value("transfer_lr", c.transfer_lr);
    c.scenario_fading = a.value("scenario_fading", c.scenario_fading);
    if (a.contains("scenario")) {
      const auto& s = a["scenario"];
      c.scenario.cell_radius_m = s.value("cell_radius_m", c.scenario.cell_radius_m);
      c.scenario.min_dist_m = s.value("min_dist_m", c.scenario.min_dist_m);
      c.scenario.shadow_std_db = s.value("shadow_std_db", c.scenario.shadow_std_db);
      c.scenario.pathloss_a = s.value("pathloss_a", c.scenario.pathloss_a);
      c.scenario.pathloss_b = s.value("pathloss_b", c.scenario.pathloss_b);
      c.scenario.gain_offset_db = s.value("gain_offset_db", c.scenario.gain_offset_db);
    }
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    c.n_test = e.value("n_test", c.n_test);
    if (e.contains("methods")) c.methods = e["methods"].get<std::vector<std::string>>();
  }
  if (j.contains("online")) {
    const auto& o = j["online"];
    c.slots_per_segment = o.value("slots_per_segment", c.slots_per_segment);
    c.online_n = o.value("n", c.online_n);
    c.online_u = o.value("u", c.online_u);
    if (o.contains("methods")) c.online_methods = o["methods"].get<std::vector<std::string>>();
    c.timings = o.value("timings", c.timings);
  }
  if (j.contains("report") && j["report"].contains("runs"))
    c.report_runs = j["report"]["runs"].get<std::vector<std::string>>();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  try {
    return from_json_text(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
}

void RunConfig::save(const std::string& path) const { write_text_file(path, to_json_text()); }

void RunConfig::apply_paper_scale() {
  n_per_family = problem == ProblemKind::SinrBalancing ? 5000 : 10000;
  n_ad = problem == ProblemKind::SinrBalancing ? 20 : 50;
  n_test = 1000;
  epochs = 200;
}

SystemConfig RunConfig::system(bool large_scale_active) const {
  double noise_w = 1.0;
  if (noise_mode == "physical" || (noise_mode == "auto" && large_scale_active))
    noise_w = thermal_noise_watts();
  else if (noise_mode != "normalized" && noise_mode != "auto")
    throw std::invalid_argument("config: unknown noise_mode '" + noise_mode + "'");
  return SystemConfig(nt, k_users, power_watts(), noise_w);
}

std::vector<FadingSpec> RunConfig::fading_specs() const {
  std::vector<FadingSpec> specs;
  for (const auto& name : families) {
    FadingSpec f;
    f.family = fading_from_string(name);
    f.ricean_factor = ricean_factor;
    f.nakagami_m = nakagami_m;
    f.nakagami_power = nakagami_power;
    specs.push_back(f);
  }
  if (specs.empty()) throw std::invalid_argument("config: empty fading family list");
  return specs;
}

FadingSpec RunConfig::scenario_fading_spec() const {
  FadingSpec f;
  f.family = fading_from_string(scenario_fading);
  f.ricean_factor = ricean_factor;
  f.nakagami_m = nakagami_m;
  f.nakagami_power = nakagami_power;
  return f;
}

namespace {

void prepare_out(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  cfg.save(cfg.out + "/config_used.json");
}

std::string metric_units(ProblemKind p) {
  return p == ProblemKind::SinrBalancing ? "balanced SINR, linear" : "sum rate, bits/s/Hz";
}

bool wants(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

/// Labeled draw from the shifted scenario; sub-streams keyed on (seed, tag, i).
std::vector<Sample> draw_labeled(const RunConfig& cfg, const SystemConfig& sys, int count,
                                 std::uint64_t tag) {
  const Labeler labeler = make_labeler(cfg.problem, sys.power_budget, sys.noise);
  const FadingSpec fading = cfg.scenario_fading_spec();
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.h = sample_channel(sys, fading, cfg.scenario, Rng::derive(cfg.seed, tag + i));
    s.norm = channel_norm_factor(s.h);
    s.family = cfg.scenario_fading;
    s.label = labeler(s.h);
    out.push_back(std::move(s));
  }
  return out;
}

constexpr std::uint64_t kTagAdapt = 0xada0000ULL;
constexpr std::uint64_t kTagTest = 0x7e57000ULL;
constexpr std::uint64_t kTagRepeat = 0xbeef0000ULL;

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
  prepare_out(cfg);
  const SystemConfig sys = cfg.system(/*large_scale_active=*/false);
  const Labeler labeler =
      cfg.labeled ? make_labeler(cfg.problem, sys.power_budget, sys.noise) : Labeler{};
  DatasetBuildStats stats;
  const Dataset ds = build_pretrain_dataset(sys, cfg.fading_specs(), cfg.n_per_family, labeler,
                                            cfg.seed, LargeScaleSpec{}, &stats);
  save_dataset(ds, cfg.out + "/train.ds");
  json manifest;
  manifest["file"] = "train.ds";
  manifest["count"] = ds.samples.size();
  manifest["labeled"] = ds.labeled();
  manifest["requested"] = stats.requested;
  manifest["dropped"] = stats.dropped;
  write_text_file(cfg.out + "/manifest.json", manifest.dump(2) + "\n");
}

void cmd_pretrain(const RunConfig& cfg) {
  prepare_out(cfg);
  const Dataset ds = load_dataset(cfg.out + "/train.ds");
  if (ds.nt != cfg.nt || ds.k_users != cfg.k_users)
    throw std::runtime_error("pretrain: dataset dimensions do not match the config");

  EmbeddingNet net(cfg.nt, cfg.k_users, cfg.power_watts(), Rng::derive(cfg.seed, 0x1417));
  TrainConfig tc;
  tc.adam.lr = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch;
  tc.val_fraction = cfg.val_fraction;
  tc.patience = cfg.patience;
  tc.seed = Rng::derive(cfg.seed, 0x7121);
  tc.noise_power = ds.noise.front();
  const Objective objective = cfg.problem == ProblemKind::SinrBalancing
                                  ? Objective::SupervisedMse
                                  : Objective::UnsupervisedSumRate;
  const TrainReport report = net.train(ds, objective, tc);
  net.save(cfg.out + "/model.txt");

  json jr;
  jr["objective"] = objective == Objective::SupervisedMse ? "supervised_mse" : "unsupervised_sumrate";
  jr["epochs_run"] = report.epochs_run;
  jr["early_stopped"] = report.early_stopped;
  jr["final_loss"] = report.loss_trace.empty() ? 0.0 : report.loss_trace.back();
  jr["loss_trace"] = report.loss_trace;
  jr["val_trace"] = report.val_trace;
  jr["sample_passes"] = report.sample_passes;
  jr["param_count"] = net.num_params();

  const bool need_maml = wants(cfg.methods, "maml") || wants(cfg.online_methods, "ftml");
  if (need_maml) {
    if (!ds.labeled()) throw std::runtime_error("pretrain: meta-training needs a labeled dataset");
    // group sample indices by fading family; a task draws disjoint
    // support/query subsets within one family
    std::map<std::string, std::vector<int>> by_family;
    for (size_t i = 0; i < ds.samples.size(); ++i)
      by_family[ds.samples[i].family].push_back(static_cast<int>(i));
    std::vector<const std::vector<int>*> groups;
    for (const auto& [name, idx] : by_family) {
      if (static_cast<int>(idx.size()) >= cfg.maml_support + cfg.maml_query)
        groups.push_back(&idx);
    }
    if (groups.empty()) throw std::runtime_error("pretrain: no family has enough samples for a task");
    const auto sampler = [&, groups](std::uint64_t s) {
      Rng rng(s);
      const auto& idx = *groups[rng.uniform_int(static_cast<int>(groups.size()))];
      std::vector<int> pick(idx);
      for (int i = static_cast<int>(pick.size()) - 1; i > 0; --i)
        std::swap(pick[i], pick[rng.uniform_int(i + 1)]);
      MamlTask task;
      for (int i = 0; i < cfg.maml_support; ++i) task.support.push_back(ds.samples[pick[i]]);
      for (int i = 0; i < cfg.maml_query; ++i)
        task.query.push_back(ds.samples[pick[cfg.maml_support + i]]);
      return task;
    };
    EmbeddingNet meta(cfg.nt, cfg.k_users, cfg.power_watts(), Rng::derive(cfg.seed, 0x3a31));
    MamlConfig mc = cfg.maml;
    mc.seed = Rng::derive(cfg.seed, 0x3a32);
    const MamlReport mr = maml_pretrain(meta, sampler, mc);
    meta.save(cfg.out + "/model_maml.txt");
    jr["maml_meta_loss_trace"] = mr.meta_loss_trace;
    jr["maml_sample_passes"] = mr.sample_passes;
  }
  write_text_file(cfg.out + "/train_report.json", jr.dump(2) + "\n");
}

void cmd_adapt(const RunConfig& cfg) {
  prepare_out(cfg);
  EmbeddingNet net = EmbeddingNet::load(cfg.out + "/model.txt");
  const SystemConfig sys = cfg.system(/*large_scale_active=*/true);
  const auto d_ad = draw_labeled(cfg, sys, cfg.n_ad, kTagAdapt);
  const AdaptBundle bundle = adapt_fast(net, d_ad, cfg.svr, cfg.problem, sys.noise);

  const std::string dir = cfg.out + "/bundle";
  fs::create_directories(dir);
  bundle.svr.save(dir + "/svr.txt");
  bundle.net.save(dir + "/model.txt");
  json meta;
  meta["problem"] = cfg.problem == ProblemKind::SinrBalancing ? "sinr" : "sumrate";
  meta["n_adapt"] = bundle.n_adapt;
  meta["seed"] = cfg.seed;
  meta["noise"] = sys.noise;
  write_text_file(dir + "/adapt_meta.json", meta.dump(2) + "\n");
}

void cmd_eval(const RunConfig& cfg) {
  if (cfg.methods.empty()) throw std::invalid_argument("eval: empty method list");
  prepare_out(cfg);
  const SystemConfig sys = cfg.system(/*large_scale_active=*/true);
  EmbeddingNet net = EmbeddingNet::load(cfg.out + "/model.txt");

  // paired test channels
  const FadingSpec fading = cfg.scenario_fading_spec();
  std::vector<CMat> test;
  std::vector<std::uint64_t> test_seeds;
  for (int i = 0; i < cfg.n_test; ++i) {
    test_seeds.push_back(Rng::derive(cfg.seed, kTagTest + i));
    test.push_back(sample_channel(sys, fading, cfg.scenario, test_seeds.back()));
  }

  std::map<std::string, std::vector<double>> columns;
  using Clock = std::chrono::steady_clock;
  json timing;

  for (const auto& m : cfg.methods) {
    std::vector<double>& col = columns[m];
    col.reserve(test.size());
    if (m == "optimal") {
      for (const auto& h : test) {
        col.push_back(cfg.problem == ProblemKind::SinrBalancing
                          ? sinr_balance_solve(h, sys.power_budget, sys.noise).balanced_sinr
                          : wmmse_solve(h, sys.power_budget, sys.noise).report.final_objective);
      }
    } else if (m == "fast") {
      const std::string svr_path = cfg.out + "/bundle/svr.txt";
      if (!fs::exists(svr_path)) throw std::runtime_error("eval: missing bundle, run adapt first");
      AdaptBundle bundle;
      bundle.net = net;
      bundle.svr = SvrModel::load(svr_path);
      bundle.problem = cfg.problem;
      bundle.noise = sys.noise;
      const auto t0 = Clock::now();
      for (const auto& h : test) col.push_back(predict(bundle, h).metric);
      timing["fast_predict_ms_total"] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    } else if (m == "nonadaptive") {
      for (const auto& h : test) col.push_back(predict_direct(net, cfg.problem, sys.noise, h).metric);
    } else if (m == "transfer" || m == "maml") {
      // averaged over `repeats` independent adaptation sets
      EmbeddingNet base = m == "maml" ? EmbeddingNet::load(cfg.out + "/model_maml.txt") : net;
      col.assign(test.size(), 0.0);
      const auto t0 = Clock::now();
      for (int r = 0; r < cfg.repeats; ++r) {
        const auto d_ad = draw_labeled(cfg, sys, cfg.n_ad, kTagRepeat + 4096ULL * r);
        EmbeddingNet adapted;
        if (m == "transfer") {
          FineTuneConfig ft;
          ft.adam.lr = cfg.transfer_lr;
          ft.steps = cfg.transfer_steps;
          adapted = baseline_transfer(base, d_ad, ft);
        } else {
          adapted = maml_adapt(base, d_ad, cfg.maml);
        }
        for (size_t i = 0; i < test.size(); ++i)
          col[i] += predict_direct(adapted, cfg.problem, sys.noise, test[i]).metric / cfg.repeats;
      }
      timing[m + "_adapt_eval_ms_total"] =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    } else {
      throw std::invalid_argument("eval: unknown method '" + m + "'");
    }
  }

  std::ostringstream csv;
  csv << "# metric units: " << metric_units(cfg.problem) << "\n";
  csv << "channel,draw_seed";
  for (const auto& m : cfg.methods) csv << "," << m;
  csv << "\n";
  for (size_t i = 0; i < test.size(); ++i) {
    csv << i << "," << test_seeds[i];
    for (const auto& m : cfg.methods) csv << "," << g17(columns[m][i]);
    csv << "\n";
  }
  write_text_file(cfg.out + "/metrics.csv", csv.str());

  std::vector<std::vector<double>> rows(test.size(), std::vector<double>(cfg.methods.size()));
  for (size_t j = 0; j < cfg.methods.size(); ++j)
    for (size_t i = 0; i < test.size(); ++i) rows[i][j] = columns[cfg.methods[j]][i];
  const PairedSummary ps = summarize(cfg.methods, rows);

  json summary;
  summary["problem"] = cfg.problem == ProblemKind::SinrBalancing ? "sinr" : "sumrate";
  summary["metric_units"] = metric_units(cfg.problem);
  summary["n_test"] = cfg.n_test;
  summary["power_dbm"] = cfg.power_dbm;
  summary["nt"] = cfg.nt;
  summary["k"] = cfg.k_users;
  for (const auto& s : ps.methods)
    summary["methods"][s.method] = {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
  for (const auto& p : ps.pairs)
    summary["pairs"][p.a + "_vs_" + p.b] = {
        {"mean_diff", p.mean_diff}, {"a_wins", p.a_wins}, {"b_wins", p.b_wins}, {"ties", p.ties}};
  // adaptation-stage parameter counts
  for (const auto& m : cfg.methods) {
    if (m == "optimal") continue;
    const Method method = method_from_string(m == "fast" ? "fast" : m);
    summary["param_counts"][m] = count_cost(method, net, 0, 0).param_count;
  }
  if (fs::exists(cfg.out + "/train_report.json")) {
    const json tr = json::parse(read_text_file(cfg.out + "/train_report.json"));
    if (tr.contains("sample_passes"))
      summary["pretrain_passes"]["fast"] =
          (tr["sample_passes"].get<long long>() + 99) / 100;
    if (tr.contains("maml_sample_passes"))
      summary["pretrain_passes"]["maml"] =
          (tr["maml_sample_passes"].get<long long>() + 99) / 100;
  }
  write_text_file(cfg.out + "/summary.json", summary.dump(2) + "\n");
  if (cfg.timings) write_text_file(cfg.out + "/timing.json", timing.dump(2) + "\n");
}

void cmd_online(const RunConfig& cfg) {
  if (cfg.online_methods.empty()) throw std::invalid_argument("online: empty method list");
  prepare_out(cfg);
  const SystemConfig sys = cfg.system(/*large_scale_active=*/true);
  const ScenarioSchedule schedule = make_three_scenario_schedule(cfg.slots_per_segment);

  OnlineConfig oc;
  oc.problem = cfg.problem;
  oc.n_adapt = cfg.online_n;
  oc.u_test = cfg.online_u;
  oc.seed = Rng::derive(cfg.seed, 0x041eULL);
  oc.svr = cfg.svr;

  OnlineTrace all;
  EmbeddingNet net = EmbeddingNet::load(cfg.out + "/model.txt");
  for (const auto& m : cfg.online_methods) {
    OnlineTrace t;
    if (m == "fast_current")
      t = run_online_fast(net, sys, schedule, OnlineVariant::CurrentSlot, oc);
    else if (m == "fast_cumulative")
      t = run_online_fast(net, sys, schedule, OnlineVariant::Cumulative, oc);
    else if (m == "ftml")
      t = run_online_ftml(net, sys, schedule, cfg.maml, oc);
    else if (m == "nonadaptive")
      t = run_online_nonadaptive(net, sys, schedule, oc);
    else if (m == "optimal")
      t = run_online_reference(sys, schedule, oc);
    else
      throw std::invalid_argument("online: unknown method '" + m + "'");
    all.insert(all.end(), t.begin(), t.end());
  }
  save_trace_csv(all, cfg.out + "/trace.csv", cfg.timings, metric_units(cfg.problem));
}

void cmd_report(const RunConfig& cfg) {
  if (cfg.report_runs.empty()) throw std::invalid_argument("report: no runs listed");
  prepare_out(cfg);

  struct Row {
    double power_dbm;
    int k;
    json methods;
    json passes;
  };
  std::vector<Row> rows;
  std::vector<std::string> method_names;
  for (const auto& run : cfg.report_runs) {
    const std::string path = run + "/summary.json";
    if (!fs::exists(path)) throw std::runtime_error("report: missing " + path);
    const json s = json::parse(read_text_file(path));
    Row r{s.value("power_dbm", 0.0), s.value("k", 0), s["methods"],
          s.contains("pretrain_passes") ? s["pretrain_passes"] : json::object()};
    for (auto it = r.methods.begin(); it != r.methods.end(); ++it)
      if (!wants(method_names, it.key())) method_names.push_back(it.key());
    rows.push_back(std::move(r));
  }
  if (method_names.empty()) throw std::runtime_error("report: summaries carry no methods");

  auto emit = [&](const std::string& path, const std::string& axis_name, auto axis_of) {
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [&](const Row& a, const Row& b) { return axis_of(a) < axis_of(b); });
    std::ostringstream csv;
    csv << "# mean metric per method; see each run's summary.json for units\n";
    csv << axis_name;
    for (const auto& m : method_names) csv << "," << m << "_mean," << m << "_std";
    csv << "\n";
    for (const auto& r : sorted) {
      csv << g17(axis_of(r));
      for (const auto& m : method_names) {
        if (r.methods.contains(m))
          csv << "," << g17(r.methods[m]["mean"].get<double>()) << ","
              << g17(r.methods[m]["std"].get<double>());
        else
          csv << ",,";
      }
      csv << "\n";
    }
    write_text_file(path, csv.str());
  };
  emit(cfg.out + "/report_by_power.csv", "power_dbm", [](const Row& r) { return r.power_dbm; });
  emit(cfg.out + "/report_by_users.csv", "k_users", [](const Row& r) { return static_cast<double>(r.k); });

  std::ostringstream passes;
  passes << "# cumulative 100-sample pretraining passes per method\n";
  passes << "power_dbm,k_users,fast,maml\n";
  for (const auto& r : rows) {
    passes << g17(r.power_dbm) << "," << r.k << ",";
    passes << (r.passes.contains("fast") ? std::to_string(r.passes["fast"].get<long long>()) : "");
    passes << ",";
    passes << (r.passes.contains("maml") ? std::to_string(r.passes["maml"].get<long long>()) : "");
    passes << "\n";
  }
  write_text_file(cfg.out + "/report_passes.csv", passes.str());
}

}  // namespace fastbeam
