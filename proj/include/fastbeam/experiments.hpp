#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastbeam/adaptation.hpp"
#include "fastbeam/channel.hpp"
#include "fastbeam/online.hpp"

namespace fastbeam {

/// Fully resolved experiment configuration. Serialized verbatim into every
/// output directory; identical config + seed reproduces identical artifacts.
struct RunConfig {
  ProblemKind problem = ProblemKind::SinrBalancing;
  std::uint64_t seed = 1;
  std::string out = "runs/default";

  // system
  int nt = 4;
  int k_users = 4;
  double power_dbm = 25.0;
  std::string noise_mode = "auto";  // auto | normalized | physical

  // data
  std::vector<std::string> families = {"rayleigh", "ricean", "nakagami"};
  int n_per_family = 500;
  bool labeled = true;
  double ricean_factor = 3.0;
  double nakagami_m = 5.0;
  double nakagami_power = 2.0;

  // train
  int epochs = 60;
  int batch = 100;
  double lr = 1e-3;
  double val_fraction = 0.1;
  int patience = 20;

  // maml
  MamlConfig maml;
  int maml_support = 10;
  int maml_query = 10;

  // adapt
  int n_ad = 20;
  int repeats = 15;  // adaptation-set draws averaged for transfer/maml
  SvrConfig svr;
  int transfer_steps = 100;
  double transfer_lr = 1e-3;
  LargeScaleSpec scenario;  // shifted test scenario; enabled by default
  std::string scenario_fading = "rayleigh";

  // eval
  int n_test = 200;
  std::vector<std::string> methods = {"optimal", "fast", "nonadaptive", "transfer", "maml"};

  // online
  int slots_per_segment = 50;
  int online_n = 5;
  int online_u = 10;
  std::vector<std::string> online_methods = {"fast_current", "fast_cumulative", "ftml",
                                             "nonadaptive", "optimal"};
  bool timings = false;

  // report
  std::vector<std::string> report_runs;

  RunConfig();

  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_json_text() const;
  static RunConfig from_json_text(const std::string& text);

  /// Paper-protocol dataset and evaluation sizes.
  void apply_paper_scale();

  SystemConfig system(bool large_scale_active) const;
  std::vector<FadingSpec> fading_specs() const;
  FadingSpec scenario_fading_spec() const;
  double power_watts() const { return dbm_to_watts(power_dbm); }
};

void cmd_gen_data(const RunConfig& cfg);
void cmd_pretrain(const RunConfig& cfg);
void cmd_adapt(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_online(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

}  // namespace fastbeam
