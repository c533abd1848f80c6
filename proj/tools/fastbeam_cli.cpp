#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fastbeam/experiments.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  long long seed = -1;
  bool paper_scale = false;
};

fastbeam::RunConfig resolve(const CommonOpts& opFs) {
  fastbeam::RunConfig cfg;
  if (!opFs.config.empty()) cfg = fastbeam::RunConfig::load(opFs.config);
  if (opFs.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opFs.seed);
  if (!opFs.out.empty()) cfg.out = opFs.out;
  if (opFs.paper_scale) cfg.apply_paper_scale();
  return cfg;
}

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", opts.seed, "override the config seed");
  sub->add_option("--out", opts.out, "override the output directory");
  sub->add_flag("--paper-scale", opts.paper_scale, "use full paper-protocol dataset sizes");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive multiuser MISO downlink beamforming experiments"};
  app.require_subcommand(1);

  CommonOpts opts;
  void (*run)(const fastbeam::RunConfig&) = nullptr;

  auto* gen = app.add_subcommand("gen-data", "generate the mixed pretraining dataset");
  add_common(gen, opts);
  gen->callback([&] { run = fastbeam::cmd_gen_data; });

  auto* pre = app.add_subcommand("pretrain", "train the embedding model (and meta model if needed)");
  add_common(pre, opts);
  pre->callback([&] { run = fastbeam::cmd_pretrain; });

  auto* ad = app.add_subcommand("adapt", "fit the regression head on a shifted scenario");
  add_common(ad, opts);
  ad->callback([&] { run = fastbeam::cmd_adapt; });

  auto* ev = app.add_subcommand("eval", "paired evaluation of all configured methods");
  add_common(ev, opts);
  ev->callback([&] { run = fastbeam::cmd_eval; });

  auto* on = app.add_subcommand("online", "non-stationary per-slot simulation");
  add_common(on, opts);
  on->callback([&] { run = fastbeam::cmd_online; });

  auto* rep = app.add_subcommand("report", "aggregate run summaries into tables");
  add_common(rep, opts);
  rep->callback([&] { run = fastbeam::cmd_report; });

  CLI11_PARSE(app, argc, argv);

  try {
    run(resolve(opts));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
