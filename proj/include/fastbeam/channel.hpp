#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastbeam/linalg.hpp"
#include "fastbeam/rng.hpp"

namespace fastbeam {

double dbm_to_watts(double dbm);
double watts_to_dbm(double w);

/// Thermal noise power in watts for a -174 dBm/Hz density over `bandwidth_hz`.
double thermal_noise_watts(double bandwidth_hz = 20e6);

enum class Fading { Rayleigh, Ricean, Nakagami };

std::string to_string(Fading f);
Fading fading_from_string(const std::string& s);

struct FadingSpec {
  Fading family = Fading::Rayleigh;
  double ricean_factor = 3.0;
  double nakagami_m = 5.0;
  double nakagami_power = 2.0;

  void validate() const;
};

/// Path loss PL_dB = a + b*log10(d_km) plus log-normal shadowing, applied as an
/// amplitude scale per user column. gain_offset_db absorbs antenna gains.
struct LargeScaleSpec {
  bool enabled = false;
  double cell_radius_m = 500.0;
  double min_dist_m = 50.0;
  double shadow_std_db = 8.0;
  double pathloss_a = 128.1;
  double pathloss_b = 37.6;
  double gain_offset_db = 0.0;

  void validate() const;
};

struct SystemConfig {
  int nt = 4;
  int k_users = 4;
  double power_budget = dbm_to_watts(25.0);
  std::vector<double> noise;  // per-user variance, watts

  SystemConfig() : noise(4, 1.0) {}
  SystemConfig(int nt_, int k_, double power_w, double common_noise_w)
      : nt(nt_), k_users(k_), power_budget(power_w), noise(k_, common_noise_w) {}

  void validate() const;
};

/// Nt x K channel draw; column k is user k's channel.
CMat sample_channel(const SystemConfig& cfg, const FadingSpec& fading,
                    const LargeScaleSpec& large, std::uint64_t seed);

/// Largest column norm, used as the per-sample input normalization factor.
double channel_norm_factor(const CMat& h);

struct Sample {
  CMat h;                      // raw channel
  double norm = 1.0;           // largest column norm of h
  std::vector<double> label;   // uplink power q; empty if unlabeled
  std::string family = "unknown";
};

struct Dataset {
  int nt = 0;
  int k_users = 0;
  double power_budget = 0.0;
  std::vector<double> noise;
  std::string family = "mixed";
  std::uint64_t seed = 0;
  std::vector<Sample> samples;

  bool labeled() const { return !samples.empty() && !samples.front().label.empty(); }
};

using Labeler = std::function<std::vector<double>(const CMat&)>;

struct DatasetBuildStats {
  int requested = 0;
  int dropped = 0;
};

/// Merges per-family draws into one training set; labels via `labeler` when
/// given. A labeler failure drops the sample; more than 1% drops is an error.
Dataset build_pretrain_dataset(const SystemConfig& cfg, const std::vector<FadingSpec>& families,
                               int n_per_family, const Labeler& labeler, std::uint64_t seed,
                               const LargeScaleSpec& large = {},
                               DatasetBuildStats* stats = nullptr);

struct ScenarioSegment {
  FadingSpec fading;
  LargeScaleSpec large;
  int slot_count = 50;
  std::string name;
};

struct ScenarioSchedule {
  std::vector<ScenarioSegment> segments;

  int horizon() const;
  int segment_at(int slot) const;  // throws if slot is beyond the horizon
};

struct SlotSamples {
  std::vector<CMat> adapt;
  std::vector<CMat> test;
};

/// Draws for the segment active at slot t; adaptation and test channels share
/// that segment's distribution. Streams are keyed on (seed, t) only, so every
/// method sees identical slot data under a shared seed.
SlotSamples next_slot(const SystemConfig& cfg, const ScenarioSchedule& schedule, int t,
                      int n_adapt, int u_test, std::uint64_t seed);

/// Three-segment proxy for a static-to-mobile drift: each segment keeps
/// Rayleigh small-scale fading but loses link budget (wider cell, more
/// shadowing, less antenna gain).
ScenarioSchedule make_three_scenario_schedule(int slots_per_segment = 50);

}  // namespace fastbeam
