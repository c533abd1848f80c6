#include "fastbeam/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace fastbeam {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

double thermal_noise_watts(double bandwidth_hz) {
  return dbm_to_watts(-174.0 + 10.0 * std::log10(bandwidth_hz));
}

std::string to_string(Fading f) {
  switch (f) {
    case Fading::Rayleigh: return "rayleigh";
    case Fading::Ricean: return "ricean";
    case Fading::Nakagami: return "nakagami";
  }
  return "rayleigh";
}

Fading fading_from_string(const std::string& s) {
  if (s == "rayleigh") return Fading::Rayleigh;
  if (s == "ricean") return Fading::Ricean;
  if (s == "nakagami") return Fading::Nakagami;
  throw std::invalid_argument("unknown fading family: " + s);
}

void FadingSpec::validate() const {
  if (ricean_factor < 0.0) throw std::invalid_argument("ricean_factor must be >= 0");
  if (nakagami_m < 0.5) throw std::invalid_argument("nakagami_m must be >= 0.5");
  if (nakagami_power <= 0.0) throw std::invalid_argument("nakagami_power must be > 0");
}

void LargeScaleSpec::validate() const {
  if (!enabled) return;
  if (!(cell_radius_m > min_dist_m && min_dist_m > 0.0))
    throw std::invalid_argument("need cell_radius_m > min_dist_m > 0");
  if (shadow_std_db < 0.0) throw std::invalid_argument("shadow_std_db must be >= 0");
}

void SystemConfig::validate() const {
  if (nt < 1 || k_users < 1) throw std::invalid_argument("nt and k_users must be >= 1");
  if (!(power_budget > 0.0)) throw std::invalid_argument("power_budget must be > 0");
  if (static_cast<int>(noise.size()) != k_users) throw std::invalid_argument("noise must have one entry per user");
  for (double v : noise)
    if (!(v > 0.0)) throw std::invalid_argument("noise power must be > 0");
}

namespace {

cplx small_scale_entry(const FadingSpec& f, Rng& rng) {
  switch (f.family) {
    case Fading::Rayleigh:
      return cplx(rng.normal(), rng.normal()) * M_SQRT1_2;
    case Fading::Ricean: {
      const double k = f.ricean_factor;
      const double los = std::sqrt(k / (k + 1.0));
      const double scatter = std::sqrt(1.0 / (k + 1.0));
      return cplx(los, 0.0) + scatter * cplx(rng.normal(), rng.normal()) * M_SQRT1_2;
    }
    case Fading::Nakagami: {
      // power ~ Gamma(m, omega/m), phase uniform
      const double p = rng.gamma(f.nakagami_m) * (f.nakagami_power / f.nakagami_m);
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      return std::sqrt(p) * cplx(std::cos(phase), std::sin(phase));
    }
  }
  return 0.0;
}

}  // namespace

CMat sample_channel(const SystemConfig& cfg, const FadingSpec& fading,
                    const LargeScaleSpec& large, std::uint64_t seed) {
  cfg.validate();
  fading.validate();
  large.validate();
  Rng rng(seed);
  CMat h(cfg.nt, cfg.k_users);
  for (int k = 0; k < cfg.k_users; ++k) {
    double amp = 1.0;
    if (large.enabled) {
      // uniform over the annulus area [min_dist, radius]
      const double r0 = large.min_dist_m, r1 = large.cell_radius_m;
      const double d_m = std::sqrt(rng.uniform() * (r1 * r1 - r0 * r0) + r0 * r0);
      const double pl_db = large.pathloss_a + large.pathloss_b * std::log10(d_m / 1000.0);
      const double shadow_db = large.shadow_std_db * rng.normal();
      amp = std::pow(10.0, (-pl_db + large.gain_offset_db + shadow_db) / 20.0);
    }
    for (int r = 0; r < cfg.nt; ++r) h(r, k) = amp * small_scale_entry(fading, rng);
  }
  return h;
}

double channel_norm_factor(const CMat& h) {
  double best = 0.0;
  for (int k = 0; k < h.cols; ++k) best = std::max(best, norm2(h.col(k)));
  return best > 0.0 ? best : 1.0;
}

Dataset build_pretrain_dataset(const SystemConfig& cfg, const std::vector<FadingSpec>& families,
                               int n_per_family, const Labeler& labeler, std::uint64_t seed,
                               const LargeScaleSpec& large, DatasetBuildStats* stats) {
  if (n_per_family < 1) throw std::invalid_argument("n_per_family must be >= 1");
  if (families.empty()) throw std::invalid_argument("need at least one fading family");
  Dataset ds;
  ds.nt = cfg.nt;
  ds.k_users = cfg.k_users;
  ds.power_budget = cfg.power_budget;
  ds.noise = cfg.noise;
  ds.seed = seed;
  ds.family = families.size() == 1 ? to_string(families.front().family) : "mixed";

  int dropped = 0;
  const int requested = n_per_family * static_cast<int>(families.size());
  for (size_t fi = 0; fi < families.size(); ++fi) {
    for (int i = 0; i < n_per_family; ++i) {
      const std::uint64_t sub = Rng::derive(seed, fi * static_cast<std::uint64_t>(n_per_family) + i);
      Sample s;
      s.h = sample_channel(cfg, families[fi], large, sub);
      s.norm = channel_norm_factor(s.h);
      s.family = to_string(families[fi].family);
      if (labeler) {
        try {
          s.label = labeler(s.h);
        } catch (const std::exception&) {
          ++dropped;
          continue;
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  if (stats) {
    stats->requested = requested;
    stats->dropped = dropped;
  }
  if (dropped * 100 > requested) throw std::runtime_error("build_pretrain_dataset: more than 1% of samples dropped");
  return ds;
}

int ScenarioSchedule::horizon() const {
  int h = 0;
  for (const auto& s : segments) h += s.slot_count;
  return h;
}

int ScenarioSchedule::segment_at(int slot) const {
  if (slot < 0) throw std::out_of_range("slot index negative");
  int acc = 0;
  for (size_t i = 0; i < segments.size(); ++i) {
    acc += segments[i].slot_count;
    if (slot < acc) return static_cast<int>(i);
  }
  throw std::out_of_range("slot beyond schedule horizon");
}

SlotSamples next_slot(const SystemConfig& cfg, const ScenarioSchedule& schedule, int t,
                      int n_adapt, int u_test, std::uint64_t seed) {
  const auto& seg = schedule.segments[schedule.segment_at(t)];
  SlotSamples out;
  const std::uint64_t slot_seed = Rng::derive(seed, static_cast<std::uint64_t>(t));
  for (int i = 0; i < n_adapt; ++i)
    out.adapt.push_back(sample_channel(cfg, seg.fading, seg.large, Rng::derive(slot_seed, i)));
  for (int i = 0; i < u_test; ++i)
    out.test.push_back(sample_channel(cfg, seg.fading, seg.large, Rng::derive(slot_seed, 1u << 20 | i)));
  return out;
}

ScenarioSchedule make_three_scenario_schedule(int slots_per_segment) {
  ScenarioSchedule sch;
  FadingSpec rayleigh;
  LargeScaleSpec outdoor;
  outdoor.enabled = true;
  outdoor.cell_radius_m = 300.0;
  outdoor.min_dist_m = 50.0;
  outdoor.shadow_std_db = 4.0;
  outdoor.gain_offset_db = 10.0;
  LargeScaleSpec urban = outdoor;
  urban.cell_radius_m = 600.0;
  urban.shadow_std_db = 8.0;
  urban.gain_offset_db = 5.0;
  LargeScaleSpec highway = urban;
  highway.cell_radius_m = 1000.0;
  highway.min_dist_m = 100.0;
  highway.gain_offset_db = 0.0;
  sch.segments.push_back({rayleigh, outdoor, slots_per_segment, "outdoor"});
  sch.segments.push_back({rayleigh, urban, slots_per_segment, "urban"});
  sch.segments.push_back({rayleigh, highway, slots_per_segment, "highway"});
  return sch;
}

}  // namespace fastbeam
