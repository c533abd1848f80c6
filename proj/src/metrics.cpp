#include "fastbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fastbeam/rng.hpp"

namespace fastbeam {

PairedSummary summarize(const std::vector<std::string>& methods,
                        const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || methods.empty()) throw std::invalid_argument("summarize: empty input");
  const size_t m = methods.size();
  for (const auto& r : rows)
    if (r.size() != m) throw std::invalid_argument("summarize: row does not cover every method");

  PairedSummary out;
  for (size_t j = 0; j < m; ++j) {
    MethodSummary s;
    s.method = methods[j];
    s.count = static_cast<int>(rows.size());
    for (const auto& r : rows) s.mean += r[j];
    s.mean /= rows.size();
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - s.mean) * (r[j] - s.mean);
    s.stddev = rows.size() > 1 ? std::sqrt(var / (rows.size() - 1)) : 0.0;
    out.methods.push_back(s);
  }
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = a + 1; b < m; ++b) {
      PairDiff d;
      d.a = methods[a];
      d.b = methods[b];
      for (const auto& r : rows) {
        const double diff = r[a] - r[b];
        d.mean_diff += diff;
        if (diff > 0.0)
          ++d.a_wins;
        else if (diff < 0.0)
          ++d.b_wins;
        else
          ++d.ties;
      }
      d.mean_diff /= rows.size();
      out.pairs.push_back(d);
    }
  }
  return out;
}

SensitivityResult sensitivity_study(const std::function<double(std::uint64_t)>& mean_metric_of_draw,
                                    int n_datasets, std::uint64_t seed) {
  if (n_datasets < 1) throw std::invalid_argument("sensitivity_study: need at least one draw");
  SensitivityResult res;
  res.per_dataset_mean.reserve(n_datasets);
  for (int i = 0; i < n_datasets; ++i) res.per_dataset_mean.push_back(mean_metric_of_draw(Rng::derive(seed, i)));
  for (double v : res.per_dataset_mean) res.mean += v;
  res.mean /= n_datasets;
  double var = 0.0;
  for (double v : res.per_dataset_mean) var += (v - res.mean) * (v - res.mean);
  res.stddev = n_datasets > 1 ? std::sqrt(var / (n_datasets - 1)) : 0.0;
  auto sorted = res.per_dataset_mean;
  std::sort(sorted.begin(), sorted.end());
  res.median = n_datasets % 2 ? sorted[n_datasets / 2]
                              : 0.5 * (sorted[n_datasets / 2 - 1] + sorted[n_datasets / 2]);
  return res;
}

}  // namespace fastbeam
