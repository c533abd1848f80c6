#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fastbeam {

struct MethodSummary {
  std::string method;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  int count = 0;
};

struct PairDiff {
  std::string a, b;
  double mean_diff = 0.0;  // mean(a - b)
  int a_wins = 0, b_wins = 0, ties = 0;
};

struct PairedSummary {
  std::vector<MethodSummary> methods;
  std::vector<PairDiff> pairs;
};

/// rows[i][m] is method m's metric on paired instance i; every row must cover
/// every method.
PairedSummary summarize(const std::vector<std::string>& methods,
                        const std::vector<std::vector<double>>& rows);

struct SensitivityResult {
  std::vector<double> per_dataset_mean;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
};

/// Repeats an adapt-then-evaluate experiment over independently drawn
/// adaptation sets; `mean_metric_of_draw` maps a draw seed to the mean test
/// metric of the freshly adapted model.
SensitivityResult sensitivity_study(const std::function<double(std::uint64_t)>& mean_metric_of_draw,
                                    int n_datasets, std::uint64_t seed);

}  // namespace fastbeam
