#include "fastbeam/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fastbeam/io_util.hpp"

namespace fastbeam {

void SvrConfig::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("svr: C must be > 0");
  if (epsilon < 0.0) throw std::invalid_argument("svr: epsilon must be >= 0");
  if (smo_tol <= 0.0) throw std::invalid_argument("svr: smo_tol must be > 0");
  if (max_passes < 1) throw std::invalid_argument("svr: max_passes must be >= 1");
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double scale_gamma(const std::vector<std::vector<double>>& x) {
  const size_t d = x[0].size();
  double mean = 0.0, count = 0.0;
  for (const auto& row : x)
    for (double v : row) {
      mean += v;
      count += 1.0;
    }
  mean /= count;
  double var = 0.0;
  for (const auto& row : x)
    for (double v : row) var += (v - mean) * (v - mean);
  var /= count;
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// SMO on the expanded dual: variables lambda[0..2N) with lambda_i ~ alpha_i
// for i < N and ~ alpha*_i above, signs d = +1/-1, box [0, C], constraint
// sum d_i lambda_i = 0. beta = alpha - alpha*.
struct SmoProblem {
  int n;
  double c, eps, tol;
  const std::vector<double>& kernel;  // n x n
  const std::vector<double>& targets;

  std::vector<double> lambda, grad, beta;
  double bias = 0.0;

  SmoProblem(int n_, double c_, double eps_, double tol_, const std::vector<double>& k,
             const std::vector<double>& t)
      : n(n_), c(c_), eps(eps_), tol(tol_), kernel(k), targets(t),
        lambda(2 * n_, 0.0), grad(2 * n_), beta(n_, 0.0) {
    for (int i = 0; i < n; ++i) {
      grad[i] = eps - targets[i];
      grad[n + i] = eps + targets[i];
    }
  }

  double sign(int i) const { return i < n ? 1.0 : -1.0; }
  int point(int i) const { return i < n ? i : i - n; }

  bool in_up(int i) const { return sign(i) > 0 ? lambda[i] < c : lambda[i] > 0.0; }
  bool in_low(int i) const { return sign(i) > 0 ? lambda[i] > 0.0 : lambda[i] < c; }

  // returns false once the maximal KKT violation drops below tol
  bool select(int& out_i, int& out_j) {
    double m = -std::numeric_limits<double>::infinity();
    double mm = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < 2 * n; ++i) {
      const double v = -sign(i) * grad[i];
      if (in_up(i) && v > m) {
        m = v;
        bi = i;
      }
      if (in_low(i) && v < mm) {
        mm = v;
        bj = i;
      }
    }
    bias = 0.5 * (m + mm);
    if (bi < 0 || bj < 0 || m - mm <= tol) return false;
    out_i = bi;
    out_j = bj;
    return true;
  }

  void update(int i, int j) {
    const double s = sign(i) * sign(j);
    const int pi = point(i), pj = point(j);
    double eta = kernel[static_cast<size_t>(pi) * n + pi] + kernel[static_cast<size_t>(pj) * n + pj] -
                 2.0 * kernel[static_cast<size_t>(pi) * n + pj];
    if (eta < 1e-12) eta = 1e-12;
    double step = -(grad[i] - s * grad[j]) / eta;
    // box clipping for delta_i; delta_j = -s * delta_i
    double lo = -lambda[i], hi = c - lambda[i];
    if (s > 0.0) {
      lo = std::max(lo, lambda[j] - c);
      hi = std::min(hi, lambda[j]);
    } else {
      lo = std::max(lo, -lambda[j]);
      hi = std::min(hi, c - lambda[j]);
    }
    step = std::clamp(step, lo, hi);
    if (step == 0.0) return;
    lambda[i] += step;
    lambda[j] -= s * step;
    const double dbi = sign(i) * step;         // change of beta[pi]
    const double dbj = sign(j) * (-s * step);  // change of beta[pj]
    beta[pi] += dbi;
    beta[pj] += dbj;
    for (int a = 0; a < 2 * n; ++a) {
      const int pa = point(a);
      grad[a] += sign(a) * (kernel[static_cast<size_t>(pa) * n + pi] * dbi +
                            kernel[static_cast<size_t>(pa) * n + pj] * dbj);
    }
  }

  double dual_objective() const {
    // minimization form: 1/2 beta^T K beta + eps * sum(lambda) - t^T beta
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
      if (beta[i] == 0.0) continue;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += kernel[static_cast<size_t>(i) * n + j] * beta[j];
      quad += beta[i] * acc;
    }
    double lin = 0.0;
    for (int i = 0; i < 2 * n; ++i) lin += eps * lambda[i];
    for (int i = 0; i < n; ++i) lin -= targets[i] * beta[i];
    return 0.5 * quad + lin;
  }
};

}  // namespace

SvrModel svr_fit(const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y, const SvrConfig& cfg,
                 SvrFitReport* report) {
  cfg.validate();
  if (x.size() < 2) throw std::invalid_argument("svr_fit: need at least 2 samples");
  if (y.size() != x.size()) throw std::invalid_argument("svr_fit: X/Y row mismatch");
  const int n = static_cast<int>(x.size());
  const int d = static_cast<int>(x[0].size());
  const int outputs = static_cast<int>(y[0].size());
  for (const auto& row : x)
    if (static_cast<int>(row.size()) != d) throw std::invalid_argument("svr_fit: ragged X");

  SvrModel model;
  model.n_features = d;
  model.n_outputs = outputs;
  model.gamma = cfg.gamma > 0.0 ? cfg.gamma : scale_gamma(x);
  model.epsilon = cfg.epsilon;
  model.c = cfg.c;
  model.outputs.resize(outputs);

  bool degenerate = true;
  for (int i = 1; i < n && degenerate; ++i) degenerate = x[i] == x[0];
  if (degenerate) {
    for (int k = 0; k < outputs; ++k) {
      std::vector<double> t(n);
      for (int i = 0; i < n; ++i) t[i] = y[i][k];
      model.outputs[k].bias = median(t);
    }
    return model;
  }

  std::vector<double> kernel(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    kernel[static_cast<size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double v = std::exp(-model.gamma * sq_dist(x[i], x[j]));
      kernel[static_cast<size_t>(i) * n + j] = v;
      kernel[static_cast<size_t>(j) * n + i] = v;
    }
  }

  const long max_iter = static_cast<long>(cfg.max_passes) * std::max(n, 64);
  for (int k = 0; k < outputs; ++k) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = y[i][k];
    SmoProblem smo(n, cfg.c, cfg.epsilon, cfg.smo_tol, kernel, t);
    int i = -1, j = -1;
    for (long it = 0; it < max_iter && smo.select(i, j); ++it) {
      smo.update(i, j);
      if (report) {
        ++report->iterations;
        if (it % n == 0) report->dual_trace.push_back(-smo.dual_objective());
      }
    }
    if (report) report->dual_trace.push_back(-smo.dual_objective());
    auto& out = model.outputs[k];
    out.bias = smo.bias;
    for (int s = 0; s < n; ++s) {
      if (smo.beta[s] != 0.0) {
        out.support.push_back(x[s]);
        out.coef.push_back(smo.beta[s]);
      }
    }
  }
  return model;
}

std::vector<std::vector<double>> svr_predict(const SvrModel& model,
                                             const std::vector<std::vector<double>>& x) {
  std::vector<std::vector<double>> out(x.size(), std::vector<double>(model.n_outputs));
  for (size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(x[i].size()) != model.n_features)
      throw std::invalid_argument("svr_predict: feature dimension mismatch");
    for (int k = 0; k < model.n_outputs; ++k) {
      const auto& o = model.outputs[k];
      double acc = o.bias;
      for (size_t s = 0; s < o.support.size(); ++s)
        acc += o.coef[s] * std::exp(-model.gamma * sq_dist(x[i], o.support[s]));
      out[i][k] = acc;
    }
  }
  return out;
}

double svr_kkt_violation(const SvrModel& model, const std::vector<std::vector<double>>& x,
                         const std::vector<std::vector<double>>& y) {
  const auto pred = svr_predict(model, x);
  double worst = 0.0;
  for (int k = 0; k < model.n_outputs; ++k) {
    const auto& o = model.outputs[k];
    for (size_t i = 0; i < x.size(); ++i) {
      double beta = 0.0;
      for (size_t s = 0; s < o.support.size(); ++s) {
        if (o.support[s] == x[i]) {
          beta = o.coef[s];
          break;
        }
      }
      const double r = y[i][k] - pred[i][k];
      double v = 0.0;
      const double bound = model.c * (1.0 - 1e-9);
      if (beta == 0.0)
        v = std::max(0.0, std::abs(r) - model.epsilon);
      else if (beta >= bound)
        v = std::max(0.0, model.epsilon - r);
      else if (beta <= -bound)
        v = std::max(0.0, r + model.epsilon);
      else if (beta > 0.0)
        v = std::abs(r - model.epsilon);
      else
        v = std::abs(r + model.epsilon);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

void SvrModel::save(const std::string& path) const {
  std::ostringstream out;
  out << "fastbeam-svr v1\n";
  out << "features " << n_features << "\n";
  out << "outputs " << n_outputs << "\n";
  out << "gamma " << g17(gamma) << "\n";
  out << "epsilon " << g17(epsilon) << "\n";
  out << "c " << g17(c) << "\n";
  for (const auto& o : outputs) {
    out << "output " << o.support.size() << " " << g17(o.bias) << "\n";
    for (size_t s = 0; s < o.support.size(); ++s) {
      out << g17(o.coef[s]);
      for (double v : o.support[s]) out << " " << g17(v);
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

SvrModel SvrModel::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  expect_magic(in, "fastbeam-svr v1");
  SvrModel m;
  std::string key;
  in >> key >> m.n_features;
  in >> key >> m.n_outputs;
  in >> key >> m.gamma;
  in >> key >> m.epsilon;
  in >> key >> m.c;
  m.outputs.resize(m.n_outputs);
  for (auto& o : m.outputs) {
    size_t count = 0;
    in >> key >> count >> o.bias;
    if (key != "output") throw std::runtime_error("svr file: expected output block");
    o.support.assign(count, std::vector<double>(m.n_features));
    o.coef.assign(count, 0.0);
    for (size_t s = 0; s < count; ++s) {
      in >> o.coef[s];
      for (auto& v : o.support[s]) in >> v;
    }
  }
  if (!in) throw std::runtime_error("svr file: truncated");
  return m;
}

}  // namespace fastbeam
