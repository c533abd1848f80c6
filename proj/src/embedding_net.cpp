#include "fastbeam/embedding_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fastbeam/io_util.hpp"
#include "fastbeam/rng.hpp"
#include "fastbeam/system_model.hpp"

namespace fastbeam {

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;
constexpr double kLn2 = 0.6931471805599453;
}  // namespace

std::vector<double> make_net_input(const CMat& h, double norm) {
  const int w = h.rows * h.cols;
  std::vector<double> x(2 * static_cast<size_t>(w));
  int i = 0;
  for (int c = 0; c < h.cols; ++c) {
    for (int r = 0; r < h.rows; ++r, ++i) {
      x[i] = h(r, c).real() / norm;
      x[w + i] = h(r, c).imag() / norm;
    }
  }
  return x;
}

std::pair<double, std::vector<double>> sumrate_and_grad_q(const CMat& h, const std::vector<double>& q,
                                                          double noise_power) {
  const int nt = h.rows, k_users = h.cols;
  if (q.size() != static_cast<size_t>(k_users)) throw std::invalid_argument("q dimension mismatch");
  for (double v : q)
    if (v < 0.0) throw std::invalid_argument("q must be nonnegative");

  CMat A = CMat::identity(nt);
  for (int j = 0; j < k_users; ++j) {
    const CVec hj = h.col(j);
    for (int r = 0; r < nt; ++r)
      for (int c = 0; c < nt; ++c) A(r, c) += (q[j] / noise_power) * hj[r] * std::conj(hj[c]);
  }
  const CholeskySolver chol(A);

  std::vector<CVec> g(k_users), wdir(k_users), wcol(k_users);
  std::vector<double> gnorm(k_users);
  for (int k = 0; k < k_users; ++k) {
    g[k] = chol.solve(h.col(k));
    gnorm[k] = norm2(g[k]);
    wdir[k] = g[k];
    for (auto& z : wdir[k]) z /= gnorm[k];
    wcol[k] = wdir[k];
    for (auto& z : wcol[k]) z *= std::sqrt(q[k]);
  }

  // a[k][l] = h_k^H w_l ; c[j][l] = h_j^H g_l
  std::vector<std::vector<cplx>> amat(k_users, std::vector<cplx>(k_users));
  std::vector<std::vector<cplx>> cmat(k_users, std::vector<cplx>(k_users));
  for (int k = 0; k < k_users; ++k) {
    const CVec hk = h.col(k);
    for (int l = 0; l < k_users; ++l) {
      amat[k][l] = dot(hk, wcol[l]);
      cmat[k][l] = dot(hk, g[l]);
    }
  }
  std::vector<double> denom(k_users), sinr(k_users);
  double rate = 0.0;
  for (int k = 0; k < k_users; ++k) {
    double intf = 0.0;
    for (int l = 0; l < k_users; ++l)
      if (l != k) intf += std::norm(amat[k][l]);
    denom[k] = intf + noise_power;
    sinr[k] = std::norm(amat[k][k]) / denom[k];
    rate += std::log2(1.0 + sinr[k]);
  }

  std::vector<double> grad(k_users, 0.0);
  for (int j = 0; j < k_users; ++j) {
    // dw_l/dq_j for every l, then chain into the SINRs
    std::vector<CVec> dw(k_users, CVec(nt, cplx(0.0)));
    for (int l = 0; l < k_users; ++l) {
      // dg_l = -(h_j^H g_l / sigma^2) g_j
      const cplx coef = -cmat[j][l] / noise_power;
      CVec dg(nt);
      for (int r = 0; r < nt; ++r) dg[r] = coef * g[j][r];
      const double dnorm = (dot(g[l], dg)).real() / gnorm[l];
      const double sq = std::sqrt(q[l]);
      for (int r = 0; r < nt; ++r)
        dw[l][r] = sq * (dg[r] / gnorm[l] - g[l][r] * dnorm / (gnorm[l] * gnorm[l]));
      if (l == j && q[l] > 0.0) {
        const double half = 0.5 / sq;
        for (int r = 0; r < nt; ++r) dw[l][r] += half * wdir[l][r];
      }
    }
    double drate = 0.0;
    for (int k = 0; k < k_users; ++k) {
      const CVec hk = h.col(k);
      const double dsig = 2.0 * (std::conj(amat[k][k]) * dot(hk, dw[k])).real();
      double dintf = 0.0;
      for (int l = 0; l < k_users; ++l)
        if (l != k) dintf += 2.0 * (std::conj(amat[k][l]) * dot(hk, dw[l])).real();
      const double dgamma = (dsig * denom[k] - std::norm(amat[k][k]) * dintf) / (denom[k] * denom[k]);
      drate += dgamma / ((1.0 + sinr[k]) * kLn2);
    }
    grad[j] = drate;
  }
  return {rate, grad};
}

Adam::Adam(int n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    params[i] -= cfg_.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.eps);
  }
}

struct EmbeddingNet::Cache {
  int n = 0;
  std::vector<const double*> xs;
  std::vector<double> z1, a1, xh1, z2, a2, xh2;
  std::vector<double> mean1, inv_std1, mean2, inv_std2;  // per channel
  std::vector<double> o, s, qhat;                        // n*K
};

EmbeddingNet::EmbeddingNet(int nt, int k_users, double power_budget, std::uint64_t init_seed)
    : nt_(nt), k_(k_users), power_(power_budget) {
  if (nt < 1 || k_users < 1 || !(power_budget > 0.0)) throw std::invalid_argument("bad network dimensions");
  const int f = flat_features();
  o_conv1_ = 0;
  o_conv2_ = o_conv1_ + kChannels * 1 * 9;
  o_bn1g_ = o_conv2_ + kChannels * kChannels * 9;
  o_bn1b_ = o_bn1g_ + kChannels;
  o_bn2g_ = o_bn1b_ + kChannels;
  o_bn2b_ = o_bn2g_ + kChannels;
  o_fcw_ = o_bn2b_ + kChannels;
  o_fcb_ = o_fcw_ + k_ * f;
  params_.assign(o_fcb_ + k_, 0.0);
  buffers_.assign(4 * kChannels, 0.0);
  for (int c = 0; c < kChannels; ++c) {
    params_[o_bn1g_ + c] = 1.0;
    params_[o_bn2g_ + c] = 1.0;
    buffers_[kChannels + c] = 1.0;      // bn1 running var
    buffers_[3 * kChannels + c] = 1.0;  // bn2 running var
  }
  Rng rng(init_seed);
  const double s1 = std::sqrt(2.0 / 9.0);               // He, fan_in = 3*3*1
  const double s2 = std::sqrt(2.0 / (9.0 * kChannels));  // fan_in = 3*3*8
  const double sf = std::sqrt(2.0 / (f + k_));           // Glorot for the sigmoid head
  for (int i = o_conv1_; i < o_conv2_; ++i) params_[i] = s1 * rng.normal();
  for (int i = o_conv2_; i < o_bn1g_; ++i) params_[i] = s2 * rng.normal();
  for (int i = o_fcw_; i < o_fcb_; ++i) params_[i] = sf * rng.normal();
}

void EmbeddingNet::set_params(std::vector<double> p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter vector size mismatch");
  params_ = std::move(p);
}

std::pair<int, int> EmbeddingNet::fc_param_range() const { return {o_fcw_, o_fcb_ + k_}; }

void EmbeddingNet::set_running_stats(std::vector<double> b) {
  if (b.size() != buffers_.size()) throw std::invalid_argument("running stats size mismatch");
  for (int c = 0; c < kChannels; ++c) {
    if (!(b[kChannels + c] > 0.0) || !(b[3 * kChannels + c] > 0.0))
      throw std::invalid_argument("running variances must be positive");
  }
  buffers_ = std::move(b);
}

namespace {

// 3x3 convolution, stride 1, pad 1, height fixed at 2.
void conv_forward(const double* w, int cin, int cout, int n, int width, const double* in,
                  double* out) {
  const size_t in_map = static_cast<size_t>(2) * width;
  const size_t out_map = in_map;
  for (int ni = 0; ni < n; ++ni) {
    for (int o = 0; o < cout; ++o) {
      double* dst = out + (static_cast<size_t>(ni) * cout + o) * out_map;
      for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < width; ++x) {
          double acc = 0.0;
          for (int i = 0; i < cin; ++i) {
            const double* src = in + (static_cast<size_t>(ni) * cin + i) * in_map;
            const double* ker = w + (static_cast<size_t>(o) * cin + i) * 9;
            for (int ky = 0; ky < 3; ++ky) {
              const int yy = y + ky - 1;
              if (yy < 0 || yy > 1) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int xx = x + kx - 1;
                if (xx < 0 || xx >= width) continue;
                acc += ker[ky * 3 + kx] * src[yy * width + xx];
              }
            }
          }
          dst[y * width + x] = acc;
        }
      }
    }
  }
}

// Gradients w.r.t. weights and (optionally) the layer input.
void conv_backward(const double* w, int cin, int cout, int n, int width, const double* in,
                   const double* dout, double* dw, double* din) {
  const size_t map = static_cast<size_t>(2) * width;
  for (int ni = 0; ni < n; ++ni) {
    for (int o = 0; o < cout; ++o) {
      const double* dz = dout + (static_cast<size_t>(ni) * cout + o) * map;
      for (int i = 0; i < cin; ++i) {
        const double* src = in + (static_cast<size_t>(ni) * cin + i) * map;
        double* dker = dw + (static_cast<size_t>(o) * cin + i) * 9;
        double* dsrc = din ? din + (static_cast<size_t>(ni) * cin + i) * map : nullptr;
        const double* ker = w + (static_cast<size_t>(o) * cin + i) * 9;
        for (int y = 0; y < 2; ++y) {
          for (int x = 0; x < width; ++x) {
            const double d = dz[y * width + x];
            if (d == 0.0) continue;
            for (int ky = 0; ky < 3; ++ky) {
              const int yy = y + ky - 1;
              if (yy < 0 || yy > 1) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int xx = x + kx - 1;
                if (xx < 0 || xx >= width) continue;
                dker[ky * 3 + kx] += d * src[yy * width + xx];
                if (dsrc) dsrc[yy * width + xx] += d * ker[ky * 3 + kx];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

void EmbeddingNet::forward_batch(const std::vector<const double*>& xs, NetMode mode,
                                 bool update_running, Cache& cache) {
  const int n = static_cast<int>(xs.size());
  const int w = width();
  const size_t map = static_cast<size_t>(2) * w;
  cache.n = n;
  cache.xs = xs;
  // pack inputs contiguously (cin = 1)
  std::vector<double> in(static_cast<size_t>(n) * map);
  for (int ni = 0; ni < n; ++ni) std::copy(xs[ni], xs[ni] + map, in.begin() + ni * map);

  auto bn_relu = [&](const std::vector<double>& z, std::vector<double>& xh, std::vector<double>& a,
                     std::vector<double>& mean, std::vector<double>& inv_std, int gofs, int bofs,
                     int buf_mean, int buf_var) {
    xh.assign(z.size(), 0.0);
    a.assign(z.size(), 0.0);
    mean.assign(kChannels, 0.0);
    inv_std.assign(kChannels, 0.0);
    const size_t per = map;  // elements per (sample, channel)
    const double m = static_cast<double>(n) * per;
    for (int c = 0; c < kChannels; ++c) {
      double mu = 0.0, var = 0.0;
      if (mode == NetMode::Train) {
        for (int ni = 0; ni < n; ++ni) {
          const double* zz = z.data() + (static_cast<size_t>(ni) * kChannels + c) * per;
          for (size_t i = 0; i < per; ++i) mu += zz[i];
        }
        mu /= m;
        for (int ni = 0; ni < n; ++ni) {
          const double* zz = z.data() + (static_cast<size_t>(ni) * kChannels + c) * per;
          for (size_t i = 0; i < per; ++i) var += (zz[i] - mu) * (zz[i] - mu);
        }
        var /= m;
        if (update_running) {
          buffers_[buf_mean + c] = kBnMomentum * buffers_[buf_mean + c] + (1.0 - kBnMomentum) * mu;
          buffers_[buf_var + c] = kBnMomentum * buffers_[buf_var + c] + (1.0 - kBnMomentum) * var;
        }
      } else {
        mu = buffers_[buf_mean + c];
        var = buffers_[buf_var + c];
      }
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + kBnEps);
      const double gam = params_[gofs + c], bet = params_[bofs + c];
      for (int ni = 0; ni < n; ++ni) {
        const size_t base = (static_cast<size_t>(ni) * kChannels + c) * per;
        for (size_t i = 0; i < per; ++i) {
          const double xn = (z[base + i] - mu) * inv_std[c];
          xh[base + i] = xn;
          const double y = gam * xn + bet;
          a[base + i] = y > 0.0 ? y : 0.0;
        }
      }
    }
  };

  cache.z1.assign(static_cast<size_t>(n) * kChannels * map, 0.0);
  conv_forward(params_.data() + o_conv1_, 1, kChannels, n, w, in.data(), cache.z1.data());
  bn_relu(cache.z1, cache.xh1, cache.a1, cache.mean1, cache.inv_std1, o_bn1g_, o_bn1b_, 0, kChannels);

  cache.z2.assign(cache.z1.size(), 0.0);
  conv_forward(params_.data() + o_conv2_, kChannels, kChannels, n, w, cache.a1.data(), cache.z2.data());
  bn_relu(cache.z2, cache.xh2, cache.a2, cache.mean2, cache.inv_std2, o_bn2g_, o_bn2b_, 2 * kChannels,
          3 * kChannels);

  const int f = flat_features();
  cache.o.assign(static_cast<size_t>(n) * k_, 0.0);
  cache.s.assign(cache.o.size(), 0.0);
  cache.qhat.assign(cache.o.size(), 0.0);
  for (int ni = 0; ni < n; ++ni) {
    const double* feat = cache.a2.data() + static_cast<size_t>(ni) * f;
    double sum_s = 0.0;
    for (int k = 0; k < k_; ++k) {
      double acc = params_[o_fcb_ + k];
      const double* wk = params_.data() + o_fcw_ + static_cast<size_t>(k) * f;
      for (int i = 0; i < f; ++i) acc += wk[i] * feat[i];
      cache.o[static_cast<size_t>(ni) * k_ + k] = acc;
      const double sig = 1.0 / (1.0 + std::exp(-acc));
      cache.s[static_cast<size_t>(ni) * k_ + k] = sig;
      sum_s += sig;
    }
    for (int k = 0; k < k_; ++k)
      cache.qhat[static_cast<size_t>(ni) * k_ + k] =
          power_ * cache.s[static_cast<size_t>(ni) * k_ + k] / sum_s;
  }
  fwd_samples_ += n;
}

std::vector<double> EmbeddingNet::backward_batch(const Cache& cache,
                                                 const std::vector<std::vector<double>>& d_out) {
  const int n = cache.n;
  const int w = width();
  const size_t map = static_cast<size_t>(2) * w;
  const int f = flat_features();
  std::vector<double> grad(params_.size(), 0.0);

  // output scaling and sigmoid
  std::vector<double> dO(static_cast<size_t>(n) * k_, 0.0);
  for (int ni = 0; ni < n; ++ni) {
    double sum_s = 0.0, dot_ds = 0.0;
    for (int k = 0; k < k_; ++k) sum_s += cache.s[static_cast<size_t>(ni) * k_ + k];
    for (int k = 0; k < k_; ++k) dot_ds += d_out[ni][k] * cache.s[static_cast<size_t>(ni) * k_ + k];
    for (int k = 0; k < k_; ++k) {
      const double s = cache.s[static_cast<size_t>(ni) * k_ + k];
      const double ds = (power_ / sum_s) * (d_out[ni][k] - dot_ds / sum_s);
      dO[static_cast<size_t>(ni) * k_ + k] = ds * s * (1.0 - s);
    }
  }

  // fully connected layer
  std::vector<double> dfeat(static_cast<size_t>(n) * f, 0.0);
  for (int ni = 0; ni < n; ++ni) {
    const double* feat = cache.a2.data() + static_cast<size_t>(ni) * f;
    for (int k = 0; k < k_; ++k) {
      const double d = dO[static_cast<size_t>(ni) * k_ + k];
      if (d == 0.0) continue;
      grad[o_fcb_ + k] += d;
      double* gw = grad.data() + o_fcw_ + static_cast<size_t>(k) * f;
      const double* wk = params_.data() + o_fcw_ + static_cast<size_t>(k) * f;
      double* df = dfeat.data() + static_cast<size_t>(ni) * f;
      for (int i = 0; i < f; ++i) {
        gw[i] += d * feat[i];
        df[i] += d * wk[i];
      }
    }
  }

  auto bn_backward = [&](const std::vector<double>& da, const std::vector<double>& act,
                         const std::vector<double>& xh, const std::vector<double>& inv_std,
                         int gofs, int bofs, std::vector<double>& dz) {
    dz.assign(da.size(), 0.0);
    const size_t per = map;
    const double m = static_cast<double>(n) * per;
    for (int c = 0; c < kChannels; ++c) {
      const double gam = params_[gofs + c];
      double sum_dxh = 0.0, sum_dxh_xh = 0.0, dgam = 0.0, dbet = 0.0;
      for (int ni = 0; ni < n; ++ni) {
        const size_t base = (static_cast<size_t>(ni) * kChannels + c) * per;
        for (size_t i = 0; i < per; ++i) {
          const double dy = act[base + i] > 0.0 ? da[base + i] : 0.0;  // ReLU mask
          dgam += dy * xh[base + i];
          dbet += dy;
          const double dxh = dy * gam;
          sum_dxh += dxh;
          sum_dxh_xh += dxh * xh[base + i];
        }
      }
      grad[gofs + c] += dgam;
      grad[bofs + c] += dbet;
      for (int ni = 0; ni < n; ++ni) {
        const size_t base = (static_cast<size_t>(ni) * kChannels + c) * per;
        for (size_t i = 0; i < per; ++i) {
          const double dy = act[base + i] > 0.0 ? da[base + i] : 0.0;
          const double dxh = dy * gam;
          dz[base + i] = inv_std[c] * (dxh - sum_dxh / m - xh[base + i] * sum_dxh_xh / m);
        }
      }
    }
  };

  std::vector<double> dz2;
  bn_backward(dfeat, cache.a2, cache.xh2, cache.inv_std2, o_bn2g_, o_bn2b_, dz2);

  std::vector<double> da1(cache.a1.size(), 0.0);
  conv_backward(params_.data() + o_conv2_, kChannels, kChannels, n, w, cache.a1.data(), dz2.data(),
                grad.data() + o_conv2_, da1.data());

  std::vector<double> dz1;
  bn_backward(da1, cache.a1, cache.xh1, cache.inv_std1, o_bn1g_, o_bn1b_, dz1);

  std::vector<double> in(static_cast<size_t>(n) * map);
  for (int ni = 0; ni < n; ++ni) std::copy(cache.xs[ni], cache.xs[ni] + map, in.begin() + ni * map);
  conv_backward(params_.data() + o_conv1_, 1, kChannels, n, w, in.data(), dz1.data(),
                grad.data() + o_conv1_, nullptr);

  bwd_samples_ += n;
  return grad;
}

std::vector<double> EmbeddingNet::forward(const std::vector<double>& x, NetMode mode) {
  if (x.size() != static_cast<size_t>(2 * width())) throw std::invalid_argument("input shape mismatch");
  Cache cache;
  forward_batch({x.data()}, mode, mode == NetMode::Train, cache);
  return {cache.qhat.begin(), cache.qhat.begin() + k_};
}

std::vector<std::vector<double>> EmbeddingNet::forward_eval_batch(
    const std::vector<std::vector<double>>& xs) const {
  std::vector<const double*> ptrs;
  ptrs.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.size() != static_cast<size_t>(2 * width())) throw std::invalid_argument("input shape mismatch");
    ptrs.push_back(x.data());
  }
  Cache cache;
  // Eval mode with update_running=false touches no mutable state but the counters
  const_cast<EmbeddingNet*>(this)->forward_batch(ptrs, NetMode::Eval, false, cache);
  std::vector<std::vector<double>> out(xs.size(), std::vector<double>(k_));
  for (size_t ni = 0; ni < xs.size(); ++ni)
    for (int k = 0; k < k_; ++k) out[ni][k] = cache.qhat[ni * k_ + k];
  return out;
}

std::pair<double, std::vector<double>> EmbeddingNet::loss_grad_supervised(
    const std::vector<const Sample*>& batch, bool update_running) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int n = static_cast<int>(batch.size());
  std::vector<std::vector<double>> inputs(n);
  std::vector<const double*> ptrs(n);
  for (int i = 0; i < n; ++i) {
    if (batch[i]->label.size() != static_cast<size_t>(k_))
      throw std::invalid_argument("supervised objective needs labeled samples");
    inputs[i] = make_net_input(batch[i]->h, batch[i]->norm);
    ptrs[i] = inputs[i].data();
  }
  Cache cache;
  forward_batch(ptrs, NetMode::Train, update_running, cache);

  double loss = 0.0;
  std::vector<std::vector<double>> d_out(n, std::vector<double>(k_));
  const double scale = 1.0 / (2.0 * n * k_);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < k_; ++k) {
      const double diff = cache.qhat[static_cast<size_t>(i) * k_ + k] - batch[i]->label[k];
      loss += scale * diff * diff;
      d_out[i][k] = diff / (static_cast<double>(n) * k_);
    }
  }
  return {loss, backward_batch(cache, d_out)};
}

std::pair<double, std::vector<double>> EmbeddingNet::loss_grad_unsupervised(
    const std::vector<const Sample*>& batch, double noise_power, bool update_running) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int n = static_cast<int>(batch.size());
  std::vector<std::vector<double>> inputs(n);
  std::vector<const double*> ptrs(n);
  for (int i = 0; i < n; ++i) {
    inputs[i] = make_net_input(batch[i]->h, batch[i]->norm);
    ptrs[i] = inputs[i].data();
  }
  Cache cache;
  forward_batch(ptrs, NetMode::Train, update_running, cache);

  double loss = 0.0;
  std::vector<std::vector<double>> d_out(n, std::vector<double>(k_));
  const double scale = 1.0 / (2.0 * k_ * n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> q(cache.qhat.begin() + static_cast<size_t>(i) * k_,
                          cache.qhat.begin() + static_cast<size_t>(i + 1) * k_);
    auto [rate, grad_q] = sumrate_and_grad_q(batch[i]->h, q, noise_power);
    loss -= scale * rate;
    for (int k = 0; k < k_; ++k) d_out[i][k] = -scale * grad_q[k];
  }
  return {loss, backward_batch(cache, d_out)};
}

TrainReport EmbeddingNet::train(const Dataset& ds, Objective objective, const TrainConfig& cfg) {
  TrainReport report;
  if (cfg.epochs == 0) return report;
  if (ds.samples.empty()) throw std::invalid_argument("empty dataset");
  if (objective == Objective::SupervisedMse && !ds.labeled())
    throw std::invalid_argument("supervised training needs a labeled dataset");

  Rng rng(cfg.seed);
  std::vector<int> order(ds.samples.size());
  std::iota(order.begin(), order.end(), 0);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);

  const int n_val = cfg.patience > 0 ? static_cast<int>(order.size() * cfg.val_fraction) : 0;
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  if (train_idx.empty()) throw std::invalid_argument("no training samples after validation split");

  auto batch_loss_grad = [&](const std::vector<const Sample*>& b) {
    return objective == Objective::SupervisedMse ? loss_grad_supervised(b)
                                                 : loss_grad_unsupervised(b, cfg.noise_power);
  };
  auto eval_loss = [&](const std::vector<int>& idx) {
    std::vector<std::vector<double>> xs;
    xs.reserve(idx.size());
    for (int i : idx) xs.push_back(make_net_input(ds.samples[i].h, ds.samples[i].norm));
    auto outs = forward_eval_batch(xs);
    double loss = 0.0;
    if (objective == Objective::SupervisedMse) {
      const double scale = 1.0 / (2.0 * idx.size() * k_);
      for (size_t i = 0; i < idx.size(); ++i)
        for (int k = 0; k < k_; ++k) {
          const double diff = outs[i][k] - ds.samples[idx[i]].label[k];
          loss += scale * diff * diff;
        }
    } else {
      const double scale = 1.0 / (2.0 * k_ * idx.size());
      for (size_t i = 0; i < idx.size(); ++i)
        loss -= scale * sumrate_and_grad_q(ds.samples[idx[i]].h, outs[i], cfg.noise_power).first;
    }
    return loss;
  };

  Adam adam(num_params(), cfg.adam);
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = params_;
  std::vector<double> best_buffers = buffers_;
  int stale = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = static_cast<int>(train_idx.size()) - 1; i > 0; --i)
      std::swap(train_idx[i], train_idx[rng.uniform_int(i + 1)]);
    double epoch_loss = 0.0;
    int seen = 0;
    for (size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
      std::vector<const Sample*> batch;
      batch.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) batch.push_back(&ds.samples[train_idx[i]]);
      auto [loss, grad] = batch_loss_grad(batch);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
      adam.step(params_, grad);
      epoch_loss += loss * static_cast<double>(batch.size());
      seen += static_cast<int>(batch.size());
      report.sample_passes += static_cast<std::int64_t>(batch.size());
    }
    report.loss_trace.push_back(epoch_loss / seen);
    report.epochs_run = epoch + 1;

    if (n_val > 0) {
      const double vl = eval_loss(val_idx);
      report.val_trace.push_back(vl);
      if (vl < best_val - 1e-15) {
        best_val = vl;
        best_params = params_;
        best_buffers = buffers_;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        report.early_stopped = true;
        break;
      }
    }
  }
  if (n_val > 0) {
    params_ = best_params;
    buffers_ = best_buffers;
  }
  return report;
}

void EmbeddingNet::save(const std::string& path) const {
  std::ostringstream out;
  out << "fastbeam-model v1\n";
  out << "nt " << nt_ << "\n";
  out << "k " << k_ << "\n";
  out << "power " << g17(power_) << "\n";
  out << "input_norm per_sample_max_col\n";
  out << "params " << params_.size() << "\n";
  for (double v : params_) out << g17(v) << "\n";
  out << "running_stats " << buffers_.size() << "\n";
  for (double v : buffers_) out << g17(v) << "\n";
  write_text_file(path, out.str());
}

EmbeddingNet EmbeddingNet::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  expect_magic(in, "fastbeam-model v1");
  std::string key;
  int nt = 0, k = 0;
  double power = 0.0;
  size_t n = 0;
  in >> key >> nt;
  if (key != "nt") throw std::runtime_error("model file: expected nt");
  in >> key >> k;
  if (key != "k") throw std::runtime_error("model file: expected k");
  in >> key >> power;
  if (key != "power") throw std::runtime_error("model file: expected power");
  std::string norm_tag;
  in >> key >> norm_tag;
  if (key != "input_norm" || norm_tag != "per_sample_max_col")
    throw std::runtime_error("model file: unsupported input normalization");
  EmbeddingNet net(nt, k, power, 0);
  in >> key >> n;
  if (key != "params" || n != net.params_.size()) throw std::runtime_error("model file: parameter count mismatch");
  for (auto& v : net.params_) in >> v;
  in >> key >> n;
  if (key != "running_stats" || n != net.buffers_.size())
    throw std::runtime_error("model file: running stats mismatch");
  for (auto& v : net.buffers_) in >> v;
  if (!in) throw std::runtime_error("model file: truncated");
  return net;
}

}  // namespace fastbeam
