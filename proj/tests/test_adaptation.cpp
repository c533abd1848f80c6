#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fastbeam/adaptation.hpp"
#include "fastbeam/channel.hpp"
#include "fastbeam/rng.hpp"
#include "fastbeam/system_model.hpp"

using namespace fastbeam;

namespace {

constexpr double kP = 2.0;

Sample draw_labeled(const SystemConfig& cfg, const FadingSpec& fading, const LargeScaleSpec& large,
                    ProblemKind problem, std::uint64_t seed) {
  Sample s;
  s.h = sample_channel(cfg, fading, large, seed);
  s.norm = channel_norm_factor(s.h);
  s.label = make_labeler(problem, cfg.power_budget, cfg.noise)(s.h);
  return s;
}

// small pretrained embedding shared by the adaptation tests
const EmbeddingNet& pretrained() {
  static const EmbeddingNet net = [] {
    SystemConfig cfg(2, 2, kP, 1.0);
    std::vector<FadingSpec> fams(3);
    fams[1].family = Fading::Ricean;
    fams[2].family = Fading::Nakagami;
    Dataset ds = build_pretrain_dataset(cfg, fams, 100,
                                        make_labeler(ProblemKind::SinrBalancing, kP, cfg.noise), 500);
    EmbeddingNet n(2, 2, kP, 77);
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 50;
    tc.patience = 0;
    tc.seed = 3;
    n.train(ds, Objective::SupervisedMse, tc);
    return n;
  }();
  return net;
}

std::vector<Sample> adaptation_set(int count, std::uint64_t seed) {
  SystemConfig cfg(2, 2, kP, 1.0);
  LargeScaleSpec shift;
  shift.enabled = true;
  shift.cell_radius_m = 400.0;
  shift.min_dist_m = 100.0;
  shift.shadow_std_db = 6.0;
  // keep normalized noise but a real gain spread: offset recenters the mean
  // path gain near unity so labels stay in a sane SNR regime
  shift.gain_offset_db = 128.1 + 37.6 * std::log10(0.25);
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i)
    out.push_back(draw_labeled(cfg, FadingSpec{}, shift, ProblemKind::SinrBalancing,
                               Rng::derive(seed, i)));
  return out;
}

}  // namespace

TEST_SUITE("adaptation") {
  TEST_CASE("adapt_fast leaves the embedding untouched and fits its labels") {
    const EmbeddingNet& net = pretrained();
    const auto p0 = net.params();
    const auto b0 = net.running_stats();

    // identity regression: labels equal the embedding outputs
    auto d_ad = adaptation_set(12, 900);
    for (auto& s : d_ad) s.label = net.forward_eval_batch({make_net_input(s.h, s.norm)})[0];
    SvrConfig cfg;
    const AdaptBundle bundle = adapt_fast(net, d_ad, cfg, ProblemKind::SinrBalancing, {1.0, 1.0});

    CHECK(net.params() == p0);  // bitwise frozen
    CHECK(net.running_stats() == b0);

    // SVR residuals on its own training rows stay within the tube; the head
    // regresses on the unit simplex, so the tube width scales with the budget
    for (const auto& s : d_ad) {
      auto feat = net.forward_eval_batch({make_net_input(s.h, s.norm)})[0];
      for (auto& v : feat) v /= kP;
      const auto pred = svr_predict(bundle.svr, {feat})[0];
      for (int k = 0; k < 2; ++k)
        CHECK(std::abs(pred[k] * kP - s.label[k]) <= (cfg.epsilon + cfg.smo_tol) * kP);
    }
  }

  TEST_CASE("adapt_fast rejects empty or unlabeled sets") {
    const EmbeddingNet& net = pretrained();
    CHECK_THROWS_AS(adapt_fast(net, {}, SvrConfig{}, ProblemKind::SinrBalancing, {1.0, 1.0}),
                    std::invalid_argument);
    std::vector<Sample> unlabeled(3);
    for (auto& s : unlabeled) {
      s.h = CMat(2, 2);
      s.h(0, 0) = 1.0;
      s.h(1, 1) = 1.0;
    }
    CHECK_THROWS_AS(adapt_fast(net, unlabeled, SvrConfig{}, ProblemKind::SinrBalancing, {1.0, 1.0}),
                    std::invalid_argument);
  }

  TEST_CASE("predict returns feasible powers and a consistent metric") {
    const EmbeddingNet& net = pretrained();
    const auto d_ad = adaptation_set(15, 901);
    const AdaptBundle bundle = adapt_fast(net, d_ad, SvrConfig{}, ProblemKind::SinrBalancing, {1.0, 1.0});
    SystemConfig cfg(2, 2, kP, 1.0);
    for (int i = 0; i < 10; ++i) {
      const CMat h = sample_channel(cfg, FadingSpec{}, LargeScaleSpec{}, 7000 + i);
      const Prediction p = predict(bundle, h);
      double qs = 0.0;
      for (double v : p.q) {
        CHECK(v >= 0.0);
        qs += v;
      }
      CHECK(qs == doctest::Approx(kP).epsilon(1e-9));
      const auto sinr = compute_sinr(h, p.w, {1.0, 1.0});
      CHECK(p.metric == doctest::Approx(*std::min_element(sinr.begin(), sinr.end())).epsilon(1e-9));
    }
  }

  TEST_CASE("single-user prediction is max ratio transmission regardless of the head") {
    SystemConfig cfg(3, 1, kP, 1.0);
    EmbeddingNet net(3, 1, kP, 5);
    std::vector<Sample> d_ad;
    for (int i = 0; i < 4; ++i) {
      Sample s;
      s.h = sample_channel(cfg, FadingSpec{}, LargeScaleSpec{}, 40 + i);
      s.norm = channel_norm_factor(s.h);
      s.label = {kP};
      d_ad.push_back(s);
    }
    const AdaptBundle bundle = adapt_fast(net, d_ad, SvrConfig{}, ProblemKind::SinrBalancing, {1.0});
    const CMat h = sample_channel(cfg, FadingSpec{}, LargeScaleSpec{}, 99);
    const Prediction p = predict(bundle, h);
    const double cosine = std::abs(dot(h.col(0), p.w.col(0))) / (norm2(h.col(0)) * norm2(p.w.col(0)));
    CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total_power(p.w) == doctest::Approx(kP).epsilon(1e-9));
  }

  TEST_CASE("nonadaptive baseline equals prediction through an identity head") {
    const EmbeddingNet& net = pretrained();
    SystemConfig cfg(2, 2, kP, 1.0);
    const CMat h = sample_channel(cfg, FadingSpec{}, LargeScaleSpec{}, 1234);
    const Prediction direct = predict_direct(net, ProblemKind::SinrBalancing, {1.0, 1.0}, h);
    // identity head: labels equal embedding outputs on a dense adaptation set
    auto d_ad = adaptation_set(30, 902);
    for (auto& s : d_ad) s.label = net.forward_eval_batch({make_net_input(s.h, s.norm)})[0];
    SvrConfig tight;
    tight.epsilon = 1e-4;
    tight.c = 100.0;
    const AdaptBundle bundle = adapt_fast(net, d_ad, tight, ProblemKind::SinrBalancing, {1.0, 1.0});
    const Prediction fitted = predict(bundle, h);
    CHECK(fitted.metric == doctest::Approx(direct.metric).epsilon(0.05));
    // determinism
    const Prediction again = predict_direct(net, ProblemKind::SinrBalancing, {1.0, 1.0}, h);
    CHECK(again.metric == direct.metric);
  }

  TEST_CASE("transfer baseline updates only the last layer") {
    const EmbeddingNet& net = pretrained();
    const auto d_ad = adaptation_set(10, 903);

    SUBCASE("zero steps is the identity") {
      FineTuneConfig ft;
      ft.steps = 0;
      const EmbeddingNet tuned = baseline_transfer(net, d_ad, ft);
      CHECK(tuned.params() == net.params());
    }
    SUBCASE("conv and batch-norm state is bit-identical after tuning") {
      FineTuneConfig ft;
      ft.steps = 25;
      const EmbeddingNet tuned = baseline_transfer(net, d_ad, ft);
      const auto [fcb, fce] = net.fc_param_range();
      const auto& before = net.params();
      const auto& after = tuned.params();
      for (int i = 0; i < fcb; ++i) CHECK(after[i] == before[i]);
      CHECK(tuned.running_stats() == net.running_stats());
      // and the head actually moved
      double delta = 0.0;
      for (int i = fcb; i < fce; ++i) delta += std::abs(after[i] - before[i]);
      CHECK(delta > 0.0);
    }
  }

  TEST_CASE("maml inner loop with zero rate is the identity") {
    const EmbeddingNet& net = pretrained();
    const auto d_ad = adaptation_set(6, 904);
    MamlConfig cfg;
    cfg.inner_lr = 0.0;
    cfg.inner_steps = 3;
    const EmbeddingNet adapted = maml_adapt(net, d_ad, cfg);
    CHECK(adapted.params() == net.params());
  }

  TEST_CASE("maml adaptation reduces the loss on its support data") {
    const EmbeddingNet& net = pretrained();
    auto d_ad = adaptation_set(10, 905);
    std::vector<const Sample*> batch;
    for (const auto& s : d_ad) batch.push_back(&s);
    MamlConfig cfg;
    cfg.inner_lr = 0.005;
    cfg.inner_steps = 5;
    EmbeddingNet before = net;
    const double loss0 = before.loss_grad_supervised(batch, false).first;
    EmbeddingNet adapted = maml_adapt(net, d_ad, cfg);
    const double loss1 = adapted.loss_grad_supervised(batch, false).first;
    CHECK(loss1 <= loss0);
  }

  TEST_CASE("maml pretraining lowers the meta-loss on seeded tasks") {
    SystemConfig cfg(2, 2, kP, 1.0);
    const Labeler labeler = make_labeler(ProblemKind::SinrBalancing, kP, cfg.noise);
    const TaskSampler sampler = [&](std::uint64_t seed) {
      Rng rng(seed);
      FadingSpec fading;
      const int fam = rng.uniform_int(3);
      fading.family = fam == 0 ? Fading::Rayleigh : fam == 1 ? Fading::Ricean : Fading::Nakagami;
      MamlTask task;
      for (int i = 0; i < 8; ++i) {
        Sample s;
        s.h = sample_channel(cfg, fading, LargeScaleSpec{}, rng.next_u64());
        s.norm = channel_norm_factor(s.h);
        s.label = labeler(s.h);
        (i < 5 ? task.support : task.query).push_back(std::move(s));
      }
      return task;
    };
    EmbeddingNet net(2, 2, kP, 11);
    MamlConfig mc;
    mc.inner_lr = 0.01;
    mc.outer_lr = 2e-3;
    mc.inner_steps = 2;
    mc.meta_batch = 4;
    mc.meta_iters = 100;
    mc.seed = 9;
    const MamlReport rep = maml_pretrain(net, sampler, mc);
    REQUIRE(rep.meta_loss_trace.size() == 100);
    // compare averaged early vs late meta-loss (individual iterations are noisy)
    double early = 0.0, late = 0.0;
    for (int i = 0; i < 20; ++i) {
      early += rep.meta_loss_trace[i];
      late += rep.meta_loss_trace[80 + i];
    }
    CHECK(late < early);
    CHECK(rep.sample_passes == 100LL * 4 * (2 * 5 + 3));
  }

  TEST_CASE("maml with zero inner rate reduces to joint training on query sets") {
    // beta = 0: the inner loop is the identity, so the outer gradient is the
    // plain gradient of the summed query losses at theta
    SystemConfig cfg(2, 2, kP, 1.0);
    const Labeler labeler = make_labeler(ProblemKind::SinrBalancing, kP, cfg.noise);
    std::vector<Sample> pool;
    for (int i = 0; i < 12; ++i) {
      Sample s;
      s.h = sample_channel(cfg, FadingSpec{}, LargeScaleSpec{}, 3000 + i);
      s.norm = channel_norm_factor(s.h);
      s.label = labeler(s.h);
      pool.push_back(std::move(s));
    }
    const TaskSampler sampler = [&](std::uint64_t seed) {
      Rng rng(seed);
      MamlTask task;
      for (int i = 0; i < 4; ++i) task.support.push_back(pool[rng.uniform_int(12)]);
      for (int i = 0; i < 4; ++i) task.query.push_back(pool[rng.uniform_int(12)]);
      return task;
    };
    MamlConfig mc;
    mc.inner_lr = 0.0;
    mc.outer_lr = 1e-3;
    mc.inner_steps = 1;
    mc.meta_batch = 2;
    mc.meta_iters = 1;
    mc.seed = 4;

    EmbeddingNet a(2, 2, kP, 13);
    EmbeddingNet b = a;
    maml_pretrain(a, sampler, mc);

    // replicate by hand on the same sampled tasks
    std::vector<double> grad_sum(b.num_params(), 0.0);
    for (int t = 0; t < 2; ++t) {
      const MamlTask task = sampler(Rng::derive(4, t));
      std::vector<const Sample*> sup, que;
      for (const auto& s : task.support) sup.push_back(&s);
      for (const auto& s : task.query) que.push_back(&s);
      (void)b.loss_grad_supervised(sup, true);
      const auto [ql, qg] = b.loss_grad_supervised(que, false);
      (void)ql;
      for (size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += qg[i];
    }
    auto expect = b.params();
    for (size_t i = 0; i < expect.size(); ++i) expect[i] -= 1e-3 * grad_sum[i];
    const auto& got = a.params();
    for (size_t i = 0; i < expect.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }

  TEST_CASE("exact second-order outer gradient matches finite differences on a toy model") {
    // toy: 2 parameters w, support loss Ls(w) = 0.5*(w0*tanh(w1) - 1)^2 + 0.1*w0^2*w1^2
    // query loss Lq(w) = 0.5*((w0-2)^2 + (w0*w1 + 1)^2)
    const auto support_loss = [](const std::vector<double>& w) {
      const double e = w[0] * std::tanh(w[1]) - 1.0;
      return 0.5 * e * e + 0.1 * w[0] * w[0] * w[1] * w[1];
    };
    const auto query_loss = [](const std::vector<double>& w) {
      return 0.5 * ((w[0] - 2.0) * (w[0] - 2.0) + (w[0] * w[1] + 1.0) * (w[0] * w[1] + 1.0));
    };
    SmallDiffModel model;
    model.support_grad = [&](const std::vector<double>& w) {
      const double th = std::tanh(w[1]);
      const double sech2 = 1.0 - th * th;
      const double e = w[0] * th - 1.0;
      return std::vector<double>{e * th + 0.2 * w[0] * w[1] * w[1],
                                 e * w[0] * sech2 + 0.2 * w[0] * w[0] * w[1]};
    };
    model.query_grad = [&](const std::vector<double>& w) {
      return std::vector<double>{(w[0] - 2.0) + (w[0] * w[1] + 1.0) * w[1],
                                 (w[0] * w[1] + 1.0) * w[0]};
    };
    model.support_hessian = [&](const std::vector<double>& w) {
      const double th = std::tanh(w[1]);
      const double sech2 = 1.0 - th * th;
      const double e = w[0] * th - 1.0;
      std::vector<std::vector<double>> h(2, std::vector<double>(2));
      h[0][0] = th * th + 0.2 * w[1] * w[1];
      h[0][1] = e * sech2 + w[0] * th * sech2 + 0.4 * w[0] * w[1];
      h[1][0] = h[0][1];
      h[1][1] = w[0] * w[0] * sech2 * sech2 + e * w[0] * (-2.0 * th * sech2) + 0.2 * w[0] * w[0];
      return h;
    };

    const std::vector<double> theta = {0.7, -0.4};
    const double beta = 0.05;
    const int steps = 3;
    const auto grad = maml_exact_outer_grad(model, theta, beta, steps);

    // finite differences through the whole inner trajectory
    const auto meta_loss = [&](std::vector<double> w) {
      for (int j = 0; j < steps; ++j) {
        const auto g = model.support_grad(w);
        for (int i = 0; i < 2; ++i) w[i] -= beta * g[i];
      }
      return query_loss(w);
    };
    (void)support_loss;
    for (int i = 0; i < 2; ++i) {
      auto up = theta, dn = theta;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (meta_loss(up) - meta_loss(dn)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("second order on the production network is rejected") {
    const TaskSampler sampler = [](std::uint64_t) { return MamlTask{}; };
    EmbeddingNet net(2, 2, 1.0, 1);
    MamlConfig mc;
    mc.first_order = false;
    CHECK_THROWS_AS(maml_pretrain(net, sampler, mc), std::invalid_argument);
  }

  TEST_CASE("count_cost reports parameter counts and pass totals") {
    EmbeddingNet net(4, 4, 1.0, 1);
    const auto fast = count_cost(Method::Fast, net, 45000, 20);
    CHECK(fast.param_count == 4 * 4 + 4);  // K^2 + K, linear view
    CHECK(fast.pretrain_passes == 450);
    CHECK(fast.adapt_passes == 1);
    const auto transfer = count_cost(Method::Transfer, net, 45000, 40);
    CHECK(transfer.param_count == 8 * 2 * 16 * 4 + 4);
    CHECK(transfer.adapt_passes == 2);
    const auto maml = count_cost(Method::Maml, net, 96000, 20);
    CHECK(maml.param_count == net.num_params());
    CHECK(maml.pretrain_passes == 960);
    CHECK(count_cost(Method::NonAdaptive, net, 0, 0).param_count == 0);
  }
}
