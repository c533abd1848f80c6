#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fastbeam/adaptation.hpp"
#include "fastbeam/channel.hpp"
#include "fastbeam/dataset_io.hpp"
#include "fastbeam/embedding_net.hpp"
#include "fastbeam/experiments.hpp"
#include "fastbeam/solvers.hpp"
#include "fastbeam/svr.hpp"
#include "fastbeam/system_model.hpp"

namespace py = pybind11;
using namespace fastbeam;

namespace {

CMat to_cmat(const py::array_t<std::complex<double>>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D complex array");
  CMat m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  auto r = arr.unchecked<2>();
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) = r(i, j);
  return m;
}

py::array_t<std::complex<double>> from_cmat(const CMat& m) {
  py::array_t<std::complex<double>> arr({m.rows, m.cols});
  auto w = arr.mutable_unchecked<2>();
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) w(i, j) = m(i, j);
  return arr;
}

FadingSpec make_fading(const std::string& family, double ricean_factor, double nakagami_m,
                       double nakagami_power) {
  FadingSpec f;
  f.family = fading_from_string(family);
  f.ricean_factor = ricean_factor;
  f.nakagami_m = nakagami_m;
  f.nakagami_power = nakagami_power;
  return f;
}

ProblemKind problem_of(const std::string& s) {
  if (s == "sinr") return ProblemKind::SinrBalancing;
  if (s == "sumrate") return ProblemKind::SumRate;
  throw std::invalid_argument("problem must be 'sinr' or 'sumrate'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fast adaptive downlink beamforming: solvers, embedding model, regression head";

  m.def("dbm_to_watts", &dbm_to_watts, py::arg("dbm"));
  m.def("watts_to_dbm", &watts_to_dbm, py::arg("watts"));
  m.def("thermal_noise_watts", &thermal_noise_watts, py::arg("bandwidth_hz") = 20e6);

  m.def(
      "sample_channel",
      [](int nt, int k, const std::string& family, std::uint64_t seed, double ricean_factor,
         double nakagami_m, double nakagami_power) {
        SystemConfig cfg(nt, k, 1.0, 1.0);
        return from_cmat(sample_channel(cfg, make_fading(family, ricean_factor, nakagami_m, nakagami_power),
                                        LargeScaleSpec{}, seed));
      },
      py::arg("nt"), py::arg("k"), py::arg("family") = "rayleigh", py::arg("seed") = 1,
      py::arg("ricean_factor") = 3.0, py::arg("nakagami_m") = 5.0, py::arg("nakagami_power") = 2.0);

  m.def(
      "compute_sinr",
      [](const py::array_t<std::complex<double>>& h, const py::array_t<std::complex<double>>& w,
         const std::vector<double>& noise) { return compute_sinr(to_cmat(h), to_cmat(w), noise); },
      py::arg("h"), py::arg("w"), py::arg("noise"));
  m.def(
      "sum_rate",
      [](const py::array_t<std::complex<double>>& h, const py::array_t<std::complex<double>>& w,
         const std::vector<double>& noise) { return sum_rate(to_cmat(h), to_cmat(w), noise); },
      py::arg("h"), py::arg("w"), py::arg("noise"));
  m.def(
      "total_power",
      [](const py::array_t<std::complex<double>>& w) { return total_power(to_cmat(w)); },
      py::arg("w"));

  m.def(
      "sinr_balance_solve",
      [](const py::array_t<std::complex<double>>& h, double p, const std::vector<double>& noise) {
        const auto r = sinr_balance_solve(to_cmat(h), p, noise);
        return py::make_tuple(r.q, from_cmat(r.w), r.balanced_sinr, r.report.iterations,
                              r.report.converged);
      },
      py::arg("h"), py::arg("power"), py::arg("noise"),
      "returns (q, W, balanced_sinr, iterations, converged)");
  m.def(
      "wmmse_solve",
      [](const py::array_t<std::complex<double>>& h, double p, const std::vector<double>& noise) {
        const auto r = wmmse_solve(to_cmat(h), p, noise);
        return py::make_tuple(from_cmat(r.w), r.q, r.report.final_objective, r.report.converged);
      },
      py::arg("h"), py::arg("power"), py::arg("noise"), "returns (W, q, sum_rate, converged)");

  m.def(
      "recover_beamforming_sinr",
      [](const py::array_t<std::complex<double>>& h, const std::vector<double>& q, double p,
         const std::vector<double>& noise) {
        const auto r = recover_beamforming_sinr(to_cmat(h), q, p, noise);
        return py::make_tuple(from_cmat(r.w), r.p, r.balanced_sinr);
      },
      py::arg("h"), py::arg("q"), py::arg("power"), py::arg("noise"),
      "returns (W, downlink_powers, balanced_sinr)");
  m.def(
      "recover_beamforming_sumrate",
      [](const py::array_t<std::complex<double>>& h, const std::vector<double>& q, double noise) {
        return from_cmat(recover_beamforming_sumrate(to_cmat(h), q, noise));
      },
      py::arg("h"), py::arg("q"), py::arg("noise_power"));

  py::class_<SvrConfig>(m, "SvrConfig")
      .def(py::init<>())
      .def_readwrite("c", &SvrConfig::c)
      .def_readwrite("epsilon", &SvrConfig::epsilon)
      .def_readwrite("gamma", &SvrConfig::gamma)
      .def_readwrite("smo_tol", &SvrConfig::smo_tol)
      .def_readwrite("max_passes", &SvrConfig::max_passes);

  py::class_<SvrModel>(m, "SvrModel")
      .def("predict", [](const SvrModel& model,
                         const std::vector<std::vector<double>>& x) { return svr_predict(model, x); })
      .def("save", &SvrModel::save)
      .def_static("load", &SvrModel::load);
  m.def("svr_fit", [](const std::vector<std::vector<double>>& x,
                      const std::vector<std::vector<double>>& y,
                      const SvrConfig& cfg) { return svr_fit(x, y, cfg); });

  py::class_<EmbeddingNet>(m, "EmbeddingNet")
      .def(py::init<int, int, double, std::uint64_t>(), py::arg("nt"), py::arg("k"),
           py::arg("power"), py::arg("seed") = 1)
      .def_property_readonly("num_params", &EmbeddingNet::num_params)
      .def("features",
           [](const EmbeddingNet& net, const py::array_t<std::complex<double>>& h) {
             const CMat cm = to_cmat(h);
             return net.forward_eval_batch({make_net_input(cm, channel_norm_factor(cm))})[0];
           },
           "embedding output for one channel matrix (eval mode)")
      .def("save", &EmbeddingNet::save)
      .def_static("load", &EmbeddingNet::load);

  py::class_<AdaptBundle>(m, "AdaptBundle");

  m.def(
      "adapt_fast",
      [](const EmbeddingNet& net, const std::vector<py::array_t<std::complex<double>>>& channels,
         const std::vector<std::vector<double>>& labels, const SvrConfig& cfg,
         const std::string& problem, const std::vector<double>& noise) {
        std::vector<Sample> d_ad;
        for (size_t i = 0; i < channels.size(); ++i) {
          Sample s;
          s.h = to_cmat(channels[i]);
          s.norm = channel_norm_factor(s.h);
          s.label = labels[i];
          d_ad.push_back(std::move(s));
        }
        return adapt_fast(net, d_ad, cfg, problem_of(problem), noise);
      },
      py::arg("net"), py::arg("channels"), py::arg("labels"), py::arg("svr_cfg"),
      py::arg("problem"), py::arg("noise"));
  m.def(
      "predict",
      [](const AdaptBundle& bundle, const py::array_t<std::complex<double>>& h) {
        const auto p = predict(bundle, to_cmat(h));
        return py::make_tuple(p.q, from_cmat(p.w), p.metric);
      },
      py::arg("bundle"), py::arg("h"), "returns (q, W, metric)");
  m.def(
      "predict_direct",
      [](const EmbeddingNet& net, const std::string& problem, const std::vector<double>& noise,
         const py::array_t<std::complex<double>>& h) {
        const auto p = predict_direct(net, problem_of(problem), noise, to_cmat(h));
        return py::make_tuple(p.q, from_cmat(p.w), p.metric);
      },
      py::arg("net"), py::arg("problem"), py::arg("noise"), py::arg("h"));

  m.def(
      "solve_labels",
      [](const py::array_t<std::complex<double>>& h, const std::string& problem, double p,
         const std::vector<double>& noise) {
        return make_labeler(problem_of(problem), p, noise)(to_cmat(h));
      },
      py::arg("h"), py::arg("problem"), py::arg("power"), py::arg("noise"),
      "uplink power label for one channel");

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_json) {
        const RunConfig cfg = RunConfig::from_json_text(config_json);
        if (command == "gen-data")
          cmd_gen_data(cfg);
        else if (command == "pretrain")
          cmd_pretrain(cfg);
        else if (command == "adapt")
          cmd_adapt(cfg);
        else if (command == "eval")
          cmd_eval(cfg);
        else if (command == "online")
          cmd_online(cfg);
        else if (command == "report")
          cmd_report(cfg);
        else
          throw std::invalid_argument("unknown command: " + command);
      },
      py::arg("command"), py::arg("config_json"),
      "run one experiment stage from a JSON configuration string");
}
