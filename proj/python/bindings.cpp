#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "halluguard/bound.hpp"
#include "halluguard/bundle_io.hpp"
#include "halluguard/detectors.hpp"
#include "halluguard/error.hpp"
#include "halluguard/metrics.hpp"
#include "halluguard/score.hpp"
#include "halluguard/spectral.hpp"

namespace py = pybind11;
using namespace halluguard;

namespace {

std::vector<LabeledScore> labeled(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
  std::vector<LabeledScore> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({std::to_string(i), scores[i], labels[i]});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral hallucination scoring of sampled trajectory bundles";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Generation>(m, "Generation")
      .def(py::init<>())
      .def_readwrite("tokens", &Generation::tokens)
      .def_readwrite("logprob", &Generation::logprob)
      .def_readwrite("step_entropy", &Generation::step_entropy)
      .def_readwrite("step_lse", &Generation::step_lse)
      .def_readwrite("text", &Generation::text)
      .def_readwrite("sent_embed", &Generation::sent_embed)
      .def_readwrite("step_states", &Generation::step_states);

  py::class_<TrajectoryBundle>(m, "Bundle")
      .def(py::init<>())
      .def_readwrite("prompt_id", &TrajectoryBundle::prompt_id)
      .def_readwrite("prompt_text", &TrajectoryBundle::prompt_text)
      .def_readwrite("references", &TrajectoryBundle::references)
      .def_readwrite("generations", &TrajectoryBundle::generations)
      .def_readwrite("label", &TrajectoryBundle::label)
      .def_readwrite("rouge_to_ref", &TrajectoryBundle::rouge_to_ref)
      .def_readwrite("embed_dim", &TrajectoryBundle::embed_dim)
      .def_readwrite("meta", &TrajectoryBundle::meta)
      .def("embedding_matrix", &TrajectoryBundle::embedding_matrix)
      .def("__eq__", [](const TrajectoryBundle& a, const TrajectoryBundle& b) { return a == b; });

  m.def("read_bundle", [](const std::filesystem::path& p) { return read_bundle_file(p); }, py::arg("path"));
  m.def("write_bundle", [](const TrajectoryBundle& b, const std::filesystem::path& p) { return write_bundle_file(b, p); },
        py::arg("bundle"), py::arg("path"));
  m.def("validate_bundle", [](const TrajectoryBundle& b) { return validate_bundle(b).violations; },
        "List of violated invariants; empty when the bundle is valid.");

  m.def("build_gram", [](const Eigen::MatrixXd& e, double ridge, bool normalize) {
          return build_gram(e, ridge, normalize).entries;
        },
        py::arg("embeddings"), py::arg("ridge") = kDefaultRidge, py::arg("normalize") = true);
  m.def("cholesky_log_det", &cholesky_log_det, py::arg("spd"));
  m.def("spectral_summary", [](const Eigen::MatrixXd& spd) {
          const Spectrum s = spectral_summary(spd);
          py::dict d;
          d["eigenvalues"] = s.eigenvalues;
          d["log_det"] = s.log_det;
          d["kappa"] = s.kappa;
          d["trace"] = s.trace;
          return d;
        },
        py::arg("spd"));

  py::class_<HalluGuardConfig>(m, "HalluGuardConfig")
      .def(py::init<>())
      .def_readwrite("ridge", &HalluGuardConfig::ridge)
      .def_readwrite("normalize", &HalluGuardConfig::normalize)
      .def_readwrite("use_beta_avg", &HalluGuardConfig::use_beta_avg)
      .def_readwrite("clip", &HalluGuardConfig::clip)
      .def_readwrite("clip_quantile", &HalluGuardConfig::clip_quantile)
      .def_readwrite("bank_capacity", &HalluGuardConfig::bank_capacity);

  py::class_<HalluGuardComponents>(m, "Components")
      .def_readonly("log_det", &HalluGuardComponents::log_det)
      .def_readonly("log_sigma_max", &HalluGuardComponents::log_sigma_max)
      .def_readonly("log_kappa_sq", &HalluGuardComponents::log_kappa_sq);

  m.def("components", [](const TrajectoryBundle& b, const HalluGuardConfig& c) { return halluguard_components(b, c); },
        py::arg("bundle"), py::arg("config") = HalluGuardConfig{});
  m.def("score", [](const HalluGuardComponents& c) { return halluguard_score(c); }, py::arg("components"),
        "Raw score; higher means more reliable.");

  m.def("all_detectors", &all_detectors);
  m.def("score_detectors", [](const TrajectoryBundle& b, std::vector<std::string> names) {
          if (names.empty()) names = all_detectors();
          return score_sample(b, names).scores;
        },
        py::arg("bundle"), py::arg("detectors") = std::vector<std::string>{},
        "Detector name -> score, None when the detector is unavailable.");

  m.def("auroc", [](const std::vector<double>& s, const std::vector<int>& y) { return auroc(labeled(s, y)); },
        py::arg("scores"), py::arg("labels"), "Scores oriented so that higher means label 1.");
  m.def("auprc", [](const std::vector<double>& s, const std::vector<int>& y) { return auprc(labeled(s, y)); },
        py::arg("scores"), py::arg("labels"));
  m.def("tpr_at_fpr",
        [](const std::vector<double>& s, const std::vector<int>& y, double f) { return tpr_at_fpr(labeled(s, y), f); },
        py::arg("scores"), py::arg("labels"), py::arg("fpr"));

  m.def("bound_terms", [](int T, double beta) {
          BoundParams p;
          p.T = T;
          p.beta = beta;
          validate_params(p);
          return py::make_tuple(data_term(p), reasoning_term(p), risk_bound(p));
        },
        py::arg("T") = BoundParams{}.T, py::arg("beta") = BoundParams{}.beta,
        "(data_term, reasoning_term, bound) with the remaining parameters at their defaults.");
}
