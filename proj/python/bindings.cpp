#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "loolab/error.hpp"
#include "loolab/experiments.hpp"
#include "loolab/io.hpp"
#include "loolab/loo.hpp"
#include "loolab/models.hpp"
#include "loolab/weights.hpp"

namespace py = pybind11;
using namespace loolab;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointwiseMatrix to_matrix(const Array2& a, std::vector<std::string> labels) {
  if (a.ndim() != 2) throw DomainError("expected a 2-d array (observations x models)");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return PointwiseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()), std::move(labels));
}

LogLikDraws to_draws(const Array2& a) {
  if (a.ndim() != 2) throw DomainError("expected a 2-d array (draws x observations)");
  return LogLikDraws(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                     std::vector<double>(a.data(), a.data() + a.size()));
}

Array2 to_array(std::span<const double> values, std::size_t rows, std::size_t cols) {
  Array2 out({rows, cols});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

Dataset to_dataset(const std::vector<double>& y) { return Dataset{y}; }

}  // namespace

PYBIND11_MODULE(_loolab, m) {
  m.doc() = "Leave-one-out model comparison and weighting";
  m.attr("__version__") = LOOLAB_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  // models
  py::class_<ModelSpec>(m, "Model")
      .def_static("bernoulli_point", [](double theta0) { return ModelSpec(BernoulliPoint{theta0}); },
                  py::arg("theta0"))
      .def_static("beta_bernoulli", [](double a, double b) { return ModelSpec(BetaBernoulli{a, b}); },
                  py::arg("a"), py::arg("b"))
      .def_static("normal_point", [](double mu0, double sigma) { return ModelSpec(NormalPoint{mu0, sigma}); },
                  py::arg("mu0"), py::arg("sigma"))
      .def_static("normal_conjugate",
                  [](double mu0, double tau0, double sigma) { return ModelSpec(NormalConjugate{mu0, tau0, sigma}); },
                  py::arg("mu0"), py::arg("tau0"), py::arg("sigma"))
      .def_property_readonly("name", &ModelSpec::name)
      .def_property_readonly("is_binary", &ModelSpec::is_binary)
      .def("__repr__", [](const ModelSpec& s) { return "<Model " + s.name() + ">"; });

  m.def("exact_loo_pointwise",
        [](const ModelSpec& model, const std::vector<double>& y) { return exact_loo_pointwise(model, to_dataset(y)); },
        py::arg("model"), py::arg("y"));
  m.def("log_marginal_likelihood",
        [](const ModelSpec& model, const std::vector<double>& y) {
          return log_marginal_likelihood(model, to_dataset(y));
        },
        py::arg("model"), py::arg("y"));
  m.def("posterior_predictive_logpdf",
        [](const ModelSpec& model, const std::vector<double>& y, double y_new) {
          return posterior_predictive_logpdf(model, to_dataset(y), y_new);
        },
        py::arg("model"), py::arg("y"), py::arg("y_new"));

  // loo
  py::class_<ElpdEstimate>(m, "ElpdEstimate")
      .def_readonly("elpd", &ElpdEstimate::elpd)
      .def_readonly("se", &ElpdEstimate::se)
      .def_readonly("pointwise", &ElpdEstimate::pointwise)
      .def("__repr__", [](const ElpdEstimate& e) {
        return "<ElpdEstimate elpd=" + format_double(e.elpd) + " se=" + format_double(e.se) + ">";
      });
  py::class_<PairedDiff>(m, "PairedDiff")
      .def_readonly("diff", &PairedDiff::diff)
      .def_readonly("se_diff", &PairedDiff::se_diff)
      .def_readonly("pointwise_diff", &PairedDiff::pointwise_diff);
  py::class_<ParetoDiagnostics>(m, "ParetoDiagnostics")
      .def_readonly("khat", &ParetoDiagnostics::khat)
      .def_readonly("flagged", &ParetoDiagnostics::flagged)
      .def_readonly("threshold", &ParetoDiagnostics::threshold);

  m.def("elpd", [](const std::vector<double>& pointwise) { return elpd_from_pointwise(pointwise); },
        py::arg("pointwise"));
  m.def("paired_diff",
        [](const std::vector<double>& a, const std::vector<double>& b) { return paired_diff(a, b); }, py::arg("a"),
        py::arg("b"));
  m.def("psis_loo",
        [](const Array2& log_lik, double threshold) {
          auto r = psis_loo(to_draws(log_lik), threshold);
          return py::make_tuple(std::move(r.estimate), std::move(r.diagnostics));
        },
        py::arg("log_lik"), py::arg("khat_threshold") = 0.7,
        "PSIS-LOO from an S x n array of log p(y_i | theta_s). Returns (ElpdEstimate, ParetoDiagnostics).");

  // weights
  py::enum_<Scheme>(m, "Scheme")
      .value("PSEUDO_BMA", Scheme::PseudoBma)
      .value("PSEUDO_BMA_PLUS", Scheme::PseudoBmaPlus)
      .value("STACKING", Scheme::Stacking)
      .value("BMA", Scheme::Bma);

  py::class_<WeightVector>(m, "WeightVector")
      .def_readonly("weights", &WeightVector::weights)
      .def_readonly("scheme", &WeightVector::scheme)
      .def_readonly("iterations", &WeightVector::iterations)
      .def_readonly("converged", &WeightVector::converged)
      .def_readonly("kkt_residual", &WeightVector::kkt_residual)
      .def_readonly("bootstrap_samples", &WeightVector::bootstrap_samples)
      .def("__len__", &WeightVector::size)
      .def("__getitem__", [](const WeightVector& w, std::size_t k) {
        if (k >= w.size()) throw py::index_error();
        return w[k];
      })
      .def("__repr__", [](const WeightVector& w) {
        std::ostringstream os;
        os << "<WeightVector " << scheme_name(w.scheme) << " [";
        for (std::size_t k = 0; k < w.size(); ++k) os << (k ? ", " : "") << format_double(w[k]);
        os << "]>";
        return os.str();
      });

  m.def("pseudo_bma", [](const Array2& pointwise) { return pseudo_bma(to_matrix(pointwise, {})); },
        py::arg("pointwise"));
  m.def("pseudo_bma_plus",
        [](const Array2& pointwise, std::size_t B, std::uint64_t seed) {
          return pseudo_bma_plus(to_matrix(pointwise, {}), B, seed);
        },
        py::arg("pointwise"), py::arg("B") = 1000, py::arg("seed") = 0);
  m.def("stacking",
        [](const Array2& pointwise, double tol, std::size_t max_iterations) {
          py::gil_scoped_release release;
          return stacking(to_matrix(pointwise, {}), {tol, max_iterations});
        },
        py::arg("pointwise"), py::arg("tol") = 1e-10, py::arg("max_iterations") = 100000);
  m.def("stacking_objective",
        [](const std::vector<double>& w, const Array2& pointwise) {
          return stacking_objective(w, to_matrix(pointwise, {}));
        },
        py::arg("weights"), py::arg("pointwise"));
  m.def("bma",
        [](const std::vector<double>& log_marginals, std::optional<std::vector<double>> prior) {
          return prior ? bma(log_marginals, *prior) : bma(log_marginals);
        },
        py::arg("log_marginals"), py::arg("prior") = py::none());

  // experiments
  py::enum_<Mode>(m, "Mode").value("IDEALIZED", Mode::Idealized).value("EPSILON", Mode::Epsilon);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("example_id", &ExperimentConfig::example_id)
      .def_readwrite("mode", &ExperimentConfig::mode)
      .def_readwrite("epsilons", &ExperimentConfig::epsilons)
      .def_readwrite("a", &ExperimentConfig::a)
      .def_readwrite("b", &ExperimentConfig::b)
      .def_readwrite("tau0", &ExperimentConfig::tau0)
      .def_readwrite("n_grid", &ExperimentConfig::n_grid)
      .def_readwrite("schemes", &ExperimentConfig::schemes)
      .def_readwrite("replications", &ExperimentConfig::replications)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("threshold", &ExperimentConfig::threshold)
      .def_readwrite("bootstrap_samples", &ExperimentConfig::bootstrap_samples)
      .def_readwrite("tol", &ExperimentConfig::tol)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def("validate", &ExperimentConfig::validate)
      .def_static("parse",
                  [](const std::string& text) {
                    std::istringstream in(text);
                    return parse_config(in);
                  },
                  py::arg("text"))
      .def("to_text", [](const ExperimentConfig& c) { return write_config(c); });

  py::class_<Cell>(m, "Cell")
      .def_readonly("scheme", &Cell::scheme)
      .def_readonly("epsilon", &Cell::epsilon)
      .def_readonly("n", &Cell::n)
      .def_readonly("replication", &Cell::replication)
      .def_readonly("weights", &Cell::weights)
      .def_readonly("error", &Cell::error)
      .def_readonly("deviates_from_idealized", &Cell::deviates_from_idealized);
  py::class_<Crossing>(m, "Crossing")
      .def_readonly("scheme", &Crossing::scheme)
      .def_readonly("epsilon", &Crossing::epsilon)
      .def_readonly("n_star", &Crossing::n_star);
  py::class_<DeviationFrequency>(m, "DeviationFrequency")
      .def_readonly("epsilon", &DeviationFrequency::epsilon)
      .def_readonly("n", &DeviationFrequency::n)
      .def_readonly("fraction", &DeviationFrequency::fraction);
  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("cells", &SweepResult::cells)
      .def_readonly("crossings", &SweepResult::crossings)
      .def_readonly("deviations", &SweepResult::deviations)
      .def_readonly("error_count", &SweepResult::error_count);
  py::class_<ConvergenceRow>(m, "ConvergenceRow")
      .def_readonly("n", &ConvergenceRow::n)
      .def_readonly("gap", &ConvergenceRow::gap);

  m.def("example_pointwise",
        [](const ExperimentConfig& c, const std::vector<double>& y) {
          const auto pm = example_matrix(c, to_dataset(y));
          return to_array(pm.values(), pm.rows(), pm.models());
        },
        py::arg("config"), py::arg("y"), "Exact-LOO matrix (null, alternative) for one data set.");
  m.def("run_example",
        [](const ExperimentConfig& c) {
          py::gil_scoped_release release;
          return run_example(c).cells;
        },
        py::arg("config"));
  m.def("run_epsilon_sweep",
        [](const ExperimentConfig& c) {
          py::gil_scoped_release release;
          return run_epsilon_sweep(c);
        },
        py::arg("config"));
  m.def("nested_convergence_probe",
        [](const ExperimentConfig& c, const std::vector<std::size_t>& n_grid) {
          return nested_convergence_probe(c, n_grid);
        },
        py::arg("config"), py::arg("n_grid"));

  // io
  m.def("read_loglik_csv",
        [](const std::filesystem::path& path) {
          const LogTable t = read_log_table(path);
          return py::make_tuple(t.kind == TableKind::Pointwise ? "pointwise" : "draws",
                                to_array(t.values, t.rows, t.labels.size()), t.labels);
        },
        py::arg("path"), "Returns (kind, array, labels) without the K >= 2 / S >= 100 checks of the typed readers.");
  m.def("write_pointwise_csv",
        [](const std::filesystem::path& path, const Array2& pointwise, std::vector<std::string> labels) {
          const auto pm = to_matrix(pointwise, std::move(labels));
          std::ofstream out(path);
          if (!out) throw Error("cannot open " + path.string());
          write_log_table(out, to_table(pm));
        },
        py::arg("path"), py::arg("pointwise"), py::arg("labels") = std::vector<std::string>{});
}
