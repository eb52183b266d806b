// loolab: command-line front end.
//
//   loolab weights  <pointwise.csv> | --draws a.csv --draws b.csv ...
//   loolab psis     <draws.csv>
//   loolab experiment <config> --out DIR
//   loolab sweep      <config> --out DIR
//
// Exit codes: 0 success, 1 usage or input error, 2 finished with per-cell errors.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "loolab/error.hpp"
#include "loolab/experiments.hpp"
#include "loolab/io.hpp"
#include "loolab/loo.hpp"
#include "loolab/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace loolab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---- weights -------------------------------------------------------------

struct WeightsArgs {
  std::string matrix_path;
  std::vector<std::string> draws_paths;
  std::vector<std::string> schemes{"pseudo-bma", "pseudo-bma-plus", "stacking"};
  std::vector<double> log_marginals;
  std::size_t bootstrap = 1000;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  double khat_threshold = 0.7;
  std::string out_dir;
};

int run_weights(const WeightsArgs& args) {
  if (args.matrix_path.empty() == args.draws_paths.empty())
    throw Error("weights: give either a pointwise matrix file or one --draws file per model");

  std::vector<ParetoDiagnostics> diagnostics;
  std::vector<std::string> draw_labels;
  std::optional<PointwiseMatrix> matrix;
  if (!args.matrix_path.empty()) {
    auto data = read_loglik_csv(args.matrix_path);
    if (!std::holds_alternative<PointwiseMatrix>(data))
      throw Error(args.matrix_path + ": expected a 'pointwise' file; use --draws for posterior draws");
    matrix = std::get<PointwiseMatrix>(std::move(data));
  } else {
    std::vector<std::vector<double>> columns;
    for (const auto& path : args.draws_paths) {
      auto data = read_loglik_csv(path);
      if (!std::holds_alternative<LogLikDraws>(data)) throw Error(path + ": expected a 'draws' file");
      const auto res = psis_loo(std::get<LogLikDraws>(data), args.khat_threshold);
      columns.push_back(res.estimate.pointwise);
      diagnostics.push_back(res.diagnostics);
      draw_labels.push_back(fs::path(path).stem().string());
    }
    matrix = PointwiseMatrix::from_columns(columns, draw_labels);
  }
  const auto& m = *matrix;
  const auto& labels = m.labels();

  std::cout << "observations: " << m.rows() << ", models: " << m.models() << "\n\n";
  std::cout << "elpd_loo (sum)\n";
  std::vector<ElpdEstimate> elpds;
  for (std::size_t k = 0; k < m.models(); ++k) {
    const auto col = m.column(k);
    try {
      elpds.push_back(elpd_from_pointwise(col));
      std::cout << "  " << labels[k] << ": " << fixed(elpds.back().elpd) << "  se " << fixed(elpds.back().se) << '\n';
    } catch (const Error& e) {
      elpds.push_back({});
      std::cout << "  " << labels[k] << ": " << e.what() << '\n';
    }
  }
  std::cout << "\npaired differences (row - column)\n";
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, PairedDiff>> diffs;
  for (std::size_t a = 0; a < m.models(); ++a) {
    for (std::size_t b = a + 1; b < m.models(); ++b) {
      try {
        auto d = paired_diff(m.column(a), m.column(b));
        std::cout << "  " << labels[a] << " - " << labels[b] << ": " << fixed(d.diff) << "  se " << fixed(d.se_diff)
                  << '\n';
        diffs.push_back({{a, b}, std::move(d)});
      } catch (const Error& e) {
        std::cout << "  " << labels[a] << " - " << labels[b] << ": " << e.what() << '\n';
      }
    }
  }
  for (std::size_t k = 0; k < diagnostics.size(); ++k) {
    const auto& d = diagnostics[k];
    std::cout << "\nkhat " << labels[k] << ": " << d.flagged.size() << " of " << d.khat.size() << " above "
              << d.threshold;
    for (auto i : d.flagged) std::cout << (i == d.flagged.front() ? " [" : ", ") << i;
    if (!d.flagged.empty()) std::cout << ']';
    std::cout << '\n';
  }

  std::cout << "\nweights\n";
  std::cout << "  " << std::left << std::setw(18) << "scheme";
  for (const auto& l : labels) std::cout << std::setw(12) << l;
  std::cout << '\n';
  std::vector<WeightVector> results;
  int exit_code = kExitOk;
  for (const auto& name : args.schemes) {
    const auto scheme = parse_scheme(name);
    if (!scheme) throw Error("unknown scheme '" + name + "'");
    std::cout << "  " << std::setw(18) << scheme_name(*scheme);
    try {
      WeightVector w;
      switch (*scheme) {
        case Scheme::PseudoBma: w = pseudo_bma(m); break;
        case Scheme::PseudoBmaPlus: w = pseudo_bma_plus(m, args.bootstrap, args.seed); break;
        case Scheme::Stacking: w = stacking(m, {args.tol, 100000}); break;
        case Scheme::Bma:
          if (args.log_marginals.size() != m.models())
            throw Error("bma needs --log-marginals with one value per model");
          w = bma(args.log_marginals);
          break;
      }
      for (double v : w.weights) std::cout << std::setw(12) << fixed(v);
      if (*scheme == Scheme::Stacking && !w.converged) std::cout << "(not converged)";
      std::cout << '\n';
      results.push_back(std::move(w));
    } catch (const Error& e) {
      std::cout << e.what() << '\n';
      exit_code = kExitPartial;
    }
  }

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    {
      auto out = open_out(dir / "weights.csv");
      out << "scheme,model,weight\n";
      for (const auto& w : results)
        for (std::size_t k = 0; k < w.size(); ++k)
          out << scheme_name(w.scheme) << ',' << labels[k] << ',' << format_double(w.weights[k]) << '\n';
    }
    {
      auto out = open_out(dir / "elpd.csv");
      out << "model,elpd,se\n";
      for (std::size_t k = 0; k < elpds.size(); ++k)
        if (!elpds[k].pointwise.empty())
          out << labels[k] << ',' << format_double(elpds[k].elpd) << ',' << format_double(elpds[k].se) << '\n';
    }
    {
      // Pointwise differences in observation order, for residual-style plots.
      auto out = open_out(dir / "pointwise_diff.csv");
      out << "model_a,model_b,observation,diff\n";
      for (const auto& [ab, d] : diffs)
        for (std::size_t i = 0; i < d.pointwise_diff.size(); ++i)
          out << labels[ab.first] << ',' << labels[ab.second] << ',' << i << ',' << format_double(d.pointwise_diff[i])
              << '\n';
    }
    if (!diagnostics.empty()) {
      auto out = open_out(dir / "khat.csv");
      out << "model,observation,khat\n";
      for (std::size_t k = 0; k < diagnostics.size(); ++k)
        for (std::size_t i = 0; i < diagnostics[k].khat.size(); ++i)
          out << labels[k] << ',' << i << ',' << format_double(diagnostics[k].khat[i]) << '\n';
    }
  }
  return exit_code;
}

// ---- psis ----------------------------------------------------------------

int run_psis(const std::string& path, double khat_threshold, const std::string& out_dir) {
  auto data = read_loglik_csv(path);
  if (!std::holds_alternative<LogLikDraws>(data)) throw Error(path + ": expected a 'draws' file");
  const auto res = psis_loo(std::get<LogLikDraws>(data), khat_threshold);
  std::cout << "elpd_loo " << fixed(res.estimate.elpd) << "  se " << fixed(res.estimate.se) << '\n';
  std::cout << "khat > " << khat_threshold << ": " << res.diagnostics.flagged.size() << " of "
            << res.diagnostics.khat.size() << '\n';
  for (auto i : res.diagnostics.flagged)
    std::cout << "  observation " << i << "  khat " << fixed(res.diagnostics.khat[i], 3) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto out = open_out(fs::path(out_dir) / "psis.csv");
    out << "observation,elpd_loo,khat\n";
    for (std::size_t i = 0; i < res.estimate.pointwise.size(); ++i)
      out << i << ',' << format_double(res.estimate.pointwise[i]) << ',' << format_double(res.diagnostics.khat[i])
          << '\n';
  }
  return kExitOk;
}

// ---- experiment / sweep --------------------------------------------------

int run_experiment(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                   std::optional<double> threshold, bool sweep) {
  const std::string started = utc_now();
  ExperimentConfig config = read_config(config_path);
  if (seed) config.seed = *seed;
  if (threshold) config.threshold = *threshold;
  config.validate();
  if (!sweep && config.mode == Mode::Epsilon && config.epsilons.size() != 1)
    throw DomainError("epsilon: 'experiment' runs a single epsilon; use 'sweep' for a grid");

  const SweepResult result = run_epsilon_sweep(config);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "trajectories.csv");
    write_trajectories_csv(out, result.cells);
  }
  {
    auto out = open_out(dir / "sweep.csv");
    write_sweep_csv(out, result.crossings);
  }

  json manifest;
  manifest["tool"] = "loolab";
  manifest["version"] = LOOLAB_VERSION;
  manifest["command"] = sweep ? "sweep" : "experiment";
  manifest["config_file"] = config_path;
  manifest["config"] = write_config(config);
  manifest["seed"] = config.seed;
  manifest["started_utc"] = started;
  manifest["finished_utc"] = utc_now();
  manifest["outputs"] = {"trajectories.csv", "sweep.csv"};
  manifest["cells"] = result.cells.size();
  json errors = json::array();
  for (const Cell& c : result.cells) {
    if (c.error.empty()) continue;
    errors.push_back({{"scheme", scheme_name(c.scheme)},
                      {"epsilon", c.epsilon},
                      {"n", c.n},
                      {"replication", c.replication},
                      {"message", c.error}});
  }
  manifest["errors"] = errors;
  json dev = json::array();
  for (const auto& d : result.deviations)
    dev.push_back({{"epsilon", d.epsilon}, {"n", d.n}, {"fraction_deviating", d.fraction}});
  manifest["deviation_from_idealized"] = dev;
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  std::cout << "cells: " << result.cells.size() << ", errors: " << result.error_count << '\n';
  for (const auto& c : result.crossings) {
    std::cout << "  " << std::left << std::setw(16) << scheme_name(c.scheme) << " epsilon " << format_double(c.epsilon)
              << "  n* " << (c.n_star ? std::to_string(*c.n_star) : std::string("-")) << '\n';
  }
  std::cout << "wrote " << (dir / "trajectories.csv").string() << ", sweep.csv, manifest.json\n";
  return result.error_count ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loolab: leave-one-out model comparison and weighting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LOOLAB_VERSION));

  WeightsArgs wargs;
  auto* weights = app.add_subcommand("weights", "Model weights from a pointwise matrix or per-model draws");
  weights->add_option("matrix", wargs.matrix_path, "Pointwise log-density CSV (n x K)");
  weights->add_option("--draws", wargs.draws_paths, "Log-likelihood draws CSV, one per model (PSIS-LOO)");
  weights->add_option("--scheme", wargs.schemes, "pseudo-bma, pseudo-bma-plus, stacking, bma")->capture_default_str();
  weights->add_option("--B", wargs.bootstrap, "Bootstrap samples for pseudo-bma-plus")->capture_default_str();
  weights->add_option("--tol", wargs.tol, "KKT tolerance for stacking")->capture_default_str();
  weights->add_option("--seed", wargs.seed, "Seed for pseudo-bma-plus")->capture_default_str();
  weights->add_option("--log-marginals", wargs.log_marginals, "Log marginal likelihoods for bma")->delimiter(',');
  weights->add_option("--threshold", wargs.khat_threshold, "khat flag threshold")->capture_default_str();
  weights->add_option("--out", wargs.out_dir, "Directory for CSV outputs");

  std::string psis_path, psis_out;
  double psis_threshold = 0.7;
  auto* psis = app.add_subcommand("psis", "PSIS-LOO with khat diagnostics from log-likelihood draws");
  psis->add_option("draws", psis_path, "Log-likelihood draws CSV")->required();
  psis->add_option("--threshold", psis_threshold, "khat flag threshold")->capture_default_str();
  psis->add_option("--out", psis_out, "Directory for psis.csv");

  std::string exp_config, exp_out;
  std::optional<std::uint64_t> exp_seed;
  std::optional<double> exp_threshold;
  auto* experiment = app.add_subcommand("experiment", "Run one example (idealized or single epsilon)");
  auto* sweep = app.add_subcommand("sweep", "Run an epsilon sweep and extract n*(epsilon)");
  for (auto* sub : {experiment, sweep}) {
    sub->add_option("config", exp_config, "Experiment config file")->required();
    sub->add_option("--out", exp_out, "Output directory")->required();
    sub->add_option("--seed", exp_seed, "Override config seed");
    sub->add_option("--threshold", exp_threshold, "Override strong-preference threshold");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*weights) return run_weights(wargs);
    if (*psis) return run_psis(psis_path, psis_threshold, psis_out);
    if (*experiment) return run_experiment(exp_config, exp_out, exp_seed, exp_threshold, false);
    if (*sweep) return run_experiment(exp_config, exp_out, exp_seed, exp_threshold, true);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
