#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "loolab/experiments.hpp"
#include "loolab/loo.hpp"
#include "loolab/weights.hpp"

namespace loolab {

// Log-density CSV files.
//
// The first row is a header whose first cell declares the kind and whose
// remaining cells are labels:
//
//   pointwise,H0,H1        one row per observation, one column per model
//   draws,y1,y2,...,yn     one row per posterior draw, one column per observation
//
// Values are written with 17 significant digits, so write-then-read is exact.

enum class TableKind { Pointwise, Draws };

struct LogTable {
  TableKind kind = TableKind::Pointwise;
  std::vector<std::string> labels;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x labels.size()
};

/// Parses and validates shape and finiteness. Errors carry line and column.
LogTable parse_log_table(std::istream& in);
LogTable read_log_table(const std::filesystem::path& path);
void write_log_table(std::ostream& out, const LogTable& table);

using LogData = std::variant<LogLikDraws, PointwiseMatrix>;

/// Reads either kind of file into its typed form (draws need S >= 100,
/// pointwise needs K >= 2).
LogData read_loglik_csv(const std::filesystem::path& path);
LogData to_log_data(LogTable table);

LogTable to_table(const PointwiseMatrix& matrix);
LogTable to_table(const LogLikDraws& draws);

/// Shortest text that parses back to the same double (at most 17 digits).
std::string format_double(double v);

// Experiment configuration files: one `key = value` per line, `#` comments,
// lists comma-separated. Keys mirror ExperimentConfig:
//
//   example = 2
//   mode = epsilon            # or idealized
//   epsilon = 0.02, 0.05      # epsilon mode only
//   a = 1
//   b = 1
//   tau0 = 1                  # example 3
//   n_grid = 10, 100, 1000
//   schemes = stacking, bma   # pseudo_bma, pseudo_bma_plus, stacking, bma
//   replications = 50
//   seed = 1
//   threshold = 0.95
//   B = 1000
//   tol = 1e-10
//   threads = 1
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig read_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(write_config(c)) == c field by field.
std::string write_config(const ExperimentConfig& config);

// Experiment outputs.

/// Header: scheme,epsilon,n,replication,model,weight. Cells with errors are
/// omitted here and reported in the manifest.
void write_trajectories_csv(std::ostream& out, const std::vector<Cell>& cells);
/// Header: scheme,epsilon,n_star. Empty n_star means the threshold was never reached.
void write_sweep_csv(std::ostream& out, const std::vector<Crossing>& crossings);

}  // namespace loolab
