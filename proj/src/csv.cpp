#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "loolab/error.hpp"
#include "loolab/io.hpp"

namespace loolab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits on commas, remembering the 1-based column where each cell starts.
std::vector<std::pair<std::string_view, std::size_t>> split_cells(std::string_view line) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    out.emplace_back(trim(line.substr(start, end - start)), start + 1);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(std::string_view text, std::size_t line, std::size_t column) {
  if (text.empty()) throw ParseError(line, column, "empty cell");
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc::result_out_of_range) throw ParseError(line, column, "value out of range: " + std::string(text));
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(line, column, "not a number: '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw ParseError(line, column, "non-finite value '" + std::string(text) + "'");
  return v;
}

const char* kind_name(TableKind k) { return k == TableKind::Pointwise ? "pointwise" : "draws"; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

LogTable parse_log_table(std::istream& in) {
  LogTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (!have_header) {
      const std::string_view kind = cells[0].first;
      if (kind == "pointwise") t.kind = TableKind::Pointwise;
      else if (kind == "draws") t.kind = TableKind::Draws;
      else throw ParseError(lineno, 1, "header must start with 'pointwise' or 'draws', got '" + std::string(kind) + "'");
      std::set<std::string_view> seen;
      for (std::size_t c = 1; c < cells.size(); ++c) {
        if (cells[c].first.empty()) throw ParseError(lineno, cells[c].second, "empty label");
        if (!seen.insert(cells[c].first).second)
          throw ParseError(lineno, cells[c].second, "duplicate label '" + std::string(cells[c].first) + "'");
        t.labels.emplace_back(cells[c].first);
      }
      if (t.labels.empty()) throw ParseError(lineno, 0, "header declares no columns");
      have_header = true;
      continue;
    }
    if (cells.size() != t.labels.size()) {
      throw ParseError(lineno, 0,
                       "ragged row: expected " + std::to_string(t.labels.size()) + " cells, got " +
                           std::to_string(cells.size()));
    }
    for (const auto& [text, col] : cells) t.values.push_back(parse_cell(text, lineno, col));
    ++t.rows;
  }
  if (!have_header) throw ParseError(lineno, 0, "missing header row");
  return t;
}

LogTable read_log_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_log_table(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), path.string() + ": " + std::string(e.what()));
  }
}

void write_log_table(std::ostream& out, const LogTable& table) {
  out << kind_name(table.kind);
  for (const auto& l : table.labels) out << ',' << l;
  out << '\n';
  const std::size_t cols = table.labels.size();
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_double(table.values[r * cols + c]);
    }
    out << '\n';
  }
}

LogData to_log_data(LogTable table) {
  const std::size_t cols = table.labels.size();
  if (table.kind == TableKind::Draws) return LogLikDraws(table.rows, cols, std::move(table.values));
  return PointwiseMatrix(table.rows, cols, std::move(table.values), std::move(table.labels));
}

LogData read_loglik_csv(const std::filesystem::path& path) { return to_log_data(read_log_table(path)); }

LogTable to_table(const PointwiseMatrix& matrix) {
  LogTable t;
  t.kind = TableKind::Pointwise;
  t.labels = matrix.labels();
  t.rows = matrix.rows();
  t.values.assign(matrix.values().begin(), matrix.values().end());
  return t;
}

LogTable to_table(const LogLikDraws& draws) {
  LogTable t;
  t.kind = TableKind::Draws;
  for (std::size_t i = 0; i < draws.observations(); ++i) t.labels.push_back("y" + std::to_string(i + 1));
  t.rows = draws.draws();
  t.values.assign(draws.values().begin(), draws.values().end());
  return t;
}

void write_trajectories_csv(std::ostream& out, const std::vector<Cell>& cells) {
  out << "scheme,epsilon,n,replication,model,weight\n";
  for (const Cell& c : cells) {
    if (!c.weights) continue;
    for (std::size_t k = 0; k < c.weights->size(); ++k) {
      out << scheme_name(c.scheme) << ',' << format_double(c.epsilon) << ',' << c.n << ',' << c.replication
          << ",H" << k << ',' << format_double(c.weights->weights[k]) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<Crossing>& crossings) {
  out << "scheme,epsilon,n_star\n";
  for (const Crossing& c : crossings) {
    out << scheme_name(c.scheme) << ',' << format_double(c.epsilon) << ',';
    if (c.n_star) out << *c.n_star;
    out << '\n';
  }
}

}  // namespace loolab
