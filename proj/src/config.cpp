#include <charconv>
#include <fstream>
#include <istream>
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

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? s.size() : comma;
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const std::string& key) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(line, 0, key + ": cannot parse '" + std::string(text) + "'");
  return v;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, 0, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError(lineno, 0, key + ": given more than once");
    if (value.empty() && key != "epsilon" && key != "n_grid") throw ParseError(lineno, 0, key + ": missing value");

    if (key == "example" || key == "example_id") {
      c.example_id = parse_number<int>(value, lineno, key);
    } else if (key == "mode") {
      if (value == "idealized") c.mode = Mode::Idealized;
      else if (value == "epsilon") c.mode = Mode::Epsilon;
      else throw ParseError(lineno, 0, "mode: expected 'idealized' or 'epsilon'");
    } else if (key == "epsilon" || key == "epsilons") {
      c.epsilons.clear();
      for (auto item : split_list(value)) c.epsilons.push_back(parse_number<double>(item, lineno, key));
    } else if (key == "a") {
      c.a = parse_number<double>(value, lineno, key);
    } else if (key == "b") {
      c.b = parse_number<double>(value, lineno, key);
    } else if (key == "tau0") {
      c.tau0 = parse_number<double>(value, lineno, key);
    } else if (key == "n_grid") {
      c.n_grid.clear();
      for (auto item : split_list(value)) c.n_grid.push_back(parse_number<std::size_t>(item, lineno, key));
    } else if (key == "schemes") {
      c.schemes.clear();
      for (auto item : split_list(value)) {
        const auto s = parse_scheme(item);
        if (!s) throw ParseError(lineno, 0, "schemes: unknown scheme '" + std::string(item) + "'");
        c.schemes.push_back(*s);
      }
    } else if (key == "replications") {
      c.replications = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(value, lineno, key);
    } else if (key == "threshold") {
      c.threshold = parse_number<double>(value, lineno, key);
    } else if (key == "B") {
      c.bootstrap_samples = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "tol") {
      c.tol = parse_number<double>(value, lineno, key);
    } else if (key == "threads") {
      c.threads = parse_number<std::size_t>(value, lineno, key);
    } else {
      throw ParseError(lineno, 0, "unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_config(in);
}

std::string write_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto join = [&](const auto& items, auto fmt) {
    std::string s;
    for (std::size_t j = 0; j < items.size(); ++j) s += (j ? ", " : "") + fmt(items[j]);
    return s;
  };
  os << "example = " << c.example_id << '\n';
  os << "mode = " << (c.mode == Mode::Idealized ? "idealized" : "epsilon") << '\n';
  if (!c.epsilons.empty()) os << "epsilon = " << join(c.epsilons, format_double) << '\n';
  os << "a = " << format_double(c.a) << '\n';
  os << "b = " << format_double(c.b) << '\n';
  os << "tau0 = " << format_double(c.tau0) << '\n';
  os << "n_grid = " << join(c.n_grid, [](std::size_t n) { return std::to_string(n); }) << '\n';
  os << "schemes = " << join(c.schemes, [](Scheme s) { return std::string(scheme_name(s)); }) << '\n';
  os << "replications = " << c.replications << '\n';
  os << "seed = " << c.seed << '\n';
  os << "threshold = " << format_double(c.threshold) << '\n';
  os << "B = " << c.bootstrap_samples << '\n';
  os << "tol = " << format_double(c.tol) << '\n';
  os << "threads = " << c.threads << '\n';
  return os.str();
}

}  // namespace loolab
