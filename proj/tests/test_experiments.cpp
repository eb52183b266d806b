#include <cmath>

#include "doctest.h"
#include "loolab/error.hpp"
#include "loolab/experiments.hpp"

using namespace loolab;

namespace {

ExperimentConfig idealized(int example, std::vector<std::size_t> grid) {
  ExperimentConfig c;
  c.example_id = example;
  c.n_grid = std::move(grid);
  return c;
}

const Cell& find(const std::vector<Cell>& cells, Scheme s, std::size_t n, std::size_t r = 0) {
  for (const auto& c : cells)
    if (c.scheme == s && c.n == n && c.replication == r) return c;
  throw std::runtime_error("cell not found");
}

}  // namespace

TEST_CASE("config validation names the field") {
  auto c = idealized(1, {});
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n_grid"), DomainError);
  c.n_grid = {10, 10};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("strictly increasing"), DomainError);
  c.n_grid = {10, 20};
  c.replications = 3;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("replications"), DomainError);
  c.replications = 1;
  c.mode = Mode::Epsilon;
  c.epsilons = {1e-15};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("epsilon"), DomainError);
  c.epsilons = {0x1.0p-45};
  CHECK_NOTHROW(c.validate());
  c.epsilons = {0.1, 0.05};
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.example_id = 2;
  c.epsilons = {0.6};
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.example_id = 4;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("example_id"), DomainError);
}

TEST_CASE("example 1 idealized: stacking is (1, 0) everywhere, pseudo-BMA matches closed form") {
  auto c = idealized(1, {5, 10, 50, 200});
  const auto t = run_example(c);
  for (std::size_t n : c.n_grid) {
    const auto& s = find(t.cells, Scheme::Stacking, n);
    REQUIRE(s.weights);
    CHECK(s.weights->weights == std::vector<double>{1.0, 0.0});
    CHECK_FALSE(s.deviates_from_idealized);
  }
  const auto& p = find(t.cells, Scheme::PseudoBma, 10);
  CHECK(p.weights->weights[0] == doctest::Approx(0.7218).epsilon(1e-4));
  CHECK(p.weights->weights[1] == doctest::Approx(0.2782).epsilon(1e-4));
  const auto& b = find(t.cells, Scheme::Bma, 10);
  CHECK(b.weights->weights[0] == doctest::Approx(11.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("idealized matrices have zero column variance in all examples") {
  for (int ex : {1, 2, 3}) {
    auto c = idealized(ex, {10});
    c.a = c.b = 2.0;
    c.tau0 = 1.5;
    for (std::size_t n : {2u, 10u, 64u, 1000u}) {
      const Dataset d = simulate(example_dgp(c, 0.0, 0), n);
      const auto m = example_matrix(c, d);
      CHECK(m.column_variance(0) == 0.0);
      CHECK(m.column_variance(1) == 0.0);
    }
  }
}

TEST_CASE("idealized runs are bit-identical across repeats and thread counts") {
  auto c = idealized(2, {10, 100, 1000});
  const auto a = run_example(c);
  c.threads = 4;
  const auto b = run_example(c);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t j = 0; j < a.cells.size(); ++j) CHECK(a.cells[j].weights->weights == b.cells[j].weights->weights);
}

TEST_CASE("epsilon runs are independent of thread count") {
  ExperimentConfig c;
  c.example_id = 2;
  c.mode = Mode::Epsilon;
  c.epsilons = {0.1};
  c.n_grid = {20, 200};
  c.replications = 6;
  c.bootstrap_samples = 100;
  c.seed = 5;
  const auto a = run_example(c);
  c.threads = 3;
  const auto b = run_example(c);
  for (std::size_t j = 0; j < a.cells.size(); ++j) {
    CHECK(a.cells[j].replication == b.cells[j].replication);
    CHECK(a.cells[j].weights->weights == b.cells[j].weights->weights);
  }
}

TEST_CASE("example 1 with tiny epsilon: all-ones replications match the idealized run") {
  ExperimentConfig ideal = idealized(1, {10, 100, 1000});
  const auto base = run_example(ideal);
  ExperimentConfig eps = ideal;
  eps.mode = Mode::Epsilon;
  eps.epsilons = {1e-6};
  eps.replications = 5;
  eps.seed = 42;
  const auto t = run_example(eps);
  std::size_t compared = 0;
  for (const auto& cell : t.cells) {
    if (cell.deviates_from_idealized) continue;
    const auto& ref = find(base.cells, cell.scheme, cell.n);
    REQUIRE(cell.weights);
    CHECK(cell.weights->weights == ref.weights->weights);
    ++compared;
  }
  CHECK(compared > 0);
}

TEST_CASE("contradicting data: pseudo-BMA cells fail, stacking and BMA carry on") {
  ExperimentConfig c;
  c.example_id = 1;
  c.mode = Mode::Epsilon;
  c.epsilons = {0.3};
  c.n_grid = {50};
  c.replications = 1;
  c.bootstrap_samples = 100;
  const auto t = run_example(c);
  CHECK(find(t.cells, Scheme::PseudoBma, 50).weights == std::nullopt);
  CHECK_FALSE(find(t.cells, Scheme::PseudoBma, 50).error.empty());
  CHECK_FALSE(find(t.cells, Scheme::PseudoBmaPlus, 50).error.empty());
  const auto& b = find(t.cells, Scheme::Bma, 50);
  REQUIRE(b.weights);
  CHECK(b.weights->weights[0] == 0.0);
  const auto& s = find(t.cells, Scheme::Stacking, 50);
  REQUIRE(s.weights);
  CHECK(s.weights->weights[1] > 0.5);
}

TEST_CASE("n* extraction") {
  const std::vector<std::size_t> grid{10, 20, 40};
  CHECK(find_n_star({0.1, 0.96, 0.99}, grid, 0.95) == 20u);
  CHECK(find_n_star({0.1, 0.2, 0.3}, grid, 0.95) == std::nullopt);
  CHECK(find_n_star({0.95, 0.2, 0.3}, grid, 0.95) == 10u);
}

TEST_CASE("epsilon sweep: stacking n* is finite for a clear effect") {
  ExperimentConfig c;
  c.example_id = 1;
  c.mode = Mode::Epsilon;
  c.epsilons = {0.2};
  c.n_grid = {10, 20, 50, 100, 200, 500};
  c.schemes = {Scheme::Stacking};
  c.replications = 50;
  c.seed = 9;
  const auto r = run_epsilon_sweep(c);
  REQUIRE(r.crossings.size() == 1);
  REQUIRE(r.crossings[0].n_star);
  CHECK(*r.crossings[0].n_star <= 500u);
  // the reported n* really crosses
  const auto med = median_complex_weight(r.cells, Scheme::Stacking, 0.2, c.n_grid);
  for (std::size_t j = 0; j < c.n_grid.size(); ++j) {
    if (c.n_grid[j] < *r.crossings[0].n_star) CHECK(med[j] < c.threshold);
    if (c.n_grid[j] == *r.crossings[0].n_star) CHECK(med[j] >= c.threshold);
  }
  CHECK(r.deviations.size() == c.n_grid.size());
}

TEST_CASE("nested convergence probe") {
  SUBCASE("example 1 closed form") {
    const auto rows = nested_convergence_probe(idealized(1, {10}), {1, 5, 10, 100, 1000});
    for (const auto& row : rows) CHECK(std::abs(row.gap - 1.0 / (row.n + 2.0)) < 1e-12);
    for (std::size_t j = 1; j < rows.size(); ++j) CHECK(rows[j].gap < rows[j - 1].gap);
  }
  SUBCASE("example 2 with an asymmetric prior shrinks") {
    auto c = idealized(2, {10});
    c.a = 1;
    c.b = 3;
    const auto rows = nested_convergence_probe(c, {10, 100, 1000});
    CHECK(rows[2].gap < rows[0].gap);
  }
  SUBCASE("example 3 shrinks") {
    const auto rows = nested_convergence_probe(idealized(3, {10}), {10, 100, 1000});
    CHECK(rows[2].gap < rows[1].gap);
    CHECK(rows[1].gap < rows[0].gap);
  }
  SUBCASE("a model against itself") {
    const ModelSpec m(BernoulliPoint{0.5});
    const auto rows = nested_convergence_probe(m, m, {IdealizedAllOnes{}}, {0.0, 1.0}, {5, 50});
    for (const auto& row : rows) CHECK(row.gap == 0.0);
  }
}
