#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rbu/characterize.hpp"
#include "rbu/duality.hpp"

using namespace rbu;

namespace {

MarketParams gbm() { return MarketParams::make({0.05}, {0.2}, 1, 1.0); }

RegressionBasis brownian_basis() {
  RegressionBasis b;
  b.state = StateKind::brownian;
  return b;
}

}  // namespace

TEST_CASE("market price of risk as the model kernel gives a constant adjoint") {
  const std::size_t N = 40, M = 5000;
  MarketParams mk = gbm();
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 1);
  ModelPair model = ModelPair::constant(0.0, {-mk.theta[0]}, M, N);
  AdjointSolution adj = solve_adjoint(model, ProcessPath::constant(M, N, {1.25}), mk, p, nullptr, brownian_basis());
  double dev = 0.0;
  for (double v : adj.p.raw()) dev = std::max(dev, std::abs(v - 1.0));
  CHECK(dev <= 1e-10);
  ResidualStats r = max_principle_residual(adj, mk, model);
  CHECK(r.l2 <= 1e-10);
  CHECK(r.max <= 1e-10);
  CHECK(r.nodes == N * M);
  CHECK(adj.nonpositive_nodes == 0);
}

TEST_CASE("zero model kernel leaves the full market price of risk") {
  const std::size_t N = 200, M = 2000;
  MarketParams mk = gbm();
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 2);
  ModelPair model = ModelPair::constant(0.0, {0.0}, M, N);
  const double pi = 1.25, theta = mk.theta[0];
  AdjointSolution adj = solve_adjoint(model, ProcessPath::constant(M, N, {pi}), mk, p, nullptr, brownian_basis());
  // p_t = exp(a (T - t)) with a = theta pi sigma
  const double a = theta * pi * 0.2;
  CHECK(adj.p(0, 0) == doctest::Approx(std::exp(a)).epsilon(1e-3));
  ResidualStats r = max_principle_residual(adj, mk, model);
  const double l2 = theta * std::sqrt((std::exp(2.0 * a) - 1.0) / (2.0 * a));
  CHECK(r.l2 == doctest::Approx(l2).epsilon(2e-3));
  CHECK(r.max == doctest::Approx(theta * std::exp(a)).epsilon(1e-3));
}

TEST_CASE("terminal scale multiplies the adjoint") {
  const std::size_t N = 10, M = 1000;
  MarketParams mk = gbm();
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 3);
  ModelPair model = ModelPair::constant(0.0, {0.1}, M, N);
  ProcessPath pi = ProcessPath::constant(M, N, {0.8});
  AdjointSolution a = solve_adjoint(model, pi, mk, p, nullptr, brownian_basis(), 1.0);
  AdjointSolution b = solve_adjoint(model, pi, mk, p, nullptr, brownian_basis(), 3.0);
  for (std::size_t m = 0; m < 50; ++m)
    for (std::size_t i = 0; i <= N; ++i) CHECK(b.p(m, i) == doctest::Approx(3.0 * a.p(m, i)).epsilon(1e-9));
}

TEST_CASE("Fenchel-Young gap of a constant model is nonpositive") {
  const std::size_t N = 20, M = 5000;
  MarketParams mk = gbm();
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 4);
  WealthPath w = simulate_wealth(Strategy::fraction({1.0}), mk, p);
  Generator g = make_ce_generator(Utility::log());
  BsdeSolution s = solve_backward(g, w.terminal(), &w, p);
  FocStats f = foc_residual(g, family_model(ModelFamily{}, {-0.1}, M, N), s);
  CHECK(f.nodes == N * M);
  CHECK(f.max_abs_gap > 1e-6);
  CHECK(f.mean_gap <= 0.0);
  CHECK(f.negative_fraction > 0.5);
}

TEST_CASE("residual of the optimal pair decreases under refinement") {
  Problem pr;
  pr.utility = Utility::log();
  pr.g = make_ce_generator(*pr.utility);
  pr.market = gbm();
  const Strategy best = Strategy::fraction({1.25});
  double prev = INFINITY;
  for (std::size_t N : {25, 50, 100}) {
    const std::size_t M = 400 * N;
    PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 5);
    PrimalResult primal = primal_value(best, pr, p);
    ModelPair model = subgradient_model(*primal.solution, pr.g);
    FractionProcess fp = to_fraction_process(best, primal.wealth, pr.market, p);
    AdjointSolution adj = solve_adjoint(model, fp.pi_tilde, pr.market, p, &primal.wealth);
    ResidualStats r = max_principle_residual(adj, pr.market, model);
    CHECK(adj.nonpositive_nodes == 0);
    CHECK(r.l2 < prev);
    prev = r.l2;
  }
  CHECK(prev <= 0.01);
}
