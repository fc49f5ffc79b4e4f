#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rbu/characterize.hpp"
#include "rbu/duality.hpp"
#include "rbu/error.hpp"

using namespace rbu;

namespace {

Problem log_problem() {
  Problem p;
  p.utility = Utility::log();
  p.g = make_ce_generator(*p.utility);
  p.market = MarketParams::make({0.05}, {0.2}, 1, 1.0);
  return p;
}

ModelFamily parabola(double lo, double hi, std::size_t density) {
  ModelFamily f;
  f.kind = ModelFamilyKind::parabola;
  f.box = {{lo}, {hi}};
  f.curvature = 1.0;
  f.density = density;
  f.refine = false;
  return f;
}

StrategyFamily fractions(double lo, double hi, std::size_t density, bool refine) {
  StrategyFamily f;
  f.box = {{lo}, {hi}};
  f.density = density;
  f.refine = refine;
  return f;
}

}  // namespace

TEST_CASE("endowment samples") {
  MarketParams mk = MarketParams::make({0.05}, {0.2}, 1, 1.0);
  PathBatch p = gen_brownian(TimeGrid(1.0, 10), 1000, 1, 1);
  Endowment c{EndowmentKind::constant, 0.3};
  for (double v : c.sample(mk, p)) CHECK(v == 0.3);

  Endowment put{EndowmentKind::put_on_stock, 2.0, 1.0, 0};
  std::vector<double> s = put.sample(mk, p);
  const double sig = 0.2, b = 0.05 - 0.5 * sig * sig;
  for (std::size_t m = 0; m < 1000; ++m) {
    const double ratio = std::exp(b + sig * p.w(m, 10));
    CHECK(s[m] == doctest::Approx(2.0 * std::max(1.0 - ratio, 0.0)).epsilon(1e-10));
    CHECK(s[m] >= 0.0);
    CHECK(s[m] <= 2.0);
  }
}

TEST_CASE("weak duality over a sweep of parabola models") {
  Problem pr = log_problem();
  PathBatch p = gen_brownian(TimeGrid(1.0, 50), 40000, 1, 2);
  PrimalResult primal = primal_value(Strategy::fraction({1.0}), pr, p);
  REQUIRE(primal.solution.has_value());
  DualSearchResult ds = dual_search(parabola(-1.0, 0.5, 100), pr.g, primal.terminal, p, {}, 0);
  REQUIRE(ds.rows.size() == 100);
  std::size_t ok = 0, feasible = 0;
  for (const SweepRow& r : ds.rows) {
    if (!r.feasible) continue;
    ++feasible;
    if (r.value >= primal.value - 3.0 * std::hypot(r.std_error, primal.std_error)) ++ok;
  }
  CHECK(feasible == 100);
  CHECK(ok == feasible);
  CHECK(ds.best_value.value.mean >= primal.value - 3.0 * primal.std_error);
}

TEST_CASE("subgradient model closes the gap") {
  Problem pr = log_problem();
  PathBatch p = gen_brownian(TimeGrid(1.0, 50), 40000, 1, 3);
  PrimalResult primal = primal_value(Strategy::fraction({1.25}), pr, p);
  GapResult gr = close_gap_with_subgradient(*primal.solution, pr.g, p);
  CHECK(gr.dual.feasible);
  CHECK(gr.gap <= 1e-2);

  ModelPair m = subgradient_model(*primal.solution, pr.g);
  FocStats foc = foc_residual(pr.g, m, *primal.solution);
  CHECK(foc.max_abs_gap <= 1e-8);
}

TEST_CASE("perturbed models stay above the primal") {
  Problem pr = log_problem();
  PathBatch p = gen_brownian(TimeGrid(1.0, 50), 20000, 1, 4);
  PrimalResult primal = primal_value(Strategy::fraction({1.0}), pr, p);
  ModelPair m = subgradient_model(*primal.solution, pr.g);
  for (double db : {0.0, -0.02, -0.1}) {
    for (double dq : {-0.1, 0.0, 0.1}) {
      ModelPair pm = perturb_model(m, db, {dq});
      DualValue dv = dual_objective(pm, pr.g, primal.terminal, p);
      if (!dv.feasible) continue;
      CHECK(dv.value.mean >= primal.value - 3.0 * std::hypot(dv.value.std_error, primal.std_error));
    }
  }
}

TEST_CASE("infeasible models are flagged") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 10), 500, 1, 5);
  std::vector<double> H(500, 1.0);
  // g = 0.5 |z| has an infinite conjugate outside the ball |q| <= 0.5.
  DualValue out = dual_objective(ModelPair::constant(0.0, {0.8}, 500, 10), Generator::norm(0.5), H, p);
  CHECK_FALSE(out.feasible);
  CHECK(out.infeasible_nodes > 0);
  DualValue in = dual_objective(ModelPair::constant(0.0, {0.3}, 500, 10), Generator::norm(0.5), H, p);
  CHECK(in.feasible);
  CHECK(in.value.mean == doctest::Approx(in.weight.mean).epsilon(1e-12));
  CHECK(std::abs(in.weight.mean - 1.0) <= 3.0 * in.weight.std_error);
}

TEST_CASE("family models") {
  ModelFamily f = parabola(-1.0, 1.0, 5);
  f.curvature = 2.0;
  f.margin = 0.01;
  ModelPair m = family_model(f, {0.6}, 3, 4);
  CHECK(m.q(1, 2) == 0.6);
  CHECK(m.beta(2, 3) == doctest::Approx(-0.36 / 4.0 - 0.01));
  ModelFamily c;
  c.kind = ModelFamilyKind::constant;
  c.box = {{-1.0, -1.0}, {1.0, 1.0}};
  ModelPair k = family_model(c, {0.2, -0.4}, 3, 4);
  CHECK(k.beta(0, 0) == 0.2);
  CHECK(k.q(0, 0) == -0.4);
  CHECK(family_strategy(fractions(0.0, 2.0, 3, false), {0.7}).kind() == StrategyKind::constant_fraction);
}

TEST_CASE("optimal fractions match the Merton ratio") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 20), 100000, 1, 6);
  Problem pr = log_problem();
  pr.method = PrimalMethod::ce_oracle;
  StrategySearchResult lg = optimize_strategy(fractions(0.0, 3.0, 13, true), pr, p);
  CHECK(std::abs(lg.params[0] - 0.05 / 0.04) <= 0.05);

  pr.utility = Utility::power(0.2);
  pr.g = make_ce_generator(*pr.utility);
  StrategySearchResult pw = optimize_strategy(fractions(0.0, 3.0, 13, true), pr, p);
  CHECK(std::abs(pw.params[0] - 0.05 / (0.8 * 0.04)) <= 0.05);
  CHECK(pw.rows.size() >= 13);
}

TEST_CASE("minimax values are ordered and close") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 20), 20000, 1, 7);
  Problem pr = log_problem();
  pr.method = PrimalMethod::ce_oracle;
  MinimaxResult r = minimax_gap(fractions(0.0, 3.0, 9, false), parabola(-1.0, 0.5, 21), pr, p);
  CHECK(r.strategies == 9);
  CHECK(r.models == 21);
  CHECK(r.sup_inf <= r.inf_sup);
  CHECK(r.gap <= 0.02);
}
