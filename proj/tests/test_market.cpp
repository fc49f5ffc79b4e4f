#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rbu/error.hpp"
#include "rbu/market.hpp"
#include "rbu/parallel.hpp"

using namespace rbu;

namespace {

MarketParams gbm() { return MarketParams::make({0.05}, {0.2}, 1, 1.0); }

double min_of(const ProcessPath& p) { return *std::min_element(p.raw().begin(), p.raw().end()); }

}  // namespace

TEST_CASE("market price of risk reproduces the drift") {
  MarketParams m = MarketParams::make({0.05, 0.08}, {0.2, 0.05, 0.0, 0.1, 0.25, 0.1}, 3, 2.0);
  CHECK(m.n == 2);
  CHECK(m.d == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += m.sigma_at(i, j) * m.theta[j];
    CHECK(s == doctest::Approx(m.mu[i]).epsilon(1e-12));
  }
  CHECK(m.condition_number >= 1.0);
  CHECK(gbm().theta[0] == doctest::Approx(0.25));
}

TEST_CASE("invalid markets are rejected") {
  CHECK_THROWS_AS(MarketParams::make({0.05, 0.05}, {0.2, 0.2}, 1, 1.0), Error);
  CHECK_THROWS_AS(MarketParams::make({0.05, 0.05}, {0.2, 0.2, 0.2, 0.2}, 2, 1.0), Error);
  CHECK_THROWS_AS(MarketParams::make({0.05}, {0.2}, 1, 0.0), Error);
  CHECK_THROWS_AS(MarketParams::make({0.05}, {0.2, 0.1}, 1, 1.0), Error);
}

TEST_CASE("null strategy keeps initial wealth") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 20), 500, 1, 1);
  for (Strategy s : {Strategy::amount({0.0}), Strategy::fraction({0.0})}) {
    WealthPath w = simulate_wealth(s, gbm(), b);
    CHECK(std::all_of(w.x.raw().begin(), w.x.raw().end(), [](double v) { return v == 1.0; }));
    FractionProcess f = to_fraction_process(s, w, gbm(), b);
    for (std::size_t m = 0; m < 500; m += 50)
      for (std::size_t i = 0; i < 20; ++i) CHECK(f.pi_tilde(m, i) == 0.0);
  }
}

TEST_CASE("fraction one tracks the stock") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 50), 2000, 1, 2);
  WealthPath w = simulate_wealth(Strategy::fraction({1.0}), gbm(), b);
  std::vector<double> s = stock_terminal(gbm(), b, 0);
  for (std::size_t m = 0; m < b.paths(); ++m) CHECK(w.terminal()[m] == doctest::Approx(s[m]).epsilon(1e-12));
}

TEST_CASE("constant fraction wealth is the exact lognormal") {
  const double f = 1.7, mu = 0.05, sig = 0.2;
  PathBatch b = gen_brownian(TimeGrid(1.0, 25), 300, 1, 3);
  WealthPath w = simulate_wealth(Strategy::fraction({f}), gbm(), b);
  for (std::size_t m = 0; m < b.paths(); ++m)
    for (std::size_t i = 0; i <= 25; ++i) {
      const double t = b.grid().time(i);
      const double x = std::exp((f * mu - 0.5 * f * f * sig * sig) * t + f * sig * b.w(m, i));
      CHECK(w.x(m, i) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("log wealth mean for a constant fraction") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 10), 100000, 1, 4);
  for (double f : {0.5, 1.25, 2.0}) {
    WealthPath w = simulate_wealth(Strategy::fraction({f}), gbm(), b);
    std::vector<double> lx = w.terminal();
    for (double& v : lx) v = std::log(v);
    MeanEstimate e = mean_and_se(lx);
    CHECK(std::abs(e.mean - (f * 0.05 - f * f * 0.02)) <= 3.0 * e.std_error);
  }
}

TEST_CASE("fraction process round-trips for constant fractions and amounts") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 40), 2000, 1, 5);
  Strategy frac = Strategy::fraction({0.8});
  WealthPath wf = simulate_wealth(frac, gbm(), b);
  FractionProcess pf = to_fraction_process(frac, wf, gbm(), b);
  for (std::size_t m = 0; m < 2000; m += 97) CHECK(pf.pi_tilde(m, 17) == 0.8);

  Strategy amt = Strategy::amount({0.6});
  WealthPath wa = simulate_wealth(amt, gbm(), b);
  FractionProcess pa = to_fraction_process(amt, wa, gbm(), b);
  double worst = 0.0;
  for (std::size_t m = 0; m < 2000; ++m)
    for (std::size_t i = 0; i < 40; ++i)
      if (wa.x(m, i) > 0.0) CHECK(pa.pi_tilde(m, i) == doctest::Approx(0.6 / wa.x(m, i)).epsilon(1e-14));
  WealthPath back = simulate_wealth(Strategy::from_fraction_process(pa.pi_tilde, WealthScheme::euler), gbm(), b);
  for (std::size_t m = 0; m < 2000; ++m)
    for (std::size_t i = 0; i <= 40; ++i)
      if (wa.x(m, i) > 0.0) worst = std::max(worst, std::abs(back.x(m, i) - wa.x(m, i)) / wa.x(m, i));
  CHECK(worst <= 1e-12);
}

TEST_CASE("amount strategies absorb at zero and flag the fraction process") {
  MarketParams m = MarketParams::make({0.0}, {1.0}, 1, 0.2);
  PathBatch b = gen_brownian(TimeGrid(1.0, 50), 2000, 1, 6);
  Strategy s = Strategy::amount({1.0});
  WealthPath w = simulate_wealth(s, m, b);
  CHECK(min_of(w.x) >= 0.0);
  CHECK(w.absorbed_nodes > 0);
  for (std::size_t p = 0; p < 2000; ++p)
    for (std::size_t i = 0; i < 50; ++i)
      if (w.x(p, i) == 0.0) CHECK(w.x(p, i + 1) == 0.0);
  FractionProcess f = to_fraction_process(s, w, m, b);
  CHECK(f.flagged_nodes > 0);
}

TEST_CASE("discounted wealth is a supermartingale under the pricing measure") {
  MarketParams m = gbm();
  PathBatch b = gen_brownian(TimeGrid(1.0, 50), 100000, 1, 7);
  std::vector<double> mt(m.theta);
  for (double& v : mt) v = -v;
  ProcessPath z = stochastic_exponential(ProcessPath::constant(b.paths(), 50, mt), b);
  for (Strategy s : {Strategy::fraction({1.5}), Strategy::amount({2.0})}) {
    WealthPath w = simulate_wealth(s, m, b);
    std::vector<double> v = w.terminal();
    for (std::size_t p = 0; p < v.size(); ++p) v[p] *= z(p, 50);
    MeanEstimate e = mean_and_se(v);
    CHECK(e.mean <= m.x0 + 3.0 * e.std_error);
  }
}

TEST_CASE("feedback table interpolates bilinearly") {
  FeedbackTable t{{0.0, 1.0}, {0.0, 2.0}, {0.0, 2.0, 1.0, 3.0}};
  CHECK(t.lookup(0.5, 1.0, 1)[0] == doctest::Approx(1.5));
  CHECK(t.lookup(-1.0, 5.0, 1)[0] == doctest::Approx(2.0));
  Strategy s = Strategy::feedback(t, 1);
  PathBatch b = gen_brownian(TimeGrid(1.0, 10), 100, 1, 8);
  WealthPath w = simulate_wealth(s, gbm(), b);
  CHECK(min_of(w.x) >= 0.0);
}

TEST_CASE("dimension mismatch is rejected") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 4), 10, 1, 2);
  CHECK_THROWS_AS(simulate_wealth(Strategy::fraction({1.0, 1.0}), gbm(), b), Error);
}
