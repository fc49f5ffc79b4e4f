#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rbu/bsde.hpp"
#include "rbu/error.hpp"

using namespace rbu;

namespace {

MarketParams gbm() { return MarketParams::make({0.05}, {0.2}, 1, 1.0); }

SolverConfig brownian_solver() {
  SolverConfig c;
  c.basis.state = StateKind::brownian;
  return c;
}

struct Case {
  PathBatch paths;
  WealthPath wealth;
};

Case fraction_case(double f, std::size_t N, std::size_t M, std::uint64_t seed) {
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, seed);
  WealthPath w = simulate_wealth(Strategy::fraction({f}), gbm(), p);
  return {std::move(p), std::move(w)};
}

double lognormal_log_mean(double f) { return f * 0.05 - 0.5 * f * f * 0.04; }

}  // namespace

TEST_CASE("zero generator with a constant terminal") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 20), 5000, 1, 1);
  std::vector<double> H(p.paths(), 1.7);
  BsdeSolution s = solve_backward(Generator::zero(), H, nullptr, p, brownian_solver());
  double ye = 0.0, ze = 0.0;
  for (double v : s.y.raw()) ye = std::max(ye, std::abs(v - 1.7));
  for (double v : s.z.raw()) ze = std::max(ze, std::abs(v));
  CHECK(ye <= 1e-10);
  CHECK(ze <= 1e-10);
  CHECK(s.y0 == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("zero generator with the terminal Brownian value") {
  const std::size_t N = 50;
  PathBatch p = gen_brownian(TimeGrid(1.0, N), 100000, 1, 2);
  std::vector<double> H(p.paths());
  for (std::size_t m = 0; m < H.size(); ++m) H[m] = p.w(m, N);
  BsdeSolution s = solve_backward(Generator::zero(), H, nullptr, p, brownian_solver());
  CHECK(std::abs(s.y0) <= 3.0 * s.y0_se + 1e-12);
  // dY = -Z dW with Y_T = W_T, so the control is identically -1.
  double dev = 0.0;
  for (double v : s.z.raw()) dev += std::abs(v + 1.0);
  CHECK(dev / static_cast<double>(s.z.raw().size()) <= 0.05);
  CHECK(s.y(0, N) == H[0]);
}

TEST_CASE("log certainty equivalent of fraction-one wealth") {
  Case c = fraction_case(1.0, 100, 50000, 3);
  BsdeSolution s = solve_backward(make_ce_generator(Utility::log()), c.wealth.terminal(), &c.wealth, c.paths);
  const double oracle = std::exp(lognormal_log_mean(1.0));
  CHECK(oracle == doctest::Approx(std::exp(0.03)));
  CHECK(std::abs(s.y0 - oracle) / oracle <= 0.01);
  CHECK(s.y0_se > 0.0);
  CHECK(s.floor_hits == 0);
}

TEST_CASE("solver agrees with the certainty-equivalent oracle") {
  Case c = fraction_case(1.5, 50, 40000, 4);
  for (Utility u : {Utility::log(), Utility::power(0.2)}) {
    BsdeSolution s = solve_backward(make_ce_generator(u), c.wealth.terminal(), &c.wealth, c.paths);
    CeOracle o = certainty_equivalent_oracle(u, c.wealth.terminal(), &c.wealth, c.paths);
    CHECK(std::abs(s.y0 - o.y0) / o.y0 <= 0.01);
  }
}

TEST_CASE("certainty-equivalent oracle") {
  Case c = fraction_case(1.2, 20, 100000, 5);
  std::vector<double> cst(c.paths.paths(), 2.5);
  CeOracle k = certainty_equivalent_oracle(Utility::log(), cst, &c.wealth, c.paths);
  for (std::size_t m = 0; m < 100; ++m)
    for (std::size_t i = 0; i <= 20; ++i) CHECK(k.y(m, i) == doctest::Approx(2.5).epsilon(1e-12));

  CeOracle lg = certainty_equivalent_oracle(Utility::log(), c.wealth.terminal(), &c.wealth, c.paths);
  const double lm = lognormal_log_mean(1.2);
  CHECK(std::abs(lg.y0 - std::exp(lm)) <= 3.0 * lg.y0_se);
  for (std::size_t m = 0; m < 100; ++m) CHECK(lg.y(m, 20) == c.wealth.terminal()[m]);

  const double r = 0.2, f = 1.2, s2 = f * f * 0.04;
  // E[H^r] for log H ~ N(lm, s2)
  const double power_oracle = std::exp(lm + 0.5 * r * s2);
  CeOracle pw = certainty_equivalent_oracle(Utility::power(r), c.wealth.terminal(), &c.wealth, c.paths);
  CHECK(std::abs(pw.y0 - power_oracle) <= 3.0 * pw.y0_se);

  MeanEstimate v = certainty_equivalent_value(Utility::log(), c.wealth.terminal());
  CHECK(v.mean == lg.y0);

  std::vector<double> neg(c.paths.paths(), -1.0);
  CHECK_THROWS_AS(certainty_equivalent_oracle(Utility::log(), neg, &c.wealth, c.paths), Error);
}

TEST_CASE("linear dual representation") {
  const std::size_t N = 200, M = 20000;
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 6);
  std::vector<double> H(M);
  for (std::size_t m = 0; m < M; ++m) H[m] = 1.0 + 0.1 * p.w(m, N) * p.w(m, N);
  const double meanH = mean_and_se(H).mean;

  ModelPair zero = ModelPair::constant(0.0, {0.0}, M, N);
  LinearRepValue a = solve_linear_dual_rep(zero, ProcessPath::zeros(M, N, 1), H, p);
  CHECK(a.value.mean == doctest::Approx(meanH).epsilon(1e-12));

  const double b = 0.5, c = 0.3, T = 1.0, dt = T / N;
  ModelPair disc = ModelPair::constant(b, {0.0}, M, N);
  LinearRepValue v = solve_linear_dual_rep(disc, ProcessPath::constant(M, N, {c}), H, p);
  const double oracle = std::exp(-b * T) * meanH + c * (1.0 - std::exp(-b * T)) / b;
  CHECK(std::abs(v.value.mean - oracle) <= c * b * T * dt);

  ModelPair shift = ModelPair::constant(0.0, {0.4}, M, N);
  LinearRepValue w = solve_linear_dual_rep(shift, ProcessPath::zeros(M, N, 1), H, p);
  CHECK(std::abs(w.weight.mean - 1.0) <= 3.0 * w.weight.std_error);
}

TEST_CASE("subsolution residual") {
  const std::size_t N = 20, M = 500;
  PathBatch p = gen_brownian(TimeGrid(1.0, N), M, 1, 7);
  std::vector<double> H(M);
  for (std::size_t m = 0; m < M; ++m) H[m] = 1.0 + std::abs(p.w(m, N));
  Generator g = make_ce_generator(Utility::log());

  ProcessPath y = ProcessPath::constant(M, N + 1, {1.0});
  SubsolutionResidual r = subsolution_residual(y, ProcessPath::zeros(M, N, 1), g, H, p, 1);
  CHECK(r.max_violation == 0.0);
  CHECK(r.terminal_violation == 0.0);

  const double top = *std::max_element(H.begin(), H.end()) + 1.0;
  SubsolutionResidual t = subsolution_residual(ProcessPath::constant(M, N + 1, {top}), ProcessPath::zeros(M, N, 1), g,
                                               H, p, 1);
  const double low = *std::min_element(H.begin(), H.end());
  CHECK(t.terminal_violation == doctest::Approx(top - low).epsilon(1e-12));
}

TEST_CASE("solver output is a subsolution up to the discretization error") {
  const std::size_t N = 50;
  Case c = fraction_case(1.0, N, 20000, 8);
  Generator g = make_ce_generator(Utility::log());
  BsdeSolution s = solve_backward(g, c.wealth.terminal(), &c.wealth, c.paths);
  SubsolutionResidual r = subsolution_residual(s.y, s.z, g, s.terminal, c.paths);
  // Lipschitz bound of |z|^2/(2y) on the visited region, in the y direction, at typical values.
  const double L = 0.5 * 0.2 * 0.2;
  CHECK(r.terminal_violation == 0.0);
  CHECK(r.mean_violation <= 5.0 * c.paths.grid().dt() * std::max(L, 1.0));
}

TEST_CASE("admissibility drift") {
  Case c = fraction_case(1.0, 25, 5000, 9);
  Utility lu = Utility::log();
  BsdeSolution s = solve_backward(make_ce_generator(lu), c.wealth.terminal(), &c.wealth, c.paths);
  DriftStats d = admissibility_drift(lu, make_ce_generator(lu), s);
  CHECK(d.max_abs <= 1e-12);
  CHECK(d.nodes == 25 * 5000);

  Utility eu = Utility::exponential(0.05);
  Generator gh = transform_g_expectation(Generator::norm(1.0), eu);
  BsdeSolution sh = solve_backward(gh, c.wealth.terminal(), &c.wealth, c.paths);
  CHECK(admissibility_drift(eu, gh, sh).min >= 0.0);

  BsdeSolution s0 = solve_backward(Generator::zero(), c.wealth.terminal(), &c.wealth, c.paths);
  DriftStats d0 = admissibility_drift(lu, Generator::zero(), s0);
  CHECK(d0.min < 0.0);
  CHECK(d0.violation_fraction > 0.5);
}

TEST_CASE("comparison and concavity in the terminal value") {
  Case c = fraction_case(1.0, 25, 20000, 10);
  Generator g = make_ce_generator(Utility::log());
  std::vector<double> H1 = c.wealth.terminal(), H2(H1.size()), mix(H1.size());
  for (std::size_t m = 0; m < H1.size(); ++m) {
    H2[m] = 0.5 + 0.5 * H1[m] * H1[m];
    mix[m] = 0.3 * H1[m] + 0.7 * H2[m];
  }
  std::vector<double> up(H1);
  for (double& v : up) v += 0.05 * std::min(v, 1.0);
  BsdeSolution a = solve_backward(g, H1, &c.wealth, c.paths);
  BsdeSolution b = solve_backward(g, up, &c.wealth, c.paths);
  CHECK(a.y0 <= b.y0 + 3.0 * std::hypot(a.y0_se, b.y0_se));

  MeanEstimate v1 = certainty_equivalent_value(Utility::log(), H1), v2 = certainty_equivalent_value(Utility::log(), H2),
               vm = certainty_equivalent_value(Utility::log(), mix);
  CHECK(vm.mean >= 0.3 * v1.mean + 0.7 * v2.mean - 1e-12);
  BsdeSolution s1 = solve_backward(g, H1, &c.wealth, c.paths), s2 = solve_backward(g, H2, &c.wealth, c.paths),
               sm = solve_backward(g, mix, &c.wealth, c.paths);
  CHECK(sm.y0 >= 0.3 * s1.y0 + 0.7 * s2.y0 - 3.0 * sm.y0_se);
}

TEST_CASE("monotone stability in the endowment") {
  Case c = fraction_case(1.0, 25, 20000, 11);
  Generator g = make_ce_generator(Utility::log());
  BsdeSolution base = solve_backward(g, c.wealth.terminal(), &c.wealth, c.paths);
  double prev = INFINITY;
  for (int n = 1; n <= 10; ++n) {
    std::vector<double> H = c.wealth.terminal();
    for (double& v : H) v += 1.0 / n;
    BsdeSolution s = solve_backward(g, H, &c.wealth, c.paths);
    CHECK(s.y0 <= prev + 3.0 * s.y0_se);
    CHECK(s.y0 > base.y0);
    prev = s.y0;
  }
  CHECK(prev - base.y0 <= 0.11);
}

TEST_CASE("generator stability for decreasing coefficients") {
  Case c = fraction_case(1.0, 25, 20000, 12);
  double prev = -INFINITY;
  for (int n = 1; n <= 8; ++n) {
    BsdeSolution s = solve_backward(Generator::ratio_quadratic(1.0 + 1.0 / n), c.wealth.terminal(), &c.wealth, c.paths);
    CHECK(s.y0 >= prev);
    prev = s.y0;
  }
  BsdeSolution lim = solve_backward(Generator::ratio_quadratic(1.0), c.wealth.terminal(), &c.wealth, c.paths);
  CHECK(lim.y0 >= prev);
  CHECK(lim.y0 - prev <= 0.01 * lim.y0);
}

TEST_CASE("infinite generator on the visited region is a domain violation") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 5), 200, 1, 13);
  std::vector<double> H(200);
  for (std::size_t m = 0; m < 200; ++m) H[m] = p.w(m, 5);
  GeneratorFlags f;
  Generator g = Generator::custom("blowup", [](double y, std::span<const double>) { return y < 0 ? INFINITY : 0.0; },
                                  false, f);
  try {
    solve_backward(g, H, nullptr, p, brownian_solver());
    FAIL("expected a domain violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain_violation);
  }
}

TEST_CASE("solution summary csv") {
  PathBatch p = gen_brownian(TimeGrid(1.0, 4), 100, 1, 14);
  std::vector<double> H(100, 1.0);
  BsdeSolution s = solve_backward(Generator::zero(), H, nullptr, p, brownian_solver());
  std::string csv = solution_csv(s, p.grid());
  CHECK(csv.rfind("t,y_mean,y_sd,z0_mean", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
