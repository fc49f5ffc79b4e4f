#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"
#include "rbu/stochastic.hpp"

using namespace rbu;

namespace {

MeanEstimate terminal_stats(const ProcessPath& p, std::size_t node) { return mean_and_se(p.node(node)); }

std::vector<double> terminal_w(const PathBatch& b) {
  std::vector<double> w(b.paths());
  for (std::size_t m = 0; m < b.paths(); ++m) w[m] = b.w(m, b.grid().steps());
  return w;
}

}  // namespace

TEST_CASE("time grid endpoints and step") {
  TimeGrid g(2.0, 8);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(8) == 2.0);
  CHECK(g.dt() == doctest::Approx(0.25));
  for (std::size_t i = 0; i < 8; ++i) CHECK(g.time(i + 1) > g.time(i));
  CHECK_THROWS_AS(TimeGrid(0.0, 4), Error);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), Error);
}

TEST_CASE("brownian batch starts at zero and rejects empty shapes") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 1), 1, 1, 42);
  CHECK(b.w(0, 0) == 0.0);
  CHECK(b.w(0, 1) != 0.0);
  CHECK_THROWS_AS(gen_brownian(TimeGrid(1.0, 4), 0, 1, 1), Error);
  CHECK_THROWS_AS(gen_brownian(TimeGrid(1.0, 4), 10, 0, 1), Error);
}

TEST_CASE("brownian terminal variance matches the horizon") {
  const double T = 1.5;
  PathBatch b = gen_brownian(TimeGrid(T, 10), 100000, 1, 7);
  std::vector<double> w = terminal_w(b);
  std::vector<double> sq(w.size());
  for (std::size_t m = 0; m < w.size(); ++m) sq[m] = w[m] * w[m];
  MeanEstimate mean = mean_and_se(w);
  MeanEstimate var = mean_and_se(sq);
  CHECK(std::abs(mean.mean) <= 4.0 * mean.std_error);
  CHECK(std::abs(var.mean - T) <= 3.0 * var.std_error);
}

TEST_CASE("increment means are near zero per component") {
  TimeGrid g(1.0, 20);
  PathBatch b = gen_brownian(g, 20000, 2, 3);
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (std::size_t m = 0; m < b.paths(); ++m)
      for (std::size_t i = 0; i < g.steps(); ++i) s += b.dw(m, i, j);
    const double n = static_cast<double>(b.paths() * g.steps());
    CHECK(std::abs(s / n) <= 4.0 * std::sqrt(g.dt() / n));
  }
}

TEST_CASE("regeneration is bit-identical at any thread count") {
  TimeGrid g(1.0, 16);
  set_thread_count(1);
  PathBatch a = gen_brownian(g, 10000, 2, 99);
  set_thread_count(4);
  PathBatch b = gen_brownian(g, 10000, 2, 99);
  set_thread_count(1);
  REQUIRE(a.raw().size() == b.raw().size());
  CHECK(std::equal(a.raw().begin(), a.raw().end(), b.raw().begin()));
  PathBatch c = gen_brownian(g, 10000, 2, 100);
  CHECK_FALSE(std::equal(a.raw().begin(), a.raw().end(), c.raw().begin()));
}

TEST_CASE("stochastic exponential of zero is one") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 10), 100, 1, 1);
  ProcessPath e = stochastic_exponential(ProcessPath::zeros(100, 10, 1), b);
  CHECK(std::all_of(e.raw().begin(), e.raw().end(), [](double v) { return v == 1.0; }));
}

TEST_CASE("stochastic exponential moments for a constant kernel") {
  const double q = 0.3;
  PathBatch b = gen_brownian(TimeGrid(1.0, 50), 100000, 1, 11);
  ProcessPath e = stochastic_exponential(ProcessPath::constant(b.paths(), 50, {q}), b);
  for (std::size_t m = 0; m < 10; ++m) CHECK(e(m, 0) == 1.0);
  MeanEstimate first = terminal_stats(e, 50);
  CHECK(std::abs(first.mean - 1.0) <= 3.0 * first.std_error);
  std::vector<double> sq = e.node(50);
  for (double& v : sq) v *= v;
  MeanEstimate second = mean_and_se(sq);
  // E[exp(2qW - q^2)] = exp(2q^2 - q^2)
  const double oracle = std::exp(2.0 * q * q - q * q);
  CHECK(std::abs(second.mean - oracle) <= 3.0 * second.std_error);
  CHECK(*std::min_element(e.raw().begin(), e.raw().end()) > 0.0);
}

TEST_CASE("product of exponentials of q and -q is exp of the quadratic variation") {
  TimeGrid g(1.0, 40);
  PathBatch b = gen_brownian(g, 200, 2, 5);
  std::vector<double> qv(b.paths() * 40 * 2), mqv(qv.size());
  for (std::size_t k = 0; k < qv.size(); ++k) {
    qv[k] = 0.3 * std::sin(0.1 * static_cast<double>(k));
    mqv[k] = -qv[k];
  }
  ProcessPath q = ProcessPath::full(b.paths(), 40, 2, qv), mq = ProcessPath::full(b.paths(), 40, 2, mqv);
  ProcessPath a = stochastic_exponential(q, b), c = stochastic_exponential(mq, b);
  for (std::size_t m = 0; m < b.paths(); ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 40; ++i) acc -= (q(m, i, 0) * q(m, i, 0) + q(m, i, 1) * q(m, i, 1)) * g.dt();
    CHECK(a(m, 40) * c(m, 40) == doctest::Approx(std::exp(acc)).epsilon(1e-12));
  }
}

TEST_CASE("girsanov weight normalization and drift shift") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 20), 100000, 1, 21);
  ProcessPath w0 = girsanov_weight(ProcessPath::zeros(b.paths(), 20, 1), b);
  CHECK(std::all_of(w0.raw().begin(), w0.raw().end(), [](double v) { return v == 1.0; }));

  const double q = 0.5;
  ProcessPath w = girsanov_weight(ProcessPath::constant(b.paths(), 20, {q}), b);
  MeanEstimate norm = terminal_stats(w, 20);
  CHECK(std::abs(norm.mean - 1.0) <= 3.0 * norm.std_error);
  std::vector<double> wt = w.node(20), wT = terminal_w(b);
  for (std::size_t m = 0; m < wt.size(); ++m) wt[m] *= wT[m];
  MeanEstimate shifted = mean_and_se(wt);
  CHECK(std::abs(shifted.mean - q * 1.0) <= 3.0 * shifted.std_error);
}

TEST_CASE("girsanov weight overflow is reported") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 4), 100, 1, 2);
  CHECK_THROWS_AS(girsanov_weight(ProcessPath::constant(b.paths(), 4, {1e6}), b), Error);
  try {
    girsanov_weight(ProcessPath::constant(b.paths(), 4, {1e6}), b);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric_overflow);
  }
}

TEST_CASE("shape mismatch is an invalid argument") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 4), 10, 1, 2);
  CHECK_THROWS_AS(stochastic_exponential(ProcessPath::zeros(10, 4, 2), b), Error);
  CHECK_THROWS_AS(stochastic_exponential(ProcessPath::zeros(9, 4, 1), b), Error);
}

TEST_CASE("muckenhoupt: zero theta gives exactly one") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 10), 1000, 1, 3);
  MuckenhouptEstimate e = check_muckenhoupt(ProcessPath::zeros(1000, 10, 1), 2.0, 0, b);
  CHECK(e.estimate == 1.0);
}

TEST_CASE("muckenhoupt: constant theta matches the lognormal moment") {
  const double theta = 0.2, p = 2.0, T = 1.0;
  PathBatch b = gen_brownian(TimeGrid(T, 50), 100000, 1, 8);
  MuckenhouptEstimate e = check_muckenhoupt(ProcessPath::constant(b.paths(), 50, {theta}), p, 0, b);
  // ratio^a = exp(-a theta W_T + a theta^2 T / 2), a = 1/(p-1)
  const double a = 1.0 / (p - 1.0);
  const double oracle = std::exp(0.5 * a * a * theta * theta * T + 0.5 * a * theta * theta * T);
  CHECK(oracle == doctest::Approx(std::exp(0.04)).epsilon(1e-12));
  CHECK(std::abs(e.estimate - oracle) <= 3.0 * e.std_error);
  REQUIRE(e.analytic.has_value());
  CHECK(*e.analytic == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("muckenhoupt: tau at the horizon gives one and the analytic branch decreases in tau") {
  PathBatch b = gen_brownian(TimeGrid(1.0, 10), 1000, 1, 3);
  ProcessPath th = ProcessPath::constant(1000, 10, {0.2});
  CHECK(check_muckenhoupt(th, 2.0, 10, b).estimate == 1.0);
  double prev = INFINITY;
  for (std::size_t tau = 0; tau <= 10; ++tau) {
    double v = *check_muckenhoupt(th, 2.0, tau, b).analytic;
    CHECK(v <= prev);
    prev = v;
  }
  CHECK_THROWS_AS(check_muckenhoupt(th, 1.0, 0, b), Error);
}

TEST_CASE("coarsening keeps every other node of the same paths") {
  PathBatch fine = gen_brownian(TimeGrid(2.0, 8), 50, 2, 21);
  PathBatch coarse = coarsen(fine, 2);
  CHECK(coarse.grid().steps() == 4);
  CHECK(coarse.grid().dt() == doctest::Approx(0.5));
  bool same = true;
  for (std::size_t m = 0; m < 50; ++m)
    for (std::size_t i = 0; i <= 4; ++i)
      for (std::size_t j = 0; j < 2; ++j) same = same && coarse.w(m, i, j) == fine.w(m, 2 * i, j);
  CHECK(same);
  CHECK_THROWS_AS(coarsen(fine, 3), Error);
}
