#include "rbu/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "rbu/error.hpp"

namespace rbu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

double feasibility_tol(double beta, double qq) {
  return 1e-12 * std::max({1.0, std::abs(beta), qq});
}

void check_utility_slope(const Utility& u, const char* where) {
  for (int k = 0; k < 64; ++k) {
    double y = std::pow(10.0, -3.0 + 5.0 * k / 63.0);
    double d = u.derivative(y);
    if (!std::isfinite(d) || d < 1e-12)
      fail(ErrorKind::invalid_argument, where, "u' vanishes or is not finite at y=" + std::to_string(y));
  }
}

// Maximize f on [a, b] assuming unimodality; returns the best point seen.
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double x0, double f0, int iters = 80) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double bx = x0, bf = f0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc > bf) bf = fc, bx = c;
    if (fd > bf) bf = fd, bx = d;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  if (fc > bf) bf = fc, bx = c;
  if (fd > bf) bf = fd, bx = d;
  return {bx, bf};
}

std::vector<double> symmetric_grid(double half_width, std::size_t density) {
  std::size_t n = density | 1u;  // odd so that 0 is a node
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = -half_width + 2.0 * half_width * static_cast<double>(k) / (n - 1);
  g[n / 2] = 0.0;
  return g;
}

struct InnerResult {
  double value;
  std::vector<double> z;
};

// sup_z q.z - g(y, z) over the cube |z_j| <= z_max.
InnerResult inner_sup(const Generator& g, double y, std::span<const double> q, double z_max, std::size_t density) {
  const std::size_t d = q.size();
  auto f = [&](std::span<const double> z) {
    double gv = g(y, z);
    if (std::isnan(gv) || gv == kInf) return -kInf;
    return dot(q, z) - gv;
  };
  const std::size_t coarse = d == 1 ? density : std::max<std::size_t>(9, density / (2 * (d - 1)));
  auto axis = symmetric_grid(z_max, coarse);
  const double step = axis.size() > 1 ? axis[1] - axis[0] : z_max;

  std::vector<double> z(d, 0.0), best(d, 0.0);
  double best_v = f(best);
  std::vector<std::size_t> idx(d, 0);
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= axis.size();
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t r = c;
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = axis[r % axis.size()];
      r /= axis.size();
    }
    double v = f(z);
    if (v > best_v) best_v = v, best = z;
  }

  const int cycles = d == 1 ? 1 : 12;
  for (int cyc = 0; cyc < cycles; ++cyc) {
    for (std::size_t j = 0; j < d; ++j) {
      z = best;
      double lo = d == 1 || cyc == 0 ? std::max(-z_max, best[j] - step) : -z_max;
      double hi = d == 1 || cyc == 0 ? std::min(z_max, best[j] + step) : z_max;
      auto line = [&](double t) {
        z[j] = t;
        return f(z);
      };
      auto [x, v] = golden_max(line, lo, hi, best[j], best_v);
      if (v > best_v) best_v = v, best[j] = x;
    }
  }
  return {best_v, best};
}

}  // namespace

Generator::Generator(GeneratorKind kind, std::string name, EvalFn eval, bool strict_domain, GeneratorFlags claimed,
                     ConjugateFn conjugate, SubgradientFn subgradient)
    : kind_(kind),
      name_(std::move(name)),
      eval_(std::move(eval)),
      strict_domain_(strict_domain),
      claimed_(claimed),
      conjugate_(std::move(conjugate)),
      subgradient_(std::move(subgradient)) {
  require(static_cast<bool>(eval_), "generators.make", "generator needs an evaluator");
}

Generator Generator::zero() {
  GeneratorFlags f{true, true, true, true, false, true};
  Generator g(
      GeneratorKind::zero, "zero", [](double, std::span<const double>) { return 0.0; }, false, f,
      [](double beta, std::span<const double> q) {
        if (beta <= 0.0 && all_zero(q)) return ConjugateValue{true, 0.0, std::nullopt, true};
        return ConjugateValue::infinite(true);
      },
      [](double, std::span<const double> z) { return Subgradient{0.0, std::vector<double>(z.size(), 0.0), true}; });
  return g;
}

Generator Generator::quadratic(double c) {
  require(c > 0.0 && std::isfinite(c), "generators.quadratic", "coefficient must be positive");
  GeneratorFlags f{true, true, true, true, false, true};
  Generator g(
      GeneratorKind::quadratic, "quadratic(" + std::to_string(c) + ")",
      [c](double, std::span<const double> z) { return 0.5 * c * norm2(z); }, false, f,
      [c](double beta, std::span<const double> q) {
        if (beta > 0.0) return ConjugateValue::infinite(true);
        Point p{0.0, std::vector<double>(q.begin(), q.end())};
        for (double& x : p.z) x /= c;
        return ConjugateValue{true, norm2(q) / (2.0 * c), p, true};
      },
      [c](double, std::span<const double> z) {
        Subgradient s{0.0, std::vector<double>(z.begin(), z.end()), true};
        for (double& x : s.q) x *= c;
        return s;
      });
  g.coefficient_ = c;
  return g;
}

Generator Generator::ratio_quadratic(double c) {
  require(c > 0.0 && std::isfinite(c), "generators.ratio_quadratic", "coefficient must be positive");
  GeneratorFlags f{true, true, true, true, false, false};
  Generator g(
      GeneratorKind::ratio_quadratic, "ratio_quadratic(" + std::to_string(c) + ")",
      [c](double y, std::span<const double> z) {
        double zz = norm2(z);
        if (zz == 0.0) return 0.0;
        if (y <= 0.0) return kInf;
        return 0.5 * c * zz / y;
      },
      true, f,
      [c](double beta, std::span<const double> q) {
        double qq = norm2(q);
        if (beta + qq / (2.0 * c) <= feasibility_tol(beta, qq)) return ConjugateValue{true, 0.0, std::nullopt, true};
        return ConjugateValue::infinite(true);
      },
      [c](double y, std::span<const double> z) {
        if (!(y > 0.0)) fail(ErrorKind::domain_violation, "generators.subgradient", "y must be positive");
        Subgradient s{0.0, std::vector<double>(z.begin(), z.end()), true};
        for (double& x : s.q) x *= c / y;
        s.beta = -norm2(s.q) / (2.0 * c);
        return s;
      });
  g.coefficient_ = c;
  return g;
}

Generator Generator::norm(double k) {
  require(k >= 0.0 && std::isfinite(k), "generators.norm", "coefficient must be nonnegative");
  GeneratorFlags f{true, true, true, true, false, true};
  Generator g(
      GeneratorKind::norm, "norm(" + std::to_string(k) + ")",
      [k](double, std::span<const double> z) { return k * std::sqrt(norm2(z)); }, false, f,
      [k](double beta, std::span<const double> q) {
        double nq = std::sqrt(norm2(q));
        if (beta <= 0.0 && nq <= k * (1.0 + 1e-12)) return ConjugateValue{true, 0.0, std::nullopt, true};
        return ConjugateValue::infinite(true);
      },
      [k](double, std::span<const double> z) {
        Subgradient s{0.0, std::vector<double>(z.size(), 0.0), true};
        double nz = std::sqrt(norm2(z));
        if (nz > 0.0)
          for (std::size_t j = 0; j < z.size(); ++j) s.q[j] = k * z[j] / nz;
        return s;
      });
  g.coefficient_ = k;
  return g;
}

Generator Generator::custom(std::string name, EvalFn eval, bool strict_domain, GeneratorFlags claimed) {
  return Generator(GeneratorKind::custom, std::move(name), std::move(eval), strict_domain, claimed);
}

Generator make_ce_generator(const Utility& utility) {
  check_utility_slope(utility, "generators.make_ce_generator");
  Generator base = [&] {
    switch (utility.kind()) {
      case UtilityKind::log:
        return Generator::ratio_quadratic(1.0);
      case UtilityKind::power:
        return Generator::ratio_quadratic(1.0 - utility.r());
      case UtilityKind::exponential:
        break;
    }
    return Generator::quadratic(utility.r());
  }();
  GeneratorFlags f = base.claimed();
  f.adm = true;
  Utility u = utility;
  // Evaluate through the utility so the generator is literally -u''/(2u') |z|^2.
  auto eval = [u](double y, std::span<const double> z) {
    double zz = norm2(z);
    if (zz == 0.0) return 0.0;
    if (!u.in_domain(y)) return kInf;
    return 0.5 * u.absolute_risk_aversion(y) * zz;
  };
  Generator g(GeneratorKind::certainty_equivalent, "ce(" + utility.name() + ")", eval, utility.strict_domain(), f,
              base.analytic_conjugate(), base.analytic_subgradient());
  g.coefficient_ = base.coefficient();
  return g;
}

Generator transform_g_expectation(const Generator& base, const Utility& utility) {
  check_utility_slope(utility, "generators.transform_g_expectation");
  if (base.kind() == GeneratorKind::zero) {
    Generator g = make_ce_generator(utility);
    g.kind_ = GeneratorKind::g_expectation;
    g.name_ = "g_expectation(zero, " + utility.name() + ")";
    return g;
  }
  Utility u = utility;
  Generator b = base;
  auto eval = [u, b](double y, std::span<const double> z) {
    double zz = norm2(z);
    if (!u.in_domain(y)) return zz == 0.0 ? 0.0 : kInf;
    double up = u.derivative(y);
    std::vector<double> zs(z.begin(), z.end());
    for (double& x : zs) x *= up;
    return b(u.value(y), zs) / up + 0.5 * u.absolute_risk_aversion(y) * zz;
  };
  GeneratorFlags f = base.claimed();
  f.adm = base.claimed().pos;
  f.qg = base.claimed().qg && utility.kind() == UtilityKind::exponential;
  std::string name = "g_expectation(" + base.name() + ", " + utility.name() + ")";

  if (base.kind() == GeneratorKind::norm && utility.kind() == UtilityKind::exponential) {
    double k = base.coefficient(), r = utility.r();
    auto conj = [k, r](double beta, std::span<const double> q) {
      if (beta > 0.0) return ConjugateValue::infinite(true);
      double excess = std::max(std::sqrt(norm2(q)) - k, 0.0);
      return ConjugateValue{true, excess * excess / (2.0 * r), std::nullopt, true};
    };
    auto sub = [k, r](double, std::span<const double> z) {
      Subgradient s{0.0, std::vector<double>(z.size(), 0.0), true};
      double nz = std::sqrt(norm2(z));
      if (nz > 0.0)
        for (std::size_t j = 0; j < z.size(); ++j) s.q[j] = k * z[j] / nz + r * z[j];
      return s;
    };
    Generator g(GeneratorKind::g_expectation, name, eval, false, f, conj, sub);
    g.coefficient_ = k;
    return g;
  }
  f.conv = f.conv && utility.kind() == UtilityKind::exponential;
  return Generator(GeneratorKind::g_expectation, name, eval, utility.strict_domain(), f);
}

ConjugateValue conjugate_on_box(const Generator& g, double beta, std::span<const double> q, const SearchBox& box) {
  require(box.y_hi > box.y_lo && box.y_lo > 0.0 && box.z_max > 0.0 && box.density >= 4, "generators.conjugate",
          "search box is degenerate");
  std::vector<double> ys;
  if (!g.strict_domain()) ys.push_back(0.0);
  const double llo = std::log(box.y_lo), lhi = std::log(box.y_hi);
  for (std::size_t k = 0; k < box.density; ++k)
    ys.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(k) / (box.density - 1)));

  std::vector<double> best_z;
  auto phi = [&](double y) {
    auto in = inner_sup(g, y, q, box.z_max, box.density);
    return std::make_pair(beta * y + in.value, std::move(in.z));
  };
  std::size_t best_k = 0;
  double best_v = -kInf, best_y = ys[0];
  for (std::size_t k = 0; k < ys.size(); ++k) {
    auto [v, z] = phi(ys[k]);
    if (v > best_v) best_v = v, best_k = k, best_y = ys[k], best_z = std::move(z);
  }
  double lo = ys[best_k > 0 ? best_k - 1 : 0];
  double hi = ys[std::min(best_k + 1, ys.size() - 1)];
  if (hi > lo) {
    auto [y, v] = golden_max([&](double y) { return phi(y).first; }, lo, hi, best_y, best_v);
    if (v > best_v) {
      best_v = v;
      best_y = y;
      best_z = phi(y).second;
    }
  }
  ConjugateValue out;
  out.finite = std::isfinite(best_v);
  out.value = out.finite ? best_v : 0.0;
  if (out.finite) out.argmax = Point{best_y, best_z};
  return out;
}

ConjugateValue conjugate_brute_force(const Generator& g, double beta, std::span<const double> q,
                                     const SearchBox& box) {
  ConjugateValue small = conjugate_on_box(g, beta, q, box);
  SearchBox wide = box;
  wide.y_hi *= 2.0;
  wide.z_max *= 2.0;
  ConjugateValue large = conjugate_on_box(g, beta, q, wide);
  if (!small.finite || !large.finite) return ConjugateValue::infinite(false);
  double growth = large.value - small.value;
  if (growth > std::max(0.01 * std::abs(small.value), 1e-9)) return ConjugateValue::infinite(false);
  return large;
}

ConjugateValue conjugate(const Generator& g, double beta, std::span<const double> q, const SearchBox& box) {
  if (g.has_analytic_conjugate()) return g.analytic_conjugate()(beta, q);
  return conjugate_brute_force(g, beta, q, box);
}

Subgradient subgradient(const Generator& g, double y, std::span<const double> z) {
  if (g.strict_domain() ? !(y > 0.0) : !(y >= 0.0))
    fail(ErrorKind::domain_violation, "generators.subgradient", "y outside the generator domain");
  if (g.has_analytic_subgradient()) return g.analytic_subgradient()(y, z);
  if (all_zero(z) && g.claimed().nor && g.claimed().pos)
    return Subgradient{0.0, std::vector<double>(z.size(), 0.0), true};

  std::vector<double> x(z.begin(), z.end());
  auto partial = [&](auto&& f, double x0, double lower, double& out) {
    double h = 1e-5 * std::max(1.0, std::abs(x0));
    bool two_sided = x0 - h > lower;
    auto jump_at = [&](double s, double& central) {
      double f0 = f(x0), fp = f(x0 + s);
      if (!two_sided) {
        central = (fp - f0) / s;
        return 0.0;
      }
      double fm = f(x0 - s);
      central = (fp - fm) / (2.0 * s);
      return (fp - f0) / s - (f0 - fm) / s;
    };
    double c1 = 0.0, c2 = 0.0;
    double j1 = jump_at(h, c1);
    double j2 = jump_at(h / 10.0, c2);
    if (std::abs(j2) > 0.5 * std::abs(j1) && std::abs(j2) > 1e-6 * (1.0 + std::abs(c2)))
      fail(ErrorKind::nonsmooth_point, "generators.subgradient", "generator is not differentiable here");
    out = c2;
  };
  Subgradient s{0.0, std::vector<double>(z.size(), 0.0), false};
  partial([&](double t) { return g(t, x); }, y, 0.0, s.beta);
  for (std::size_t j = 0; j < z.size(); ++j) {
    partial(
        [&](double t) {
          double keep = x[j];
          x[j] = t;
          double v = g(y, x);
          x[j] = keep;
          return v;
        },
        z[j], -kInf, s.q[j]);
  }
  return s;
}

double fenchel_young_gap(const Generator& g, double y, std::span<const double> z, double beta,
                         std::span<const double> q, const SearchBox& box) {
  ConjugateValue c = conjugate(g, beta, q, box);
  if (!c.finite) fail(ErrorKind::infeasible_model, "generators.fenchel_young_gap", "conjugate is infinite");
  return beta * y + dot(q, z) - g(y, z) - c.value;
}

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::skipped:
      return "skipped";
  }
  return "unknown";
}

const ConditionCheck& ConditionReport::at(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  fail(ErrorKind::invalid_argument, "generators.report", "no check named " + name);
}

namespace {

struct Sampler {
  const Generator& g;
  const SampleGrid& grid;
  std::vector<double> ys;
  std::vector<double> zs;
  std::size_t total = 0;

  Sampler(const Generator& gen, const SampleGrid& sg) : g(gen), grid(sg) {
    std::size_t n = std::max<std::size_t>(2, sg.points);
    for (std::size_t k = 0; k < n; ++k)
      ys.push_back(sg.y_lo + (sg.y_hi - sg.y_lo) * static_cast<double>(k) / (n - 1));
    zs = symmetric_grid(sg.z_max, sg.dim == 1 ? n : std::max<std::size_t>(9, n / 4));
    total = ys.size();
    for (std::size_t j = 0; j < sg.dim; ++j) total *= zs.size();
  }

  Point point(std::size_t c) const {
    Point p;
    p.y = ys[c % ys.size()];
    c /= ys.size();
    p.z.resize(grid.dim);
    for (std::size_t j = 0; j < grid.dim; ++j) {
      p.z[j] = zs[c % zs.size()];
      c /= zs.size();
    }
    return p;
  }
};

double qg_sup(const Generator& g, double y_lo, double y_hi, double z_max, std::size_t dim, std::size_t points) {
  SampleGrid sg;
  sg.y_lo = y_lo;
  sg.y_hi = y_hi;
  sg.z_max = z_max;
  sg.dim = dim;
  sg.points = points;
  Sampler s(g, sg);
  // log-spaced y so the lower edge is resolved
  for (std::size_t k = 0; k < s.ys.size(); ++k)
    s.ys[k] = std::exp(std::log(y_lo) + (std::log(y_hi) - std::log(y_lo)) * k / (s.ys.size() - 1));
  double sup = 0.0;
  for (std::size_t c = 0; c < s.total; ++c) {
    Point p = s.point(c);
    double v = g(p.y, p.z) / (1.0 + std::abs(p.y) + norm2(p.z));
    if (std::isnan(v)) continue;
    sup = std::max(sup, v);
  }
  return sup;
}

}  // namespace

ConditionReport verify_conditions(const Generator& g, const Utility* utility, const SampleGrid& grid) {
  require(grid.y_hi > grid.y_lo && grid.z_max > 0.0 && grid.dim >= 1, "generators.verify_conditions",
          "sample grid is degenerate");
  require(g.strict_domain() ? grid.y_lo > 0.0 : grid.y_lo >= 0.0, "generators.verify_conditions",
          "sample grid leaves the generator domain");
  Sampler s(g, grid);
  ConditionReport rep;
  const GeneratorFlags& cl = g.claimed();
  const double tol = 1e-10;

  // Nor
  {
    ConditionCheck c{"Nor", cl.nor, CheckStatus::pass, {}, 0.0, ""};
    std::vector<double> zero(grid.dim, 0.0);
    c.worst_point = Point{s.ys[0], zero};
    for (double y : s.ys) {
      double v = g(y, zero);
      double a = std::isnan(v) ? kInf : std::abs(v);
      if (a > c.worst_value) c.worst_value = a, c.worst_point = Point{y, zero};
    }
    if (c.worst_value > 1e-12) c.status = CheckStatus::fail;
    rep.checks.push_back(c);
  }
  // Pos
  {
    ConditionCheck c{"Pos", cl.pos, CheckStatus::pass, {}, kInf, ""};
    for (std::size_t k = 0; k < s.total; ++k) {
      Point p = s.point(k);
      double v = g(p.y, p.z);
      if (std::isnan(v)) v = -kInf;
      if (v < c.worst_value) c.worst_value = v, c.worst_point = p;
    }
    if (c.worst_value < -1e-12) c.status = CheckStatus::fail;
    rep.checks.push_back(c);
  }
  // Conv: midpoint inequality on neighbouring grid pairs and random pairs.
  {
    ConditionCheck c{"Conv", cl.conv, CheckStatus::pass, {}, 0.0, ""};
    auto test_pair = [&](const Point& a, const Point& b) {
      Point m{0.5 * (a.y + b.y), std::vector<double>(grid.dim)};
      for (std::size_t j = 0; j < grid.dim; ++j) m.z[j] = 0.5 * (a.z[j] + b.z[j]);
      double ga = g(a.y, a.z), gb = g(b.y, b.z), gm = g(m.y, m.z);
      if (!std::isfinite(ga) || !std::isfinite(gb)) return;
      double excess = (gm - 0.5 * (ga + gb)) / (1.0 + std::abs(ga) + std::abs(gb));
      if (std::isnan(excess)) excess = kInf;
      if (excess > c.worst_value) c.worst_value = excess, c.worst_point = m;
    };
    const std::size_t ny = s.ys.size();
    for (std::size_t k = 0; k < s.total; ++k) {
      Point a = s.point(k);
      std::size_t iy = k % ny;
      if (iy + 2 < ny) {
        Point b = a;
        b.y = s.ys[iy + 2];
        test_pair(a, b);
        for (std::size_t j = 0; j < grid.dim; ++j) {
          Point dgn = b;
          dgn.z[j] = -a.z[j];
          test_pair(a, dgn);
        }
      }
    }
    std::mt19937_64 rng(grid.seed);
    std::uniform_real_distribution<double> uy(grid.y_lo, grid.y_hi), uz(-grid.z_max, grid.z_max);
    for (std::size_t k = 0; k < grid.random_pairs; ++k) {
      Point a{uy(rng), std::vector<double>(grid.dim)}, b{uy(rng), std::vector<double>(grid.dim)};
      for (std::size_t j = 0; j < grid.dim; ++j) a.z[j] = uz(rng), b.z[j] = uz(rng);
      test_pair(a, b);
    }
    if (c.worst_value > tol) c.status = CheckStatus::fail;
    rep.checks.push_back(c);
  }
  // Lsc: g(p) <= liminf along small perturbations.
  {
    ConditionCheck c{"Lsc", cl.lsc, CheckStatus::pass, {}, 0.0, ""};
    std::mt19937_64 rng(grid.seed + 1);
    std::normal_distribution<double> n01;
    for (std::size_t k = 0; k < s.total; k += std::max<std::size_t>(1, s.total / 2048)) {
      Point p = s.point(k);
      double gp = g(p.y, p.z);
      if (!std::isfinite(gp)) continue;
      double lim = kInf;
      for (int rep_i = 0; rep_i < 4; ++rep_i) {
        Point e = p;
        double h = 1e-7 * (1.0 + std::abs(p.y));
        e.y = std::max(g.strict_domain() ? 1e-300 : 0.0, p.y + h * n01(rng));
        for (double& x : e.z) x += h * n01(rng);
        lim = std::min(lim, g(e.y, e.z));
      }
      double excess = (gp - lim) / (1.0 + std::abs(gp));
      if (excess > c.worst_value) c.worst_value = excess, c.worst_point = p;
    }
    if (c.worst_value > 1e-4) c.status = CheckStatus::fail;
    rep.checks.push_back(c);
  }
  // Adm
  {
    ConditionCheck c{"Adm", cl.adm, CheckStatus::skipped, {}, 0.0, ""};
    if (utility != nullptr) {
      c.status = CheckStatus::pass;
      c.worst_value = kInf;
      double eq = 0.0;
      for (std::size_t k = 0; k < s.total; ++k) {
        Point p = s.point(k);
        if (!utility->in_domain(p.y)) continue;
        double drift = utility->derivative(p.y) * g(p.y, p.z) + 0.5 * utility->second_derivative(p.y) * norm2(p.z);
        if (std::isnan(drift)) drift = -kInf;
        double scale = 1.0 + utility->derivative(p.y) * std::abs(g(p.y, p.z));
        if (drift / scale < c.worst_value) c.worst_value = drift / scale, c.worst_point = p;
        eq = std::max(eq, std::abs(drift) / scale);
      }
      rep.adm_equality_residual = eq;
      if (c.worst_value < -1e-12) c.status = CheckStatus::fail;
    } else {
      c.note = "no utility supplied";
    }
    rep.checks.push_back(c);
  }
  // Qg: bounded ratio on the box, and stability as the lower y edge shrinks.
  {
    ConditionCheck c{"Qg", cl.qg, CheckStatus::pass, {}, 0.0, ""};
    double lo = std::max(grid.y_lo, 1e-300);
    if (!g.strict_domain() && grid.y_lo == 0.0) lo = 1e-3;
    double base = qg_sup(g, lo, grid.y_hi, grid.z_max, grid.dim, grid.points);
    rep.qg_bound_on_box = base;
    c.worst_value = base;
    c.worst_point = Point{lo, std::vector<double>(grid.dim, grid.z_max)};
    double prev = base;
    bool grows = std::isinf(base);
    for (int k = 1; k <= 3 && !grows; ++k) {
      double shrunk = qg_sup(g, lo * std::pow(10.0, -k), grid.y_hi, grid.z_max, grid.dim, grid.points);
      if (shrunk > 5.0 * prev + 1e-12) {
        grows = true;
        c.worst_value = shrunk;
        c.worst_point = Point{lo * std::pow(10.0, -k), std::vector<double>(grid.dim, grid.z_max)};
      }
      prev = shrunk;
    }
    if (grows) {
      c.status = CheckStatus::fail;
      c.note = "unbounded near y=0; bounded by " + std::to_string(base) + " on y >= " + std::to_string(lo);
    }
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace rbu
