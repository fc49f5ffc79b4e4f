#include "rbu/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

namespace rbu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string params_text(const std::vector<double>& p) {
  std::ostringstream os;
  os.precision(10);
  os << '[';
  for (std::size_t k = 0; k < p.size(); ++k) os << (k ? "," : "") << p[k];
  os << ']';
  return os.str();
}

std::string family_name(const ModelFamily& f) { return f.kind == ModelFamilyKind::constant ? "constant" : "parabola"; }

}  // namespace

std::vector<double> Endowment::sample(const MarketParams& market, const PathBatch& paths) const {
  const char* where = "duality.endowment";
  if (!(value >= 0.0) || !std::isfinite(value)) fail(ErrorKind::invalid_argument, where, "endowment must be >= 0");
  if (kind == EndowmentKind::constant) return std::vector<double>(paths.paths(), value);
  require(strike >= 0.0 && std::isfinite(strike), where, "put strike must be >= 0");
  std::vector<double> s = stock_terminal(market, paths, stock);
  for (double& x : s) x = value * std::max(strike - x, 0.0);
  return s;
}

PrimalResult primal_value(const Strategy& strategy, const Problem& problem, const PathBatch& paths) {
  const char* where = "duality.primal_value";
  PrimalResult out;
  std::vector<double> xi = problem.endowment.sample(problem.market, paths);
  for (double v : xi)
    if (!(v >= 0.0)) fail(ErrorKind::invalid_argument, where, "endowment must be nonnegative");
  out.wealth = simulate_wealth(strategy, problem.market, paths);
  out.terminal = out.wealth.terminal();
  for (std::size_t m = 0; m < xi.size(); ++m) out.terminal[m] += xi[m];
  out.method = problem.method;
  if (problem.method == PrimalMethod::ce_oracle) {
    if (!problem.utility || problem.g.kind() != GeneratorKind::certainty_equivalent)
      fail(ErrorKind::invalid_argument, where, "the certainty-equivalent oracle needs a certainty-equivalent generator");
    MeanEstimate ce = certainty_equivalent_value(*problem.utility, out.terminal);
    out.value = ce.mean;
    out.std_error = ce.std_error;
    return out;
  }
  const WealthPath* state = problem.solver.basis.state == StateKind::wealth ? &out.wealth : nullptr;
  out.solution = solve_backward(problem.g, out.terminal, state, paths, problem.solver);
  out.value = out.solution->y0;
  out.std_error = out.solution->y0_se;
  return out;
}

DualValue dual_objective(const ModelPair& model, const Generator& g, std::span<const double> terminal,
                         const PathBatch& paths, const SearchBox& box) {
  DualValue out;
  GstarPath gs = conjugate_path(g, model, box);
  if (!gs.feasible) {
    out.feasible = false;
    out.infeasible_nodes = gs.infeasible_nodes;
    out.value.mean = kInf;
    return out;
  }
  LinearRepValue v = solve_linear_dual_rep(model, gs.values, terminal, paths);
  out.value = v.value;
  out.weight = v.weight;
  return out;
}

ModelPair subgradient_model(const BsdeSolution& solution, const Generator& g) {
  const std::size_t M = solution.y.paths(), N = solution.z.nodes(), d = solution.z.dim();
  std::vector<double> beta(M * N), q(M * N * d), gstar(M * N);
  const bool clip = g.strict_domain();
  parallel_chunks(M, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> z(d);
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < N; ++i) {
        double y = solution.y(m, i);
        if (clip) y = std::max(y, g.y_floor());
        double qz = 0.0;
        for (std::size_t j = 0; j < d; ++j) z[j] = solution.z(m, i, j);
        Subgradient s = subgradient(g, y, z);
        beta[i * M + m] = s.beta;
        for (std::size_t j = 0; j < d; ++j) {
          q[(i * M + m) * d + j] = s.q[j];
          qz += s.q[j] * z[j];
        }
        gstar[i * M + m] = g.has_analytic_conjugate() ? 0.0 : s.beta * y + qz - g(y, z);
      }
  });
  ModelPair model;
  model.family = "subgradient_feedback";
  model.beta = ProcessPath::full(M, N, 1, std::move(beta));
  model.q = ProcessPath::full(M, N, d, std::move(q));
  if (g.has_analytic_conjugate()) {
    GstarPath gs = conjugate_path(g, model);
    if (!gs.feasible)
      fail(ErrorKind::numerical, "duality.subgradient_model", "subgradient model left the conjugate domain");
    model.gstar = std::move(gs.values);
  } else {
    model.gstar = ProcessPath::full(M, N, 1, std::move(gstar));
  }
  return model;
}

ModelPair perturb_model(const ModelPair& model, double dbeta, const std::vector<double>& dq) {
  const std::size_t M = model.beta.paths(), N = model.beta.nodes(), d = model.q.dim();
  require(dq.size() == d, "duality.perturb_model", "perturbation has the wrong dimension");
  std::vector<double> beta(M * N), q(M * N * d);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t m = 0; m < M; ++m) {
      beta[i * M + m] = model.beta(m, i) + dbeta;
      for (std::size_t j = 0; j < d; ++j) q[(i * M + m) * d + j] = model.q(m, i, j) + dq[j];
    }
  ModelPair out;
  out.family = model.family + "+perturbed";
  out.params = {dbeta};
  out.params.insert(out.params.end(), dq.begin(), dq.end());
  out.beta = ProcessPath::full(M, N, 1, std::move(beta));
  out.q = ProcessPath::full(M, N, d, std::move(q));
  return out;
}

GapResult close_gap_with_subgradient(const BsdeSolution& solution, const Generator& g, const PathBatch& paths) {
  GapResult out;
  out.model = subgradient_model(solution, g);
  out.dual = dual_objective(out.model, g, solution.terminal, paths);
  out.primal = solution.y0;
  out.primal_se = solution.y0_se;
  out.gap = out.dual.feasible ? std::abs(out.dual.value.mean - out.primal) / std::abs(out.primal) : kInf;
  return out;
}

ModelPair family_model(const ModelFamily& family, const std::vector<double>& params, std::size_t paths,
                       std::size_t steps) {
  if (family.kind == ModelFamilyKind::constant) {
    require(!params.empty(), "duality.family_model", "constant family needs (beta, q)");
    ModelPair m = ModelPair::constant(params[0], std::vector<double>(params.begin() + 1, params.end()), paths, steps);
    m.family = "constant";
    return m;
  }
  require(family.curvature > 0.0, "duality.family_model", "parabola curvature must be positive");
  double qq = 0.0;
  for (double x : params) qq += x * x;
  ModelPair m = ModelPair::constant(-qq / (2.0 * family.curvature) - family.margin, params, paths, steps);
  m.family = "parabola";
  return m;
}

DualSearchResult dual_search(const ModelFamily& family, const Generator& g, std::span<const double> terminal,
                             const PathBatch& paths, const std::vector<ModelPair>& extra, std::size_t budget,
                             const SearchBox& box) {
  const std::size_t M = paths.paths(), N = paths.grid().steps();
  DualSearchResult out;
  std::vector<double> best_params;
  double best = kInf;
  auto record = [&](const std::string& name, const std::vector<double>& params, const DualValue& v) {
    out.rows.push_back({name, params, v.value.mean, v.value.std_error, v.feasible});
    ++out.evaluations;
  };
  auto pts = grid_points(family.box, family.density);
  std::vector<DualValue> vals(pts.size());
  parallel_tasks(pts.size(), [&](std::size_t k) {
    vals[k] = dual_objective(family_model(family, pts[k], M, N), g, terminal, paths, box);
  });
  for (std::size_t k = 0; k < pts.size(); ++k) {
    record(family_name(family), pts[k], vals[k]);
    if (vals[k].feasible && vals[k].value.mean < best) {
      best = vals[k].value.mean;
      best_params = pts[k];
      out.best_value = vals[k];
    }
  }
  if (family.refine && !best_params.empty() && budget > out.evaluations) {
    double step = 0.0;
    for (std::size_t j = 0; j < family.box.dim(); ++j)
      step = std::max(step, (family.box.hi[j] - family.box.lo[j]) / std::max<std::size_t>(family.density, 2));
    if (step > 0.0) {
      auto f = [&](const std::vector<double>& x) {
        DualValue v = dual_objective(family_model(family, x, M, N), g, terminal, paths, box);
        record(family_name(family), x, v);
        return v.feasible ? v.value.mean : kInf;
      };
      OptimResult r = nelder_mead(f, best_params, family.box, step, budget - out.evaluations, 1e-10);
      if (r.value < best) {
        best = r.value;
        best_params = r.x;
        out.best_value = dual_objective(family_model(family, r.x, M, N), g, terminal, paths, box);
      }
    }
  }
  if (!best_params.empty()) out.best = family_model(family, best_params, M, N);
  for (const ModelPair& m : extra) {
    DualValue v = dual_objective(m, g, terminal, paths, box);
    record(m.family, m.params, v);
    if (v.feasible && v.value.mean < best) {
      best = v.value.mean;
      out.best = m;
      out.best_value = v;
    }
  }
  if (!std::isfinite(best)) fail(ErrorKind::infeasible_model, "duality.dual_search", "no feasible model in the family");
  return out;
}

Strategy family_strategy(const StrategyFamily& family, const std::vector<double>& params) {
  switch (family.kind) {
    case StrategyKind::constant_amount:
      return Strategy::amount(params);
    case StrategyKind::constant_fraction:
      return Strategy::fraction(params);
    default:
      break;
  }
  fail(ErrorKind::invalid_argument, "duality.family_strategy", "strategy family must be constant amounts or fractions");
}

StrategySearchResult optimize_strategy(const StrategyFamily& family, const Problem& problem, const PathBatch& paths,
                                       std::size_t budget) {
  StrategySearchResult out;
  auto pts = grid_points(family.box, family.density);
  std::vector<MeanEstimate> vals(pts.size());
  parallel_tasks(pts.size(), [&](std::size_t k) {
    PrimalResult r = primal_value(family_strategy(family, pts[k]), problem, paths);
    vals[k] = {r.value, r.std_error};
  });
  double best = -kInf;
  const char* name = family.kind == StrategyKind::constant_amount ? "amount" : "fraction";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    out.rows.push_back({name, pts[k], vals[k].mean, vals[k].std_error, true});
    if (vals[k].mean > best) {
      best = vals[k].mean;
      out.params = pts[k];
      out.std_error = vals[k].std_error;
    }
  }
  out.evaluations = pts.size();
  if (family.refine && budget > out.evaluations) {
    double step = 0.0;
    for (std::size_t j = 0; j < family.box.dim(); ++j)
      step = std::max(step, (family.box.hi[j] - family.box.lo[j]) / std::max<std::size_t>(family.density - 1, 1));
    if (step > 0.0) {
      auto f = [&](const std::vector<double>& x) {
        PrimalResult r = primal_value(family_strategy(family, x), problem, paths);
        out.rows.push_back({name, x, r.value, r.std_error, true});
        ++out.evaluations;
        if (r.value > best) {
          best = r.value;
          out.params = x;
          out.std_error = r.std_error;
        }
        return -r.value;
      };
      nelder_mead(f, out.params, family.box, 0.5 * step, budget - out.evaluations, 1e-6);
    }
  }
  out.value = best;
  out.best = family_strategy(family, out.params);
  return out;
}

MinimaxResult minimax_gap(const StrategyFamily& strategies, const ModelFamily& models, const Problem& problem,
                          const PathBatch& paths) {
  const char* where = "duality.minimax_gap";
  const std::size_t M = paths.paths(), N = paths.grid().steps();
  auto spts = grid_points(strategies.box, strategies.density);
  auto mpts = grid_points(models.box, models.density);
  require(!spts.empty() && !mpts.empty(), where, "both families must be nonempty");

  // Only terminal values are kept; feedback models are built one strategy at a time.
  std::vector<std::vector<double>> terminal(spts.size());
  std::vector<double> xi = problem.endowment.sample(problem.market, paths);
  parallel_tasks(spts.size(), [&](std::size_t s) {
    terminal[s] = simulate_wealth(family_strategy(strategies, spts[s]), problem.market, paths).terminal();
    for (std::size_t m = 0; m < M; ++m) terminal[s][m] += xi[m];
  });

  std::vector<ModelPair> model_list;
  std::vector<std::string> names;
  for (const auto& x : mpts) {
    model_list.push_back(family_model(models, x, M, N));
    names.push_back(family_name(models) + params_text(x));
  }
  const std::size_t S = spts.size(), Kc = model_list.size();
  const std::size_t K = Kc + (models.include_feedback ? S : 0);
  std::vector<double> D(S * K, kInf);
  std::vector<char> feasible(K, 1);
  std::vector<GstarPath> gstar(Kc);
  for (std::size_t k = 0; k < Kc; ++k) {
    gstar[k] = conjugate_path(problem.g, model_list[k], problem.box);
    feasible[k] = gstar[k].feasible;
  }
  parallel_tasks(S * Kc, [&](std::size_t c) {
    std::size_t s = c / Kc, k = c % Kc;
    if (!feasible[k]) return;
    D[s * K + k] = solve_linear_dual_rep(model_list[k], gstar[k].values, terminal[s], paths).value.mean;
  });
  if (models.include_feedback) {
    Problem p = problem;
    p.method = PrimalMethod::bsde;
    for (std::size_t f = 0; f < S; ++f) {
      PrimalResult pr = primal_value(family_strategy(strategies, spts[f]), p, paths);
      ModelPair fb = subgradient_model(*pr.solution, problem.g);
      pr = PrimalResult{};
      names.push_back("subgradient_feedback" + params_text(spts[f]));
      parallel_tasks(S, [&](std::size_t s) {
        D[s * K + Kc + f] = solve_linear_dual_rep(fb, *fb.gstar, terminal[s], paths).value.mean;
      });
    }
  }

  MinimaxResult out;
  out.strategies = S;
  out.models = K;
  for (char f : feasible) out.feasible_models += f ? 1 : 0;
  if (out.feasible_models == 0) fail(ErrorKind::infeasible_model, where, "no feasible model in the family");

  out.sup_inf = -kInf;
  for (std::size_t s = 0; s < S; ++s) {
    double inf = kInf;
    for (std::size_t k = 0; k < K; ++k) inf = std::min(inf, D[s * K + k]);
    if (inf > out.sup_inf) {
      out.sup_inf = inf;
      out.best_strategy = spts[s];
    }
  }
  out.inf_sup = kInf;
  for (std::size_t k = 0; k < K; ++k) {
    if (!feasible[k]) continue;
    double sup = -kInf;
    for (std::size_t s = 0; s < S; ++s) sup = std::max(sup, D[s * K + k]);
    if (sup < out.inf_sup) {
      out.inf_sup = sup;
      out.best_model = names[k];
    }
  }
  out.gap = (out.inf_sup - out.sup_inf) / std::abs(out.inf_sup);
  return out;
}

}  // namespace rbu
