#include "rbu/experiment.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "rbu/bsde.hpp"
#include "rbu/characterize.hpp"
#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

#ifndef RBU_VERSION_STRING
#define RBU_VERSION_STRING "0.0.0"
#endif

namespace rbu {

namespace {

using nlohmann::json;

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Whether the BSDE value is known to equal the utility operator.
bool exact_generator(const Generator& g) {
  return g.kind() == GeneratorKind::certainty_equivalent || g.kind() == GeneratorKind::g_expectation ||
         g.kind() == GeneratorKind::zero;
}

std::string value_label(const Generator& g) {
  return exact_generator(g) ? "utility value" : "BSDE value (subsolution lower bound)";
}

Utility build_utility(const ExperimentConfig& cfg) {
  if (cfg.utility == "power") return Utility::power(cfg.risk);
  if (cfg.utility == "exponential") return Utility::exponential(cfg.risk);
  return Utility::log();
}

json rows_json(const std::vector<SweepRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"family", r.family},
                 {"params", nums(r.params)},
                 {"value", num(r.value)},
                 {"std_error", num(r.std_error)},
                 {"feasible", r.feasible}});
  return a;
}

std::string rows_csv(const std::vector<SweepRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.params.size());
  std::ostringstream os;
  os << "family";
  for (std::size_t k = 0; k < width; ++k) os << ",p" << k;
  os << ",value,std_error,feasible\n";
  for (const auto& r : rows) {
    os << r.family;
    for (std::size_t k = 0; k < width; ++k) os << ',' << (k < r.params.size() ? g17(r.params[k]) : "");
    os << ',' << (r.feasible ? g17(r.value) : "inf") << ',' << (r.feasible ? g17(r.std_error) : "") << ','
       << (r.feasible ? "true" : "false") << '\n';
  }
  return os.str();
}

struct Context {
  const ExperimentConfig& cfg;
  Problem problem;
  std::optional<PathBatch> paths;
  RunOutput out;
  std::ostringstream summary;

  explicit Context(const ExperimentConfig& c) : cfg(c), problem(build_problem(c)) {}

  const PathBatch& batch() {
    if (!paths) paths = gen_brownian(TimeGrid(cfg.horizon, cfg.steps), cfg.paths, problem.market.d, cfg.seed);
    return *paths;
  }

  PrimalMethod strategy_method() const {
    if (cfg.strategy_method == "bsde") return PrimalMethod::bsde;
    if (cfg.strategy_method == "ce_oracle") return PrimalMethod::ce_oracle;
    return problem.g.kind() == GeneratorKind::certainty_equivalent ? PrimalMethod::ce_oracle : PrimalMethod::bsde;
  }

  // Optimized strategy, computed once.
  std::optional<StrategySearchResult> best;
  const StrategySearchResult& optimize() {
    if (best) return *best;
    Problem p = problem;
    p.method = strategy_method();
    best = optimize_strategy(build_strategy_family(cfg, cfg.strategy_density), p, batch(), cfg.strategy_budget);
    json& r = out.report["strategy"];
    r["method"] = p.method == PrimalMethod::ce_oracle ? "ce_oracle" : "bsde";
    r["best_params"] = nums(best->params);
    r["value"] = num(best->value);
    r["std_error"] = num(best->std_error);
    r["evaluations"] = best->evaluations;
    r["sweep"] = rows_json(best->rows);
    out.tables.emplace_back("series/strategy_sweep.csv", rows_csv(best->rows));
    summary << "best strategy " << best->best.describe() << " value " << fmt("%.6f", best->value) << '\n';
    return *best;
  }

  // BSDE primal at the optimized strategy.
  std::optional<PrimalResult> primal;
  const PrimalResult& primal_bsde() {
    if (primal) return *primal;
    const StrategySearchResult& s = optimize();
    Problem p = problem;
    p.method = PrimalMethod::bsde;
    primal = primal_value(s.best, p, batch());
    const BsdeSolution& sol = *primal->solution;
    json& r = out.report["primal"];
    r["label"] = value_label(problem.g);
    r["strategy"] = s.best.describe();
    r["value"] = num(primal->value);
    r["std_error"] = num(primal->std_error);
    r["y0_regression"] = num(sol.y0_regression);
    r["floor_hits"] = sol.floor_hits;
    r["regularized_steps"] = sol.regularized_steps;
    r["basis"] = {{"kind", to_string(sol.basis.kind)},
                  {"degree", sol.basis.degree},
                  {"bins", sol.basis.bins},
                  {"state", to_string(sol.basis.state)}};
    r["picard"] = sol.picard;
    out.tables.emplace_back("series/primal_solution.csv", solution_csv(sol, batch().grid()));
    summary << value_label(problem.g) << ' ' << fmt("%.6f", primal->value) << " (se " << fmt("%.2e", primal->std_error)
            << ")\n";
    return *primal;
  }

  void diagnostics() {
    const PrimalResult& pr = primal_bsde();
    const BsdeSolution& sol = *pr.solution;
    SubsolutionResidual sr = subsolution_residual(sol.y, sol.z, problem.g, sol.terminal, batch());
    out.report["subsolution_residual"] = {{"max", num(sr.max_violation)},
                                          {"mean", num(sr.mean_violation)},
                                          {"terminal", num(sr.terminal_violation)},
                                          {"pairs", sr.pairs},
                                          {"stride", sr.stride}};
    if (problem.utility) {
      DriftStats ds = admissibility_drift(*problem.utility, problem.g, sol);
      out.report["admissibility"] = {{"utility", problem.utility->name()},
                                     {"drift_min", num(ds.min)},
                                     {"drift_mean", num(ds.mean)},
                                     {"drift_max_abs", num(ds.max_abs)},
                                     {"violation_fraction", num(ds.violation_fraction)},
                                     {"nodes", ds.nodes}};
      summary << "admissibility drift min " << fmt("%.3e", ds.min) << '\n';
    }
    summary << "subsolution residual mean " << fmt("%.3e", sr.mean_violation) << " max "
            << fmt("%.3e", sr.max_violation) << '\n';
  }

  void gap() {
    const PrimalResult& pr = primal_bsde();
    GapResult gr = close_gap_with_subgradient(*pr.solution, problem.g, batch());
    out.report["gap"] = {{"model", gr.model.family},
                         {"primal", num(gr.primal)},
                         {"primal_se", num(gr.primal_se)},
                         {"dual", num(gr.dual.value.mean)},
                         {"dual_se", num(gr.dual.value.std_error)},
                         {"feasible", gr.dual.feasible},
                         {"weight_mean", num(gr.dual.weight.mean)},
                         {"relative_gap", num(gr.gap)}};
    summary << "relative gap " << fmt("%.4e", gr.gap) << '\n';
  }

  void dual() {
    const PrimalResult& pr = primal_bsde();
    ModelFamily fam = build_model_family(cfg, problem.g, cfg.model_density);
    std::vector<ModelPair> extra;
    if (cfg.model_feedback) extra.push_back(subgradient_model(*pr.solution, problem.g));
    DualSearchResult ds = dual_search(fam, problem.g, pr.terminal, batch(), extra, cfg.model_budget, problem.box);
    std::size_t feasible = 0, satisfied = 0;
    for (const auto& r : ds.rows) {
      if (!r.feasible) continue;
      ++feasible;
      double tol = 3.0 * std::hypot(r.std_error, pr.std_error);
      if (r.value >= pr.value - tol) ++satisfied;
    }
    double gap = (ds.best_value.value.mean - pr.value) / std::abs(pr.value);
    out.report["dual"] = {
        {"best_model", ds.best.family},
        {"best_params", nums(ds.best.params)},
        {"value", num(ds.best_value.value.mean)},
        {"std_error", num(ds.best_value.value.std_error)},
        {"relative_gap", num(gap)},
        {"evaluations", ds.evaluations},
        {"weak_duality",
         {{"feasible", feasible},
          {"satisfied", satisfied},
          {"fraction", num(feasible ? static_cast<double>(satisfied) / static_cast<double>(feasible) : 1.0)}}},
        {"sweep", rows_json(ds.rows)}};
    out.tables.emplace_back("sweep.csv", rows_csv(ds.rows));
    summary << "best dual " << fmt("%.6f", ds.best_value.value.mean) << " (" << ds.best.family << "), weak duality "
            << satisfied << '/' << feasible << '\n';
  }

  void minimax() {
    Problem p = problem;
    p.method = cfg.model_feedback ? PrimalMethod::bsde : strategy_method();
    const std::size_t M = cfg.minimax_paths ? cfg.minimax_paths : cfg.paths;
    std::optional<PathBatch> own;
    if (M != cfg.paths)
      own = gen_brownian(TimeGrid(cfg.horizon, cfg.steps), M, problem.market.d, cfg.seed);
    const PathBatch& pb = own ? *own : batch();
    ModelFamily mf = build_model_family(cfg, problem.g, cfg.minimax_model_density);
    MinimaxResult r = minimax_gap(build_strategy_family(cfg, cfg.minimax_strategy_density), mf, p, pb);
    out.report["minimax"] = {{"sup_inf", num(r.sup_inf)},
                             {"inf_sup", num(r.inf_sup)},
                             {"relative_gap", num(r.gap)},
                             {"ordered", r.sup_inf <= r.inf_sup},
                             {"best_strategy", nums(r.best_strategy)},
                             {"best_model", r.best_model},
                             {"strategies", r.strategies},
                             {"models", r.models},
                             {"feasible_models", r.feasible_models},
                             {"paths", M}};
    summary << "minimax sup-inf " << fmt("%.6f", r.sup_inf) << " inf-sup " << fmt("%.6f", r.inf_sup) << " gap "
            << fmt("%.3e", r.gap) << '\n';
  }

  void muckenhoupt() {
    const PathBatch& pb = batch();
    MuckenhouptEstimate e =
        check_muckenhoupt(problem.market.theta_path(pb), cfg.muckenhoupt_p, cfg.muckenhoupt_tau, pb);
    json r = {{"p", cfg.muckenhoupt_p},
              {"tau_index", e.tau_index},
              {"exponent", num(e.exponent)},
              {"estimate", num(e.estimate)},
              {"std_error", num(e.std_error)},
              {"deterministic_times_only", e.deterministic_times_only},
              {"note", "checked at deterministic times only"}};
    if (e.analytic) r["analytic"] = num(*e.analytic);
    if (e.worst_conditional) r["worst_conditional"] = num(*e.worst_conditional);
    out.report["muckenhoupt"] = r;
    summary << "muckenhoupt " << fmt("%.6f", e.estimate) << " (se " << fmt("%.2e", e.std_error) << ")\n";
  }

  void conditions() {
    SampleGrid grid;
    grid.y_lo = cfg.conditions_y_lo;
    grid.y_hi = cfg.conditions_y_hi;
    grid.z_max = cfg.conditions_z_max;
    grid.points = cfg.conditions_points;
    grid.dim = problem.market.d;
    grid.seed = cfg.seed;
    ConditionReport rep = verify_conditions(problem.g, problem.utility ? &*problem.utility : nullptr, grid);
    json table = json::array();
    summary << "condition  claimed  status\n";
    for (const auto& c : rep.checks) {
      table.push_back({{"name", c.name},
                       {"claimed", c.claimed},
                       {"status", to_string(c.status)},
                       {"worst_point", {{"y", num(c.worst_point.y)}, {"z", nums(c.worst_point.z)}}},
                       {"worst_value", num(c.worst_value)},
                       {"note", c.note}});
      char line[128];
      std::snprintf(line, sizeof line, "%-10s %-8s %s", c.name.c_str(), c.claimed ? "yes" : "no",
                    to_string(c.status));
      summary << line << (c.note.empty() ? "" : "  " + c.note) << '\n';
    }
    out.report["conditions"] = {{"generator", problem.g.name()},
                                {"table", table},
                                {"adm_equality_residual", num(rep.adm_equality_residual)},
                                {"qg_bound_on_box", num(rep.qg_bound_on_box)}};
  }

  void characterize() {
    const StrategySearchResult& s = optimize();
    Problem p = problem;
    p.method = PrimalMethod::bsde;
    json series = json::array();
    std::ostringstream csv;
    csv << "N,M,residual_l2,residual_max,nonpositive_nodes,foc_max_abs_gap,relative_gap\n";
    ResidualStats last;
    FocStats last_foc;
    double last_gap = 0.0;
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.refinement_steps.size(); ++k) {
      const std::size_t N = cfg.refinement_steps[k], M = cfg.refinement_paths[k];
      PathBatch pb = gen_brownian(TimeGrid(cfg.horizon, N), M, problem.market.d, cfg.seed);
      PrimalResult pr = primal_value(s.best, p, pb);
      ModelPair model = subgradient_model(*pr.solution, p.g);
      FractionProcess fp = to_fraction_process(s.best, pr.wealth, p.market, pb);
      const WealthPath* state = p.solver.basis.state == StateKind::wealth ? &pr.wealth : nullptr;
      AdjointSolution adj = solve_adjoint(model, fp.pi_tilde, p.market, pb, state, p.solver.basis);
      last = max_principle_residual(adj, p.market, model);
      last_foc = foc_residual(p.g, model, *pr.solution);
      DualValue dv = dual_objective(model, p.g, pr.terminal, pb, p.box);
      last_gap = dv.feasible ? std::abs(dv.value.mean - pr.value) / std::abs(pr.value)
                             : std::numeric_limits<double>::infinity();
      decreasing = decreasing && last.l2 < prev;
      prev = last.l2;
      series.push_back({{"N", N},
                        {"M", M},
                        {"residual_l2", num(last.l2)},
                        {"residual_max", num(last.max)},
                        {"node_count", last.nodes},
                        {"nonpositive_nodes", adj.nonpositive_nodes},
                        {"foc_max_abs_gap", num(last_foc.max_abs_gap)},
                        {"relative_gap", num(last_gap)}});
      csv << N << ',' << M << ',' << g17(last.l2) << ',' << g17(last.max) << ',' << adj.nonpositive_nodes << ','
          << g17(last_foc.max_abs_gap) << ',' << g17(last_gap) << '\n';
      summary << "characterize N=" << N << " M=" << M << " residual_l2 " << fmt("%.3e", last.l2) << '\n';
    }
    json failed = json::array();
    if (!(last_gap <= 0.01)) failed.push_back("duality_gap");
    if (!decreasing) failed.push_back("max_principle_residual");
    if (!(last_foc.max_abs_gap <= 1e-6)) failed.push_back("foc_gap");
    out.report["characterize"] = {{"residual_l2", num(last.l2)},
                                  {"residual_max", num(last.max)},
                                  {"node_count", last.nodes},
                                  {"refinement_series", series},
                                  {"residual_decreasing", decreasing},
                                  {"foc_max_abs_gap", num(last_foc.max_abs_gap)},
                                  {"failed_legs", failed}};
    out.tables.emplace_back("series/refinement.csv", csv.str());
  }

  void simulate() {
    const PathBatch& pb = batch();
    std::vector<double> params(cfg.strategy_lo.size());
    for (std::size_t j = 0; j < params.size(); ++j) params[j] = 0.5 * (cfg.strategy_lo[j] + cfg.strategy_hi[j]);
    Strategy st = family_strategy(build_strategy_family(cfg, 1), params);
    WealthPath w = simulate_wealth(st, problem.market, pb);
    std::ostringstream csv;
    csv << "t,mean,sd\n";
    std::vector<double> xs;
    for (std::size_t i = 0; i < w.x.nodes(); ++i) {
      MeanEstimate e = mean_and_se(w.x.node(i));
      double sd = e.std_error * std::sqrt(static_cast<double>(pb.paths()));
      csv << g17(pb.grid().time(i)) << ',' << g17(e.mean) << ',' << g17(sd) << '\n';
    }
    MeanEstimate xt = mean_and_se(w.terminal());
    out.report["simulate"] = {{"strategy", st.describe()},
                              {"theta", nums(problem.market.theta)},
                              {"condition_number", num(problem.market.condition_number)},
                              {"terminal_mean", num(xt.mean)},
                              {"terminal_std_error", num(xt.std_error)},
                              {"absorbed_nodes", w.absorbed_nodes}};
    out.tables.emplace_back("series/wealth.csv", csv.str());
    summary << "strategy " << st.describe() << " E[X_T] " << fmt("%.6f", xt.mean) << " (se "
            << fmt("%.2e", xt.std_error) << ")\n";
  }
};

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

std::string json_version() {
  return std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
}

}  // namespace

const char* version() noexcept { return RBU_VERSION_STRING; }

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"run",   "simulate",     "primal",           "dual",
                                              "gap",   "characterize", "check-conditions", "muckenhoupt"};
  return names;
}

bool is_subcommand(const std::string& name) {
  const auto& s = subcommands();
  return std::find(s.begin(), s.end(), name) != s.end();
}

Generator build_generator(const ExperimentConfig& cfg) {
  const GeneratorConfig& g = cfg.generator;
  if (g.kind == "certainty_equivalent") return make_ce_generator(build_utility(cfg));
  if (g.kind == "g_expectation") {
    Generator base = g.base == "norm" ? Generator::norm(g.coefficient) : Generator::zero();
    return transform_g_expectation(base, build_utility(cfg));
  }
  if (g.kind == "quadratic") return Generator::quadratic(g.coefficient);
  if (g.kind == "ratio_quadratic") return Generator::ratio_quadratic(g.coefficient);
  if (g.kind == "norm") return Generator::norm(g.coefficient);
  return Generator::zero();
}

Problem build_problem(const ExperimentConfig& cfg) {
  Problem p;
  p.g = build_generator(cfg);
  p.utility = build_utility(cfg);
  std::vector<double> flat;
  for (const auto& row : cfg.sigma) flat.insert(flat.end(), row.begin(), row.end());
  p.market = MarketParams::make(cfg.mu, flat, cfg.sigma[0].size(), cfg.x0);
  p.endowment.kind = cfg.endowment == "put_on_stock" ? EndowmentKind::put_on_stock : EndowmentKind::constant;
  p.endowment.value = cfg.endowment_value;
  p.endowment.strike = cfg.endowment_strike;
  p.endowment.stock = cfg.endowment_stock;
  p.solver.basis.kind = cfg.basis == "bins" ? BasisKind::bins : BasisKind::polynomial;
  p.solver.basis.degree = cfg.degree;
  p.solver.basis.bins = cfg.bins;
  p.solver.basis.state = cfg.state == "brownian" ? StateKind::brownian : StateKind::wealth;
  p.solver.picard = cfg.picard;
  p.solver.multistep = cfg.multistep;
  p.solver.bootstrap_seed = cfg.seed + 1;
  return p;
}

StrategyFamily build_strategy_family(const ExperimentConfig& cfg, std::size_t density) {
  StrategyFamily f;
  f.kind = cfg.strategy_kind == "constant_amount" ? StrategyKind::constant_amount : StrategyKind::constant_fraction;
  f.box = {cfg.strategy_lo, cfg.strategy_hi};
  f.density = density;
  f.refine = cfg.strategy_refine;
  return f;
}

ModelFamily build_model_family(const ExperimentConfig& cfg, const Generator& g, std::size_t density) {
  ModelFamily f;
  f.kind = cfg.model_kind == "constant" ? ModelFamilyKind::constant : ModelFamilyKind::parabola;
  f.box = {cfg.model_lo, cfg.model_hi};
  f.curvature = cfg.model_curvature > 0.0 ? cfg.model_curvature : (g.coefficient() > 0.0 ? g.coefficient() : 1.0);
  f.margin = cfg.model_margin;
  f.density = density;
  f.refine = cfg.model_refine;
  f.include_feedback = cfg.model_feedback;
  return f;
}

RunOutput run_command(const ExperimentConfig& cfg, const std::string& command) {
  if (!is_subcommand(command)) fail(ErrorKind::invalid_argument, "cli.run", "unknown subcommand '" + command + "'");
  set_thread_count(cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency()));
  Context ctx(cfg);
  json echo = config_to_json(cfg);
  echo.erase("threads");
  ctx.out.command = command;
  ctx.out.report["command"] = command;
  ctx.out.report["versions"] = {{"rbu", version()}, {"eigen", eigen_version()}, {"nlohmann_json", json_version()}};
  ctx.out.report["seed"] = cfg.seed;
  ctx.out.report["config"] = echo;
  ctx.out.report["generator"] = {{"name", ctx.problem.g.name()}, {"value_label", value_label(ctx.problem.g)}};

  if (command == "simulate") {
    ctx.simulate();
  } else if (command == "primal") {
    ctx.primal_bsde();
    ctx.diagnostics();
  } else if (command == "dual") {
    ctx.dual();
  } else if (command == "gap") {
    ctx.gap();
  } else if (command == "characterize") {
    ctx.characterize();
  } else if (command == "check-conditions") {
    ctx.conditions();
  } else if (command == "muckenhoupt") {
    ctx.muckenhoupt();
  } else {
    ctx.primal_bsde();
    ctx.diagnostics();
    ctx.dual();
    ctx.gap();
    ctx.minimax();
    ctx.muckenhoupt();
    ctx.conditions();
    ctx.characterize();
  }
  ctx.out.summary = ctx.summary.str();
  return std::move(ctx.out);
}

std::string report_text(const RunOutput& out) { return out.report.dump(2) + "\n"; }

void write_outputs(const RunOutput& out, const std::string& dir, bool json_file, bool csv) {
  namespace fs = std::filesystem;
  auto write = [&](const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) fail(ErrorKind::invalid_argument, "cli.write_outputs", "cannot write " + path.string());
  };
  if (json_file) write(fs::path(dir) / "report.json", report_text(out));
  if (csv)
    for (const auto& [name, text] : out.tables) write(fs::path(dir) / name, text);
}

}  // namespace rbu
