#include "rbu/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rbu/error.hpp"

namespace rbu {

namespace {

std::vector<double> regression_state(const RegressionBasis& basis, const WealthPath* wealth, const PathBatch& paths,
                                     std::size_t i, const char* where) {
  if (basis.state == StateKind::wealth) {
    if (wealth == nullptr) fail(ErrorKind::invalid_argument, where, "wealth state requested but no wealth path given");
    return wealth->x.node(i);
  }
  if (basis.component >= paths.dim()) fail(ErrorKind::invalid_argument, where, "Brownian component out of range");
  std::vector<double> s(paths.paths());
  for (std::size_t m = 0; m < s.size(); ++m) s[m] = paths.w(m, i, basis.component);
  return s;
}

// Standard error of the mean from resampling contiguous blocks of paths.
double block_bootstrap_se(const std::vector<double>& v, std::size_t blocks, std::size_t resamples,
                          std::uint64_t seed) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  blocks = std::clamp<std::size_t>(blocks, 2, n);
  std::vector<double> sums(blocks, 0.0), counts(blocks, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    std::size_t b = m * blocks / n;
    sums[b] += v[m];
    counts[b] += 1.0;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, blocks - 1);
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
      std::size_t b = pick(rng);
      s += sums[b];
      c += counts[b];
    }
    double mean = s / c;
    acc += mean;
    acc2 += mean * mean;
  }
  double mean = acc / resamples;
  return std::sqrt(std::max(0.0, acc2 / resamples - mean * mean) * resamples / (resamples - 1.0));
}

double norm2(const double* z, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += z[j] * z[j];
  return s;
}

}  // namespace

BsdeSolution solve_backward(const Generator& g, std::span<const double> terminal, const WealthPath* wealth,
                            const PathBatch& paths, const SolverConfig& cfg) {
  const char* where = "bsde.solve_backward";
  const std::size_t M = paths.paths(), N = paths.grid().steps(), d = paths.dim();
  const double dt = paths.grid().dt();
  require(terminal.size() == M, where, "terminal values do not match the path count");
  for (double h : terminal)
    if (!std::isfinite(h)) fail(ErrorKind::invalid_argument, where, "terminal value is not finite");
  if (wealth != nullptr) require(wealth->x.paths() == M && wealth->x.nodes() == N + 1, where, "wealth shape mismatch");

  const bool clip = g.strict_domain();
  const double floor = cfg.y_floor;

  BsdeSolution sol;
  sol.basis = cfg.basis;
  sol.picard = cfg.picard;
  sol.terminal.assign(terminal.begin(), terminal.end());
  std::vector<double> yv((N + 1) * M), zv(N * M * d);
  std::copy(terminal.begin(), terminal.end(), yv.begin() + N * M);
  std::vector<double> psi(terminal.begin(), terminal.end());

  std::vector<std::size_t> hits(chunk_count(M), 0);
  std::vector<int> bad(chunk_count(M), 0);
  std::vector<double> target(M);

  for (std::size_t step = N; step-- > 0;) {
    const std::size_t i = step;
    const double* ynext = cfg.multistep ? psi.data() : yv.data() + (i + 1) * M;
    double* ycur = yv.data() + i * M;
    double* zi = zv.data() + i * M * d;
    auto state = regression_state(cfg.basis, wealth, paths, i, where);
    ConditionalExpectation ce(cfg.basis, state);
    if (ce.regularized()) ++sol.regularized_steps;

    std::vector<double> yhat = ce.project(std::span<const double>(ynext, M));
    for (std::size_t j = 0; j < d; ++j) {
      parallel_chunks(M, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m) target[m] = (ynext[m] - yhat[m]) * paths.dw(m, i, j);
      });
      std::vector<double> zj = ce.project(target);
      for (std::size_t m = 0; m < M; ++m) zi[m * d + j] = -zj[m] / dt;
    }

    parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
      for (std::size_t m = b; m < e; ++m) {
        std::span<const double> z(zi + m * d, d);
        double y = yhat[m];
        if (clip && y < floor) y = floor;
        for (std::size_t it = 0; it < cfg.picard; ++it) {
          double gv = g(y, z);
          if (!std::isfinite(gv)) {
            bad[c] = 1;
            break;
          }
          y = yhat[m] - gv * dt;
          if (clip && y < floor) {
            y = floor;
            ++hits[c];
          }
        }
        ycur[m] = y;
        double gv = g(y, z);
        if (!std::isfinite(gv)) bad[c] = 1;
        double zdw = 0.0;
        for (std::size_t j = 0; j < d; ++j) zdw += z[j] * paths.dw(m, i, j);
        psi[m] += -gv * dt + zdw;
      }
    });
    for (int b : bad)
      if (b) fail(ErrorKind::domain_violation, where, "generator is not finite on the visited region");
  }
  for (std::size_t h : hits) sol.floor_hits += h;

  sol.y0_regression = yv[0];
  MeanEstimate est = mean_and_se(psi);
  sol.y0 = est.mean;
  sol.y0_se = block_bootstrap_se(psi, cfg.bootstrap_blocks, cfg.bootstrap_resamples, cfg.bootstrap_seed);
  sol.y = ProcessPath::full(M, N + 1, 1, std::move(yv));
  sol.z = ProcessPath::full(M, N, d, std::move(zv));
  return sol;
}

namespace {

std::vector<double> utility_of_terminal(const Utility& utility, std::span<const double> terminal, const char* where) {
  std::vector<double> uh(terminal.size());
  for (std::size_t m = 0; m < terminal.size(); ++m) {
    if (!utility.in_domain(terminal[m]) || !std::isfinite(terminal[m]))
      fail(ErrorKind::domain_violation, where, "terminal value outside the utility domain");
    uh[m] = utility.value(terminal[m]);
    if (!std::isfinite(uh[m])) fail(ErrorKind::invalid_argument, where, "u(H) is not finite");
  }
  return uh;
}

MeanEstimate ce_of_mean(const Utility& utility, const std::vector<double>& uh) {
  MeanEstimate e = mean_and_se(uh);
  const double y0 = utility.inverse(e.mean);
  return {y0, e.std_error / utility.derivative(y0)};
}

}  // namespace

MeanEstimate certainty_equivalent_value(const Utility& utility, std::span<const double> terminal) {
  return ce_of_mean(utility, utility_of_terminal(utility, terminal, "bsde.certainty_equivalent_value"));
}

CeOracle certainty_equivalent_oracle(const Utility& utility, std::span<const double> terminal,
                                     const WealthPath* wealth, const PathBatch& paths,
                                     const RegressionBasis& basis) {
  const char* where = "bsde.certainty_equivalent_oracle";
  const std::size_t M = paths.paths(), N = paths.grid().steps();
  require(terminal.size() == M, where, "terminal values do not match the path count");
  std::vector<double> uh = utility_of_terminal(utility, terminal, where);
  CeOracle out;
  std::vector<double> yv((N + 1) * M);
  std::copy(terminal.begin(), terminal.end(), yv.begin() + N * M);
  for (std::size_t i = 0; i < N; ++i) {
    auto state = regression_state(basis, wealth, paths, i, where);
    ConditionalExpectation ce(basis, state);
    std::vector<double> fit = ce.project(uh);
    for (std::size_t m = 0; m < M; ++m) yv[i * M + m] = utility.inverse(fit[m]);
  }
  MeanEstimate e = ce_of_mean(utility, uh);
  out.y0 = e.mean;
  out.y0_se = e.std_error;
  out.y = ProcessPath::full(M, N + 1, 1, std::move(yv));
  return out;
}

LinearRepValue solve_linear_dual_rep(const ModelPair& model, const ProcessPath& gstar, std::span<const double> terminal,
                                     const PathBatch& paths) {
  const char* where = "bsde.solve_linear_dual_rep";
  const std::size_t M = paths.paths(), N = paths.grid().steps(), d = paths.dim();
  const double dt = paths.grid().dt();
  require(terminal.size() == M, where, "terminal values do not match the path count");
  require(model.q.dim() == d && model.q.nodes() >= N && model.beta.nodes() >= N && gstar.nodes() >= N, where,
          "model shape does not match the path batch");
  std::vector<double> val(M), wt(M);
  std::vector<int> bad(chunk_count(M), 0);
  parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      double log_d = 0.0, log_l = 0.0, integral = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        double gs = gstar(m, i);
        if (!std::isfinite(gs)) bad[c] = 1;
        integral += std::exp(log_d) * gs * dt;
        log_d -= model.beta(m, i) * dt;
        double qq = 0.0, qdw = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double qj = model.q(m, i, j);
          qq += qj * qj;
          qdw += qj * paths.dw(m, i, j);
        }
        log_l += qdw - 0.5 * qq * dt;
      }
      double l = std::exp(log_l);
      wt[m] = l;
      val[m] = l * (std::exp(log_d) * terminal[m] + integral);
    }
  });
  for (int b : bad)
    if (b) fail(ErrorKind::infeasible_model, where, "conjugate is infinite along the model path");
  LinearRepValue out{mean_and_se(val), mean_and_se(wt)};
  if (!std::isfinite(out.value.mean) || !std::isfinite(out.weight.mean))
    fail(ErrorKind::numeric_overflow, where, "Girsanov weight overflowed");
  return out;
}

SubsolutionResidual subsolution_residual(const ProcessPath& y, const ProcessPath& z, const Generator& g,
                                         std::span<const double> terminal, const PathBatch& paths,
                                         std::size_t pair_stride) {
  const std::size_t M = paths.paths(), N = paths.grid().steps(), d = paths.dim();
  const double dt = paths.grid().dt();
  require(y.nodes() == N + 1 && z.nodes() >= N && z.dim() == d && terminal.size() == M, "bsde.subsolution_residual",
          "shapes are inconsistent");
  SubsolutionResidual out;
  out.stride = pair_stride == 0 ? std::max<std::size_t>(1, N / 20) : pair_stride;
  std::vector<std::size_t> marks;
  for (std::size_t i = 0; i < N; i += out.stride) marks.push_back(i);
  marks.push_back(N);
  const std::size_t P = marks.size();
  out.pairs = P * (P - 1) / 2;

  const std::size_t C = chunk_count(M);
  std::vector<double> mx(C, 0.0), sum(C, 0.0), term(C, 0.0);
  parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> acc(P), yv(P);
    std::vector<double> zz(d);
    for (std::size_t m = b; m < e; ++m) {
      double a = 0.0;
      std::size_t k = 0;
      for (std::size_t i = 0; i <= N; ++i) {
        if (k < P && marks[k] == i) {
          acc[k] = a;
          yv[k] = y(m, i);
          ++k;
        }
        if (i == N) break;
        double zdw = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          zz[j] = z(m, i, j);
          zdw += zz[j] * paths.dw(m, i, j);
        }
        double yi = y(m, i);
        if (g.strict_domain()) yi = std::max(yi, g.y_floor());
        a += g(yi, zz) * dt - zdw;
      }
      for (std::size_t s = 0; s < P; ++s)
        for (std::size_t t = s + 1; t < P; ++t) {
          double v = std::max(0.0, yv[s] + acc[t] - acc[s] - yv[t]);
          if (std::isnan(v)) v = INFINITY;
          mx[c] = std::max(mx[c], v);
          sum[c] += v;
        }
      term[c] = std::max(term[c], std::max(0.0, y(m, N) - terminal[m]));
    }
  });
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    out.max_violation = std::max(out.max_violation, mx[c]);
    out.terminal_violation = std::max(out.terminal_violation, term[c]);
    total += sum[c];
  }
  out.mean_violation = out.pairs > 0 ? total / (static_cast<double>(out.pairs) * M) : 0.0;
  return out;
}

// Drift tolerance for the violation count.
constexpr double kDriftTol = 1e-12;

DriftStats admissibility_drift(const Utility& utility, const Generator& g, const BsdeSolution& solution) {
  const std::size_t M = solution.y.paths(), N = solution.z.nodes(), d = solution.z.dim();
  const std::size_t C = chunk_count(M);
  std::vector<double> mn(C, INFINITY), sum(C, 0.0), mab(C, 0.0), viol(C, 0.0), cnt(C, 0.0);
  parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> z(d);
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < N; ++i) {
        double y = solution.y(m, i);
        if (!utility.in_domain(y)) continue;
        for (std::size_t j = 0; j < d; ++j) z[j] = solution.z(m, i, j);
        double r = utility.derivative(y) * g(y, z) + 0.5 * utility.second_derivative(y) * norm2(z.data(), d);
        mn[c] = std::min(mn[c], r);
        sum[c] += r;
        mab[c] = std::max(mab[c], std::abs(r));
        if (r < -kDriftTol) viol[c] += 1.0;
        cnt[c] += 1.0;
      }
  });
  DriftStats s;
  s.min = INFINITY;
  double total = 0.0, n = 0.0, v = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    s.min = std::min(s.min, mn[c]);
    s.max_abs = std::max(s.max_abs, mab[c]);
    total += sum[c];
    n += cnt[c];
    v += viol[c];
  }
  s.nodes = static_cast<std::size_t>(n);
  if (n > 0) {
    s.mean = total / n;
    s.violation_fraction = v / n;
  } else {
    s.min = 0.0;
  }
  return s;
}

std::string solution_csv(const BsdeSolution& solution, const TimeGrid& grid) {
  const std::size_t M = solution.y.paths(), N = grid.steps(), d = solution.z.dim();
  std::ostringstream os;
  os.precision(12);
  os << "t,y_mean,y_sd";
  for (std::size_t j = 0; j < d; ++j) os << ",z" << j << "_mean";
  os << '\n';
  for (std::size_t i = 0; i <= N; ++i) {
    auto y = solution.y.node(i);
    MeanEstimate e = mean_and_se(y);
    os << grid.time(i) << ',' << e.mean << ',' << e.std_error * std::sqrt(static_cast<double>(M));
    for (std::size_t j = 0; j < d; ++j) {
      if (i < N) {
        os << ',' << mean_and_se(solution.z.node(i, j)).mean;
      } else {
        os << ',';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rbu
