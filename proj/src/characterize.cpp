#include "rbu/characterize.hpp"

#include <algorithm>
#include <cmath>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

namespace rbu {

AdjointSolution solve_adjoint(const ModelPair& model, const ProcessPath& pi_tilde, const MarketParams& market,
                              const PathBatch& paths, const WealthPath* wealth, const RegressionBasis& basis,
                              double terminal_scale) {
  const char* where = "characterize.solve_adjoint";
  const std::size_t M = paths.paths(), N = paths.grid().steps(), d = paths.dim(), n = market.n;
  const double dt = paths.grid().dt();
  require(model.beta.nodes() >= N && model.q.nodes() >= N && model.q.dim() == d, where, "model shape mismatch");
  require(pi_tilde.nodes() >= N && pi_tilde.dim() == n, where, "fraction process shape mismatch");
  require(market.d == d, where, "market and path dimensions differ");
  require(std::isfinite(terminal_scale), where, "terminal scale must be finite");

  // Discount factors D_{0,t_i} on every node.
  std::vector<double> disc((N + 1) * M);
  parallel_chunks(M, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      double log_d = 0.0;
      disc[m] = 1.0;
      for (std::size_t i = 0; i < N; ++i) {
        log_d -= model.beta(m, i) * dt;
        disc[(i + 1) * M + m] = std::exp(log_d);
      }
    }
  });

  AdjointSolution out;
  out.scale = terminal_scale;
  out.dt = dt;
  std::vector<double> pt((N + 1) * M), kt(N * M * d);
  std::fill(pt.begin() + N * M, pt.end(), terminal_scale);
  std::vector<double> weight(M), target(M), phat(M);
  std::vector<double> v(M * d);

  for (std::size_t i = N; i-- > 0;) {
    std::vector<double> state;
    if (basis.state == StateKind::wealth) {
      if (wealth == nullptr) fail(ErrorKind::invalid_argument, where, "wealth state requested but no wealth path given");
      state = wealth->x.node(i);
    } else {
      state.resize(M);
      for (std::size_t m = 0; m < M; ++m) state[m] = paths.w(m, i, basis.component);
    }
    ConditionalExpectation ce(basis, state);
    if (ce.regularized()) ++out.regularized_steps;
    const double* pn = pt.data() + (i + 1) * M;

    parallel_chunks(M, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t m = b; m < e; ++m) {
        double qdw = 0.0, qq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double qj = model.q(m, i, j);
          qdw += qj * paths.dw(m, i, j);
          qq += qj * qj;
          double vj = 0.0;
          for (std::size_t s = 0; s < n; ++s) vj += pi_tilde(m, i, s) * market.sigma_at(s, j);
          v[m * d + j] = vj;
        }
        weight[m] = std::exp(qdw - 0.5 * qq * dt);
        target[m] = weight[m] * pn[m];
      }
    });
    std::vector<double> num = ce.project(target);
    std::vector<double> den = ce.project(weight);
    for (std::size_t m = 0; m < M; ++m) phat[m] = num[m] / den[m];

    double* ki = kt.data() + i * M * d;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t m = 0; m < M; ++m)
        target[m] = weight[m] * (pn[m] - phat[m]) * (paths.dw(m, i, j) - model.q(m, i, j) * dt);
      std::vector<double> kj = ce.project(target);
      for (std::size_t m = 0; m < M; ++m) ki[m * d + j] = kj[m] / (den[m] * dt);
    }
    double* pc = pt.data() + i * M;
    parallel_chunks(M, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t m = b; m < e; ++m) {
        double tq = 0.0, kv = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          tq += (market.theta[j] + model.q(m, i, j)) * v[m * d + j];
          kv += ki[m * d + j] * v[m * d + j];
        }
        pc[m] = (phat[m] + kv * dt) / (1.0 + model.beta(m, i) * dt - tq * dt);
      }
    });
  }

  for (std::size_t i = 0; i <= N; ++i)
    for (std::size_t m = 0; m < M; ++m) {
      double& p = pt[i * M + m];
      p *= disc[i * M + m];
      if (!std::isfinite(p)) fail(ErrorKind::numerical, where, "adjoint state is not finite");
      if (!(p > 0.0)) ++out.nonpositive_nodes;
      if (i < N)
        for (std::size_t j = 0; j < d; ++j) kt[(i * M + m) * d + j] *= disc[i * M + m];
    }
  out.terminal.assign(pt.begin() + N * M, pt.end());
  out.p = ProcessPath::full(M, N + 1, 1, std::move(pt));
  out.k = ProcessPath::full(M, N, d, std::move(kt));
  return out;
}

ResidualStats max_principle_residual(const AdjointSolution& adjoint, const MarketParams& market,
                                     const ModelPair& model) {
  const std::size_t M = adjoint.p.paths(), N = adjoint.k.nodes(), d = adjoint.k.dim();
  require(market.theta.size() == d && model.q.dim() == d, "characterize.max_principle_residual",
          "dimensions are inconsistent");
  const std::size_t C = chunk_count(M);
  std::vector<double> sq(C * N, 0.0), mx(C, 0.0);
  parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < N; ++i) {
        double p = adjoint.p(m, i), r2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double r = p * market.theta[j] + p * model.q(m, i, j) + adjoint.k(m, i, j);
          r2 += r * r;
        }
        sq[c * N + i] += r2;
        mx[c] = std::max(mx[c], std::sqrt(r2));
      }
  });
  ResidualStats s;
  s.nodes = M * N;
  const double dt = adjoint.dt;
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double node = 0.0;
    for (std::size_t c = 0; c < C; ++c) node += sq[c * N + i];
    total += node / static_cast<double>(M) * dt;
  }
  for (double v : mx) s.max = std::max(s.max, v);
  s.l2 = std::sqrt(total);
  return s;
}

FocStats foc_residual(const Generator& g, const ModelPair& model, const BsdeSolution& solution, double tol) {
  const char* where = "characterize.foc_residual";
  const std::size_t M = solution.y.paths(), N = solution.z.nodes(), d = solution.z.dim();
  require(model.q.dim() == d && model.beta.nodes() >= N, where, "model shape mismatch");
  GstarPath gs = conjugate_path(g, model);
  if (!gs.feasible) fail(ErrorKind::infeasible_model, where, "conjugate is infinite along the model path");
  const std::size_t C = chunk_count(M);
  std::vector<double> mx(C, 0.0), sum(C, 0.0), neg(C, 0.0);
  parallel_chunks(M, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> z(d);
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < N; ++i) {
        double y = solution.y(m, i);
        if (g.strict_domain()) y = std::max(y, g.y_floor());
        double qz = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          z[j] = solution.z(m, i, j);
          qz += model.q(m, i, j) * z[j];
        }
        double gap = model.beta(m, i) * y + qz - g(y, z) - gs.values(m, i);
        mx[c] = std::max(mx[c], std::abs(gap));
        sum[c] += gap;
        if (gap < -tol) neg[c] += 1.0;
      }
  });
  FocStats s;
  s.nodes = M * N;
  double total = 0.0, negatives = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    s.max_abs_gap = std::max(s.max_abs_gap, mx[c]);
    total += sum[c];
    negatives += neg[c];
  }
  s.mean_gap = total / static_cast<double>(s.nodes);
  s.negative_fraction = negatives / static_cast<double>(s.nodes);
  return s;
}

}  // namespace rbu
