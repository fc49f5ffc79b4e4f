#include "rbu/model.hpp"

#include <span>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

namespace rbu {

ModelPair ModelPair::constant(double beta, std::vector<double> q, std::size_t paths, std::size_t steps) {
  ModelPair m;
  m.params.push_back(beta);
  m.params.insert(m.params.end(), q.begin(), q.end());
  m.beta = ProcessPath::constant(paths, steps, {beta});
  m.q = ProcessPath::constant(paths, steps, std::move(q));
  m.family = "constant";
  return m;
}

GstarPath conjugate_path(const Generator& g, const ModelPair& model, const SearchBox& box) {
  const std::size_t paths = model.beta.paths(), nodes = model.beta.nodes(), d = model.q.dim();
  GstarPath out;
  if (model.gstar) {
    out.values = *model.gstar;
    return out;
  }
  auto eval = [&](std::size_t m, std::size_t i, std::vector<double>& q) {
    for (std::size_t j = 0; j < d; ++j) q[j] = model.q(m, i, j);
    return conjugate(g, model.beta(m, i), q, box);
  };
  const bool constant = model.beta.layout() == Layout::constant && model.q.layout() == Layout::constant;
  const bool deterministic = model.beta.layout() != Layout::full && model.q.layout() != Layout::full;
  std::vector<double> q(d);
  if (constant) {
    ConjugateValue c = eval(0, 0, q);
    out.feasible = c.finite;
    out.infeasible_nodes = c.finite ? 0 : nodes;
    out.values = ProcessPath::constant(paths, nodes, {c.finite ? c.value : 0.0});
    return out;
  }
  if (deterministic) {
    std::vector<double> v(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      ConjugateValue c = eval(0, i, q);
      if (!c.finite) ++out.infeasible_nodes;
      v[i] = c.finite ? c.value : 0.0;
    }
    out.feasible = out.infeasible_nodes == 0;
    out.values = ProcessPath::deterministic(paths, nodes, 1, std::move(v));
    return out;
  }
  if (!g.has_analytic_conjugate())
    fail(ErrorKind::invalid_argument, "duality.conjugate_path",
         "path-dependent model needs an analytic conjugate or a stored g* path");
  std::vector<double> v(paths * nodes);
  std::vector<std::size_t> bad(chunk_count(paths), 0);
  parallel_chunks(paths, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> qq(d);
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = 0; j < d; ++j) qq[j] = model.q(m, i, j);
        ConjugateValue cv = g.analytic_conjugate()(model.beta(m, i), qq);
        if (!cv.finite) ++bad[c];
        v[i * paths + m] = cv.finite ? cv.value : 0.0;
      }
  });
  for (std::size_t b : bad) out.infeasible_nodes += b;
  out.feasible = out.infeasible_nodes == 0;
  out.values = ProcessPath::full(paths, nodes, 1, std::move(v));
  return out;
}

}  // namespace rbu
