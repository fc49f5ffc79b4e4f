#include "rbu/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rbu/error.hpp"
#include "rbu/market.hpp"

namespace rbu {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  fail(ErrorKind::config, "config." + field, msg);
}

// Reads one table, remembering which keys were consumed so leftovers can be
// reported as unknown fields.
class Table {
 public:
  Table(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) bad(path_.empty() ? "root" : path_, "expected a table");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() || it->is_null() ? nullptr : &*it;
  }

  Table sub(const std::string& key) {
    const json* v = get(key);
    static const json empty = json::object();
    return Table(v ? *v : empty, field(key));
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) bad(field(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) bad(field(key), "must be finite");
    }
  }

  template <class U>
  void count(const std::string& key, U& out) {
    if (const json* v = get(key)) {
      if (v->is_number_unsigned()) {
        out = static_cast<U>(v->get<std::uint64_t>());
      } else if (v->is_number_integer()) {
        bad(field(key), "must be nonnegative");
      } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>() && v->get<double>() >= 0 &&
                 v->get<double>() < 1.8e19) {
        out = static_cast<U>(v->get<double>());
      } else {
        bad(field(key), "expected a nonnegative integer");
      }
    }
  }

  void flag(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) bad(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out, std::initializer_list<const char*> allowed) {
    if (const json* v = get(key)) {
      if (!v->is_string()) bad(field(key), "expected a string");
      out = v->get<std::string>();
    }
    if (allowed.size() == 0) return;
    for (const char* a : allowed)
      if (out == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    bad(field(key), "'" + out + "' is not one of " + list);
  }

  void vector(const std::string& key, std::vector<double>& out) {
    if (const json* v = get(key)) {
      if (v->is_number()) {
        out = {v->get<double>()};
        return;
      }
      if (!v->is_array()) bad(field(key), "expected a list of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) bad(field(key), "expected finite numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!seen_.count(it.key())) bad(field(it.key()), "unknown field");
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) bad(field, msg);
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& x : node) arr.push_back(yaml_to_json(x));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = node.Scalar();
  if (node.Tag() == "!") return s;
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "~" || s == "null") return nullptr;
  const char* b = s.data();
  const char* e = b + s.size();
  std::uint64_t u = 0;
  if (auto r = std::from_chars(b, e, u); r.ec == std::errc() && r.ptr == e) return u;
  std::int64_t i = 0;
  if (auto r = std::from_chars(b, e, i); r.ec == std::errc() && r.ptr == e) return i;
  double d = 0.0;
  if (auto r = std::from_chars(b, e, d); r.ec == std::errc() && r.ptr == e) return d;
  return s;
}

YAML::Node json_to_yaml(const json& v) {
  YAML::Node n;
  if (v.is_object()) {
    n = YAML::Node(YAML::NodeType::Map);
    for (auto it = v.begin(); it != v.end(); ++it) n[it.key()] = json_to_yaml(it.value());
  } else if (v.is_array()) {
    n = YAML::Node(YAML::NodeType::Sequence);
    for (const auto& x : v) n.push_back(json_to_yaml(x));
  } else if (v.is_boolean()) {
    n = v.get<bool>();
  } else if (v.is_number_unsigned()) {
    n = v.get<std::uint64_t>();
  } else if (v.is_number_integer()) {
    n = v.get<std::int64_t>();
  } else if (v.is_number_float()) {
    n = v.get<double>();
  } else if (v.is_string()) {
    n = v.get<std::string>();
  }
  return n;
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Table root(doc, "");

  Table market = root.sub("market");
  market.vector("mu", c.mu);
  if (const json* s = market.get("sigma")) {
    if (!s->is_array() || s->empty()) bad("market.sigma", "expected a matrix (list of rows)");
    c.sigma.clear();
    if ((*s)[0].is_number()) {
      std::vector<double> row;
      for (const auto& x : *s) {
        if (!x.is_number()) bad("market.sigma", "expected numbers");
        row.push_back(x.get<double>());
      }
      c.sigma.push_back(row);
    } else {
      for (const auto& r : *s) {
        if (!r.is_array()) bad("market.sigma", "expected a matrix (list of rows)");
        std::vector<double> row;
        for (const auto& x : r) {
          if (!x.is_number() || !std::isfinite(x.get<double>())) bad("market.sigma", "expected finite numbers");
          row.push_back(x.get<double>());
        }
        c.sigma.push_back(row);
      }
    }
  }
  market.number("x0", c.x0);
  market.number("T", c.horizon);
  market.finish();

  Table grid = root.sub("grid");
  grid.count("N", c.steps);
  grid.finish();

  Table mc = root.sub("mc");
  mc.count("M", c.paths);
  mc.count("seed", c.seed);
  mc.finish();

  Table util = root.sub("utility");
  util.text("kind", c.utility, {"log", "power", "exponential"});
  util.number("r", c.risk);
  util.finish();

  Table gen = root.sub("generator");
  gen.text("kind", c.generator.kind,
           {"certainty_equivalent", "g_expectation", "zero", "quadratic", "ratio_quadratic", "norm"});
  gen.text("base", c.generator.base, {"zero", "norm"});
  gen.number("coefficient", c.generator.coefficient);
  gen.finish();

  Table endow = root.sub("endowment");
  endow.text("kind", c.endowment, {"constant", "put_on_stock"});
  endow.number("value", c.endowment_value);
  endow.number("strike", c.endowment_strike);
  endow.count("stock", c.endowment_stock);
  endow.finish();

  Table sf = root.sub("strategy_family");
  sf.text("kind", c.strategy_kind, {"constant_fraction", "constant_amount"});
  sf.vector("lo", c.strategy_lo);
  sf.vector("hi", c.strategy_hi);
  sf.count("density", c.strategy_density);
  sf.flag("refine", c.strategy_refine);
  sf.count("budget", c.strategy_budget);
  sf.text("method", c.strategy_method, {"auto", "bsde", "ce_oracle"});
  sf.finish();

  Table mf = root.sub("model_family");
  mf.text("kind", c.model_kind, {"parabola", "constant"});
  mf.vector("lo", c.model_lo);
  mf.vector("hi", c.model_hi);
  mf.number("curvature", c.model_curvature);
  mf.number("margin", c.model_margin);
  mf.count("density", c.model_density);
  mf.flag("refine", c.model_refine);
  mf.flag("include_feedback", c.model_feedback);
  mf.count("budget", c.model_budget);
  mf.finish();

  Table solver = root.sub("solver");
  solver.text("basis", c.basis, {"polynomial", "bins"});
  solver.count("degree", c.degree);
  solver.count("bins", c.bins);
  solver.text("state", c.state, {"wealth", "brownian"});
  solver.count("picard", c.picard);
  solver.flag("multistep", c.multistep);
  solver.finish();

  Table mm = root.sub("minimax");
  mm.count("strategy_density", c.minimax_strategy_density);
  mm.count("model_density", c.minimax_model_density);
  mm.count("paths", c.minimax_paths);
  mm.finish();

  Table ch = root.sub("characterize");
  if (const json* r = ch.get("refinement")) {
    if (!r->is_array() || r->empty()) bad("characterize.refinement", "expected a list of [N, M] pairs");
    c.refinement_steps.clear();
    c.refinement_paths.clear();
    for (const auto& pair : *r) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned())
        bad("characterize.refinement", "expected a list of [N, M] pairs of positive integers");
      c.refinement_steps.push_back(pair[0].get<std::size_t>());
      c.refinement_paths.push_back(pair[1].get<std::size_t>());
    }
  }
  ch.finish();

  Table mk = root.sub("muckenhoupt");
  mk.number("p", c.muckenhoupt_p);
  mk.count("tau_index", c.muckenhoupt_tau);
  mk.finish();

  Table cond = root.sub("conditions");
  cond.number("y_lo", c.conditions_y_lo);
  cond.number("y_hi", c.conditions_y_hi);
  cond.number("z_max", c.conditions_z_max);
  cond.count("points", c.conditions_points);
  cond.finish();

  Table out = root.sub("outputs");
  std::string dir = c.out_dir;
  out.text("dir", dir, {});
  c.out_dir = dir;
  if (const json* f = out.get("formats")) {
    if (!f->is_array()) bad("outputs.formats", "expected a list containing json and/or csv");
    c.write_json = c.write_csv = false;
    for (const auto& x : *f) {
      if (x == "json") {
        c.write_json = true;
      } else if (x == "csv") {
        c.write_csv = true;
      } else {
        bad("outputs.formats", "entries must be json or csv");
      }
    }
  }
  out.finish();

  root.count("threads", c.threads);
  root.finish();

  // Cross-field checks against module preconditions.
  const std::size_t n = c.mu.size();
  check(n >= 1, "market.mu", "need at least one stock");
  check(c.sigma.size() == n, "market.sigma", "needs one row per stock");
  const std::size_t d = c.sigma[0].size();
  for (const auto& row : c.sigma) check(row.size() == d, "market.sigma", "rows must have equal length");
  check(d >= n, "market.sigma", "Brownian dimension must be at least the number of stocks");
  check(c.x0 > 0.0, "market.x0", "initial wealth must be > 0");
  check(c.horizon > 0.0, "market.T", "horizon must be > 0");
  check(c.steps >= 1, "grid.N", "need at least one step");
  check(c.paths >= 2, "mc.M", "need at least two paths");
  if (c.utility == "power") check(c.risk > 0.0 && c.risk < 1.0, "utility.r", "power utility needs 0 < r < 1");
  if (c.utility == "exponential") check(c.risk > 0.0, "utility.r", "exponential utility needs r > 0");
  if (c.generator.kind == "norm" || (c.generator.kind == "g_expectation" && c.generator.base == "norm")) {
    check(c.generator.coefficient >= 0.0, "generator.coefficient", "must be >= 0");
  } else if (c.generator.kind == "quadratic" || c.generator.kind == "ratio_quadratic") {
    check(c.generator.coefficient > 0.0, "generator.coefficient", "must be > 0");
  }
  check(c.endowment_value >= 0.0, "endowment.value", "endowment must be >= 0");
  check(c.endowment_strike >= 0.0, "endowment.strike", "strike must be >= 0");
  check(c.endowment_stock < n, "endowment.stock", "stock index out of range");
  check(c.strategy_lo.size() == n && c.strategy_hi.size() == n, "strategy_family.lo",
        "bounds need one entry per stock");
  for (std::size_t j = 0; j < n; ++j) check(c.strategy_lo[j] <= c.strategy_hi[j], "strategy_family.hi", "hi < lo");
  check(c.strategy_density >= 1, "strategy_family.density", "must be >= 1");
  const std::size_t mdim = c.model_kind == "parabola" ? d : d + 1;
  check(c.model_lo.size() == mdim && c.model_hi.size() == mdim, "model_family.lo",
        c.model_kind == "parabola" ? "bounds need one entry per Brownian component"
                                   : "bounds need (beta, q_1..q_d) entries");
  for (std::size_t j = 0; j < mdim; ++j) check(c.model_lo[j] <= c.model_hi[j], "model_family.hi", "hi < lo");
  check(c.model_curvature >= 0.0, "model_family.curvature", "must be >= 0");
  check(c.model_density >= 1, "model_family.density", "must be >= 1");
  check(c.degree <= 12, "solver.degree", "must be <= 12");
  check(c.bins >= 1, "solver.bins", "must be >= 1");
  check(c.picard >= 1, "solver.picard", "must be >= 1");
  if (c.state == "brownian") check(d == 1, "solver.state", "Brownian state needs a one-dimensional Brownian motion");
  check(c.minimax_strategy_density >= 1 && c.minimax_model_density >= 1, "minimax", "densities must be >= 1");
  check(c.minimax_paths == 0 || c.minimax_paths >= 2, "minimax.paths", "must be 0 or >= 2");
  for (std::size_t k = 0; k < c.refinement_steps.size(); ++k)
    check(c.refinement_steps[k] >= 1 && c.refinement_paths[k] >= 2, "characterize.refinement",
          "steps must be >= 1 and paths >= 2");
  check(c.muckenhoupt_p > 1.0, "muckenhoupt.p", "p must be > 1");
  check(c.muckenhoupt_tau <= c.steps, "muckenhoupt.tau_index", "must not exceed grid.N");
  check(c.conditions_y_lo >= 0.0 && c.conditions_y_hi > c.conditions_y_lo, "conditions.y_hi",
        "need 0 <= y_lo < y_hi");
  check(c.conditions_z_max > 0.0, "conditions.z_max", "must be > 0");
  check(c.conditions_points >= 2, "conditions.points", "must be >= 2");
  check(!c.out_dir.empty(), "outputs.dir", "must not be empty");

  std::vector<double> flat;
  for (const auto& row : c.sigma) flat.insert(flat.end(), row.begin(), row.end());
  try {
    MarketParams::make(c.mu, flat, d, c.x0);
  } catch (const Error& e) {
    bad("market.sigma", e.what());
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["market"] = {{"mu", c.mu}, {"sigma", c.sigma}, {"x0", c.x0}, {"T", c.horizon}};
  j["grid"] = {{"N", c.steps}};
  j["mc"] = {{"M", c.paths}, {"seed", c.seed}};
  j["utility"] = {{"kind", c.utility}, {"r", c.risk}};
  j["generator"] = {{"kind", c.generator.kind}, {"base", c.generator.base}, {"coefficient", c.generator.coefficient}};
  j["endowment"] = {{"kind", c.endowment},
                    {"value", c.endowment_value},
                    {"strike", c.endowment_strike},
                    {"stock", c.endowment_stock}};
  j["strategy_family"] = {{"kind", c.strategy_kind},       {"lo", c.strategy_lo},
                          {"hi", c.strategy_hi},           {"density", c.strategy_density},
                          {"refine", c.strategy_refine},   {"budget", c.strategy_budget},
                          {"method", c.strategy_method}};
  j["model_family"] = {{"kind", c.model_kind},         {"lo", c.model_lo},
                       {"hi", c.model_hi},             {"curvature", c.model_curvature},
                       {"margin", c.model_margin},     {"density", c.model_density},
                       {"refine", c.model_refine},     {"include_feedback", c.model_feedback},
                       {"budget", c.model_budget}};
  j["solver"] = {{"basis", c.basis},   {"degree", c.degree}, {"bins", c.bins},
                 {"state", c.state},   {"picard", c.picard}, {"multistep", c.multistep}};
  j["minimax"] = {{"strategy_density", c.minimax_strategy_density},
                  {"model_density", c.minimax_model_density},
                  {"paths", c.minimax_paths}};
  json refinement = json::array();
  for (std::size_t k = 0; k < c.refinement_steps.size(); ++k)
    refinement.push_back({c.refinement_steps[k], c.refinement_paths[k]});
  j["characterize"] = {{"refinement", refinement}};
  j["muckenhoupt"] = {{"p", c.muckenhoupt_p}, {"tau_index", c.muckenhoupt_tau}};
  j["conditions"] = {{"y_lo", c.conditions_y_lo},
                     {"y_hi", c.conditions_y_hi},
                     {"z_max", c.conditions_z_max},
                     {"points", c.conditions_points}};
  json formats = json::array();
  if (c.write_json) formats.push_back("json");
  if (c.write_csv) formats.push_back("csv");
  j["outputs"] = {{"dir", c.out_dir}, {"formats", formats}};
  j["threads"] = c.threads;
  return j;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  json doc;
  if (first != std::string::npos && text[first] == '{') {
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      bad("root", std::string("JSON parse error: ") + e.what());
    }
  } else {
    try {
      doc = yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
      bad("root", std::string("YAML parse error: ") + e.what());
    }
    if (doc.is_null()) doc = json::object();
  }
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("file", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_yaml(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << json_to_yaml(config_to_json(cfg));
  return std::string(out.c_str()) + "\n";
}

}  // namespace rbu
