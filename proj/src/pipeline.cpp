#include "phi4/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "phi4/pointcount.hpp"

namespace phi4 {

namespace fs = std::filesystem;

namespace {

std::string edge_name(int a, int b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; }

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

std::set<std::uint32_t> prime_set(const json& j) {
  std::set<std::uint32_t> s;
  if (j.is_array())
    for (const auto& p : j) s.insert(p.get<std::uint32_t>());
  return s;
}

bool is_square_rational(const Rational& r) {
  if (sgn(r) < 0) return false;
  return mpz_perfect_square_p(r.get_num_mpz_t()) && mpz_perfect_square_p(r.get_den_mpz_t());
}

bool is_hypersurface(const VarietyModel& m) {
  return m.ambient.kind == Ambient::Kind::Proj && m.equations.size() == 1 && !m.branch;
}

Integer affine_count(const VarietyModel& m, std::uint32_t p, const RunOptions& opt, std::string& hash) {
  const std::string mode = "affine";
  hash = model_hash(m);
  if (opt.cache)
    if (auto r = opt.cache->get(hash, p, mode)) {
      if (opt.stats) ++opt.stats->hits;
      return r->count;
    }
  Integer c = count_affine(m.equations, m.ambient.coordinate_count(), p, opt.count);
  if (opt.stats) ++opt.stats->enumerations;
  if (opt.cache) opt.cache->put({hash, p, c, mode});
  return c;
}

Integer projective_count(const VarietyModel& m, std::uint32_t p, const RunOptions& opt) {
  return cached_count(opt.cache, m, p, opt.count, opt.stats);
}

std::optional<CountFormula> ledger_adjustment(const ModelFixture& f, const std::string& form = "stated") {
  if (f.meta.value("formula_counts", "") != "resolution") return std::nullopt;
  auto led = load_ledger(f.meta.at("ledger").get<std::string>());
  if (form == "itemized" || !led.stated) return ledger_total(led.events);
  return *led.stated;
}

}  // namespace

// ---------------------------------------------------------------- fixtures

std::set<std::uint32_t> ModelFixture::bad_primes() const { return prime_set(meta.value("bad_primes", json::array())); }

std::optional<CountFormula> ModelFixture::formula() const {
  if (!meta.contains("formula")) return std::nullopt;
  return formula_from_json(meta["formula"]);
}

std::string ModelFixture::form() const { return meta.value("form", ""); }

int ModelFixture::weight() const { return meta.value("weight", 4); }

FixtureRegistry FixtureRegistry::load(const fs::path& root) {
  FixtureRegistry reg;
  auto each = [&](const fs::path& dir, auto&& fn) {
    if (!fs::exists(dir)) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) fn(f);
  };
  each(root / "models", [&](const fs::path& f) {
    const std::string name = f.stem().string();
    try {
      json j = read_json_file(f);
      ModelFixture m{name, model_from_json(j), j.value("meta", json::object())};
      reg.models_.emplace(name, std::move(m));
    } catch (const std::exception& e) {
      throw FixtureError("model fixture " + name + ": " + e.what());
    }
  });
  each(root / "polys", [&](const fs::path& f) {
    const std::string name = f.stem().string();
    try {
      json j = read_json_file(f);
      reg.polys_.emplace(name, PolyFixture{name, poly_from_json(j), poly_vars_from_json(j)});
    } catch (const std::exception& e) {
      throw FixtureError("poly fixture " + name + ": " + e.what());
    }
  });
  return reg;
}

const ModelFixture& FixtureRegistry::model(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw UnknownFixture("unknown model fixture '" + name + "'");
  return it->second;
}

const PolyFixture& FixtureRegistry::poly(const std::string& name) const {
  auto it = polys_.find(name);
  if (it == polys_.end()) throw UnknownFixture("unknown poly fixture '" + name + "'");
  return it->second;
}

std::vector<std::string> FixtureRegistry::model_names() const {
  std::vector<std::string> v;
  for (const auto& [k, _] : models_) v.push_back(k);
  return v;
}

std::vector<std::string> FixtureRegistry::poly_names() const {
  std::vector<std::string> v;
  for (const auto& [k, _] : polys_) v.push_back(k);
  return v;
}

void FixtureRegistry::validate_anchors() const {
  for (const auto& [name, f] : models_) {
    auto fail = [&](const std::string& why) { throw FixtureError("fixture " + name + ": " + why); };
    const auto& m = f.model;
    try {
      m.validate();
    } catch (const std::exception& e) {
      fail(e.what());
    }
    if (m.vars.size() != m.ambient.coordinate_count()) fail("variable count does not match the ambient");
    if (f.meta.value("source", "").empty()) fail("meta has no source");
    if (!f.meta.contains("degree")) fail("meta has no declared degree");
    const json& deg = f.meta["degree"];
    if (m.branch && deg.is_number()) {
      if (deg.get<int>() != m.branch->total_degree())
        fail("declared degree " + deg.dump() + " differs from the branch degree");
    } else if (deg.is_number()) {
      for (const auto& e : m.equations)
        if (e.total_degree() != deg.get<int>() || !e.is_homogeneous())
          fail("equation is not homogeneous of degree " + deg.dump());
    } else {
      if (!deg.is_array() || deg.size() != m.equations.size()) fail("declared degrees do not list every equation");
      auto groups = m.ambient.group_sizes();
      for (std::size_t i = 0; i < m.equations.size(); ++i) {
        const auto& d = deg[i];
        std::vector<int> want = d.is_array() ? d.get<std::vector<int>>() : std::vector<int>{d.get<int>()};
        std::vector<int> got = m.ambient.kind == Ambient::Kind::MultiProj ? multidegree(m.equations[i], groups)
                                                                         : std::vector<int>{m.equations[i].total_degree()};
        if (want != got) fail("equation " + std::to_string(i) + " has the wrong degree");
      }
    }
    const bool anchored = (f.meta.contains("checks") && !f.meta["checks"].empty()) || f.meta.contains("formula") ||
                          f.meta.contains("form");
    if (!anchored) fail("meta carries no check, formula or form");
    if (f.meta.contains("checks"))
      for (const auto& c : f.meta["checks"])
        if (c.contains("other") && !has_model(c["other"].get<std::string>()))
          fail("check refers to unknown fixture " + c["other"].dump());
  }
}

// ---------------------------------------------------------------- links

bool LinkReport::ok() const { return first_failure() == nullptr && !checks.empty(); }

const LinkCheck* LinkReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

LinkReport verify_fixture_links(const FixtureRegistry& reg, const std::vector<std::string>& fixtures,
                                const RunOptions& opt, bool throw_on_failure) {
  LinkReport rep;
  for (const auto& name : fixtures) {
    const auto& fx = reg.model(name);
    const auto bad = fx.bad_primes();
    for (const auto& chk : fx.meta.value("checks", json::array())) {
      const std::string kind = chk.at("kind");
      const std::string other = chk.value("other", "");
      for (std::uint32_t p : prime_set(chk.at("primes"))) {
        if (bad.count(p)) continue;
        LinkCheck lc;
        lc.fixture = name;
        lc.kind = kind;
        lc.other = other;
        lc.p = p;
        const Integer cx = projective_count(fx.model, p, opt);
        if (kind == "formula") {
          lc.lhs = cx;
          lc.rhs = formula_eval(formula_from_json(chk.at("formula")), p);
          lc.passed = lc.lhs == lc.rhs;
        } else if (kind == "difference") {
          const Integer co = projective_count(reg.model(other).model, p, opt);
          lc.lhs = cx - co;
          lc.rhs = formula_eval(formula_from_json(chk.at("formula")), p);
          lc.passed = lc.lhs == lc.rhs;
        } else if (kind == "similar") {
          const Integer co = projective_count(reg.model(other).model, p, opt);
          const int tw = twist_from_json(chk.value("twist", json())).value(p);
          const int sign = chk.value("sign", 1) * tw;
          const Integer P(p);
          lc.lhs = ((cx - 1) % P + P) % P;
          lc.rhs = ((Integer(sign) * (co - 1)) % P + P) % P;
          lc.passed = lc.lhs == lc.rhs;
          lc.detail = "sign " + std::to_string(sign);
        } else if (kind == "ap_parity" || kind == "ap_parity_cubic") {
          auto f = fx.formula();
          if (!f) throw FixtureError("fixture " + name + ": parity check without a formula");
          Integer adj = cx;
          if (auto led = ledger_adjustment(fx)) adj += formula_eval(*led, p);
          lc.lhs = (adj - formula_eval(*f, p, Integer(0))) * f->ap_sign;
          if (!within_weil(lc.lhs, p, fx.weight())) {
            lc.detail = "a_p outside the Weil bound";
          } else if (kind == "ap_parity") {
            lc.rhs = chk.value("even", true) ? 0 : 1;
            lc.passed = mpz_odd_p(lc.lhs.get_mpz_t()) == (lc.rhs != 0);
          } else {
            auto c = chk.at("cubic").get<std::vector<long>>();
            std::array<Integer, 4> cubic{Integer(c.at(0)), Integer(c.at(1)), Integer(c.at(2)), Integer(c.at(3))};
            lc.passed = parity_check(lc.lhs, p, cubic);
            lc.rhs = to_string(cubic_frobenius(cubic, p)) == "inert3" ? 1 : 0;
          }
        } else {
          throw FixtureError("fixture " + name + ": unknown check kind '" + kind + "'");
        }
        rep.checks.push_back(lc);
        if (!lc.passed && throw_on_failure)
          throw LinkFailure("fixture " + name + " fails its " + kind + " check" + (other.empty() ? "" : " against " + other) +
                                " at p = " + std::to_string(p),
                            name, p);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------- ledger

LedgerEvent ledger_event_from_json(const json& j) {
  LedgerEvent e;
  e.kind = j.at("kind").get<std::string>();
  e.count = j.value("count", 1L);
  e.note = j.value("note", "");
  if (e.kind == "curve_blowup") {
    e.d = j.value("d", 0);
  } else if (e.kind == "meet_adjustment") {
    e.sign = j.value("sign", -1);
    if (e.sign != 1 && e.sign != -1) throw UnknownEvent("meet_adjustment sign must be +1 or -1");
  } else if (e.kind == "character") {
    const auto& c = j.value("coeff", json("1"));
    e.coeff = Integer(c.is_string() ? c.get<std::string>() : std::to_string(c.get<long long>()));
    e.power = j.value("power", 1);
    e.twist = twist_from_json(j.at("twist"));
  } else if (e.kind == "custom") {
    e.custom = formula_from_json(j.at("formula"));
    if (e.custom.ap_sign != 0) throw UnknownEvent("custom ledger events cannot carry a_p");
  } else if (e.kind != "fourfold_point" && e.kind != "small_resolution") {
    throw UnknownEvent("unknown ledger event '" + e.kind + "'");
  }
  return e;
}

json ledger_event_to_json(const LedgerEvent& e) {
  json j = {{"kind", e.kind}, {"count", e.count}};
  if (e.kind == "curve_blowup") j["d"] = e.d;
  if (e.kind == "meet_adjustment") j["sign"] = e.sign;
  if (e.kind == "character") {
    j["coeff"] = e.coeff.get_str();
    j["power"] = e.power;
    j["twist"] = twist_to_json(e.twist);
  }
  if (e.kind == "custom") j["formula"] = formula_to_json(e.custom);
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

CountFormula ledger_total(const std::vector<LedgerEvent>& events) {
  CountFormula f;
  for (const auto& e : events) {
    const Integer n(e.count);
    if (e.kind == "fourfold_point") {
      f.add(n, 2).add(2 * n, 1);
    } else if (e.kind == "curve_blowup") {
      // exceptional cover has p^2 + (2+d)p + 1 points and replaces p + 1
      f.add(n, 2).add(n * (1 + e.d), 1);
    } else if (e.kind == "meet_adjustment") {
      f.add(n * e.sign, 1);
    } else if (e.kind == "small_resolution") {
      f.add(n, 1);
    } else if (e.kind == "character") {
      f.add(n * e.coeff, e.power, e.twist);
    } else if (e.kind == "custom") {
      for (const auto& t : e.custom.terms) f.add(n * t.coeff, t.power, t.twist);
    } else {
      throw UnknownEvent("unknown ledger event '" + e.kind + "'");
    }
  }
  return f.normalized();
}

Ledger ledger_from_json(const json& j) {
  Ledger l;
  l.name = j.value("name", "");
  for (const auto& e : j.at("events")) l.events.push_back(ledger_event_from_json(e));
  if (j.contains("stated")) l.stated = formula_from_json(j["stated"]);
  return l;
}

Ledger load_ledger(const std::string& name) {
  auto path = fixture_dir() / "ledgers" / (name + ".json");
  if (!fs::exists(path)) throw UnknownFixture("unknown ledger '" + name + "'");
  return ledger_from_json(read_json_file(path));
}

// ---------------------------------------------------------------- configs

PipelineConfig config_from_json(const json& j) {
  try {
    PipelineConfig c;
    c.name = j.at("name").get<std::string>();
    c.graph = j.value("graph", "");
    c.start_model = j.value("model", "");
    if (c.graph.empty() == c.start_model.empty()) throw ConfigError("give exactly one of 'graph' and 'model'");
    if (j.contains("delete_vertex")) c.delete_vertex = j["delete_vertex"].get<int>();
    if (j.contains("drop_vertex")) c.drop_vertex = j["drop_vertex"].get<int>();
    for (const auto& e : j.value("five_invariant", json::array())) c.five_invariant.emplace_back(e.at(0), e.at(1));
    if (!c.graph.empty() && c.five_invariant.size() != 5) throw ConfigError("five_invariant needs exactly five edges");
    for (const auto& s : j.value("steps", json::array())) {
      if (!s.contains("op")) throw ConfigError("step without 'op': " + s.dump());
      c.steps.push_back({s["op"].get<std::string>(), s});
    }
    const json count = j.value("count", json::object());
    if (count.contains("primes")) {
      c.prime_lo = count["primes"].at(0);
      c.prime_hi = count["primes"].at(1);
    }
    if (c.prime_lo <= 2) throw ConfigError("prime range must exclude 2");
    if (c.prime_hi < c.prime_lo) throw ConfigError("empty prime range");
    c.exclude = prime_set(count.value("exclude", json::array()));
    c.affine = count.value("affine", false);
    for (const auto& p : count.value("chain_primes", json::array())) {
      if (p.get<std::uint32_t>() == 2) throw ConfigError("chain primes must exclude 2");
      c.chain_primes.push_back(p);
    }
    c.chain_budget = count.value("chain_budget", c.chain_budget);
    c.link_fixtures = j.value("links", std::vector<std::string>{});
    c.target = j.value("target", json::object());
    c.sinks = j.value("reports", std::vector<std::string>{});
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  json j = {{"name", c.name}};
  if (!c.graph.empty()) {
    j["graph"] = c.graph;
    if (c.delete_vertex) j["delete_vertex"] = *c.delete_vertex;
    if (c.drop_vertex) j["drop_vertex"] = *c.drop_vertex;
    json five = json::array();
    for (auto [a, b] : c.five_invariant) five.push_back({a, b});
    j["five_invariant"] = five;
  } else {
    j["model"] = c.start_model;
  }
  json steps = json::array();
  for (const auto& s : c.steps) steps.push_back(s.args);
  j["steps"] = steps;
  json count = {{"primes", {c.prime_lo, c.prime_hi}}, {"affine", c.affine}, {"chain_budget", c.chain_budget}};
  if (!c.exclude.empty()) count["exclude"] = c.exclude;
  if (!c.chain_primes.empty()) count["chain_primes"] = c.chain_primes;
  j["count"] = count;
  if (!c.link_fixtures.empty()) j["links"] = c.link_fixtures;
  j["target"] = c.target;
  if (!c.sinks.empty()) j["reports"] = c.sinks;
  return j;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

PipelineConfig load_pipeline_fixture(const std::string& name) {
  auto path = fixture_dir() / "pipelines" / (name + ".json");
  if (!fs::exists(path)) throw UnknownFixture("unknown pipeline '" + name + "'");
  return load_pipeline_config(path);
}

std::vector<std::string> pipeline_fixture_names() {
  std::vector<std::string> out;
  auto dir = fixture_dir() / "pipelines";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

void validate_config(const PipelineConfig& cfg, const FixtureRegistry& reg) {
  static const std::set<std::string> ops{"reduce",     "linear",          "resultant",       "normal_cover",
                                         "subspace",   "to_hypersurface", "complete_square", "fixture"};
  auto where = [&](std::size_t i, const PipelineStep& s) {
    return "pipeline '" + cfg.name + "' step " + std::to_string(i + 1) + " (" + s.op + "): ";
  };
  if (!cfg.start_model.empty() && !reg.has_model(cfg.start_model))
    throw UnknownFixture("pipeline '" + cfg.name + "': unknown start model '" + cfg.start_model + "'");
  if (!cfg.graph.empty()) {
    auto names = graph_fixture_names();
    if (std::find(names.begin(), names.end(), cfg.graph) == names.end())
      throw UnknownFixture("pipeline '" + cfg.name + "': unknown graph '" + cfg.graph + "'");
  }
  for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
    const auto& s = cfg.steps[i];
    if (!ops.count(s.op)) throw ConfigError(where(i, s) + "unknown step");
    if (s.op == "fixture") {
      const std::string name = s.args.value("name", "");
      if (!reg.has_model(name)) throw UnknownFixture(where(i, s) + "unknown fixture '" + name + "'");
      const std::string rel = s.args.value("relation", "match");
      if (rel != "match" && rel != "similar") throw ConfigError(where(i, s) + "relation must be match or similar");
    }
    if (s.op == "to_hypersurface" && s.args.contains("hint") && !reg.has_poly(s.args["hint"].get<std::string>()))
      throw UnknownFixture(where(i, s) + "unknown poly fixture " + s.args["hint"].dump());
  }
  for (const auto& l : cfg.link_fixtures)
    if (!reg.has_model(l)) throw UnknownFixture("pipeline '" + cfg.name + "': unknown link fixture '" + l + "'");
  if (cfg.target.contains("model") && !reg.has_model(cfg.target["model"].get<std::string>()))
    throw UnknownFixture("pipeline '" + cfg.name + "': unknown target model " + cfg.target["model"].dump());
  if (cfg.exclude.count(2) || cfg.prime_lo <= 2) throw ConfigError("pipeline '" + cfg.name + "': primes must exclude 2");
}

// ---------------------------------------------------------------- chain

namespace {

struct ChainState {
  SimilarityChain chain;
  std::string fixture;  // set while the terminal is a registered fixture
  std::optional<Graph> graph;

  const VarietyModel& cur() const { return chain.terminal(); }
  const std::vector<std::string>& names() const { return chain.terminal().vars; }
};

std::size_t find_name(const std::vector<std::string>& names, const std::string& n) {
  auto it = std::find(names.begin(), names.end(), n);
  if (it == names.end()) throw ConfigError("variable " + n + " is not present (have " + join(names, " ") + ")");
  return std::size_t(it - names.begin());
}

// Variables chosen by "edges": [[a,b],...], "vars": [...] or "positions": [...].
std::vector<std::size_t> select_vars(const json& args, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  if (args.contains("edges")) {
    for (const auto& e : args["edges"]) {
      const int a = e.at(0), b = e.at(1);
      auto it = std::find(names.begin(), names.end(), edge_name(a, b));
      if (it == names.end()) it = std::find(names.begin(), names.end(), edge_name(b, a));
      if (it == names.end()) throw ConfigError("edge " + edge_name(a, b) + " is not a live variable");
      out.push_back(std::size_t(it - names.begin()));
    }
  } else if (args.contains("vars")) {
    for (const auto& v : args["vars"]) out.push_back(find_name(names, v.get<std::string>()));
  } else if (args.contains("positions")) {
    for (const auto& v : args["positions"]) {
      const std::size_t i = v.get<std::size_t>();
      if (i >= names.size()) throw ConfigError("position " + std::to_string(i) + " out of range");
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::string> without(const std::vector<std::string>& names, const std::vector<std::size_t>& drop) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (std::find(drop.begin(), drop.end(), i) == drop.end()) out.push_back(names[i]);
  return out;
}

const MultiPoly& hypersurface_of(const VarietyModel& m, const std::string& op) {
  if (!is_hypersurface(m)) throw ConfigError(op + " needs a projective hypersurface, have " + m.ambient.describe());
  return m.equations[0];
}

void start_from_graph(ChainState& st, const PipelineConfig& cfg) {
  Graph g = load_graph_fixture(cfg.graph);
  st.graph = g;
  if (cfg.delete_vertex) g = delete_vertex(g, *cfg.delete_vertex);
  std::array<std::size_t, 5> five{};
  for (std::size_t i = 0; i < 5; ++i) {
    auto [a, b] = cfg.five_invariant[i];
    const int e = g.find_edge(a, b);
    if (e < 0) throw ConfigError("five-invariant edge " + edge_name(a, b) + " is not in the graph");
    five[i] = std::size_t(e);
  }
  const int drop = cfg.drop_vertex.value_or(g.labels.front());
  if (!g.has_vertex(drop)) throw ConfigError("drop vertex " + std::to_string(drop) + " is not in the graph");
  MultiPoly f = five_invariant(g, five, drop);
  std::vector<std::size_t> map(g.edge_count(), 0);
  std::vector<std::string> names;
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    if (std::find(five.begin(), five.end(), i) != five.end()) continue;
    map[i] = k++;
    names.push_back(edge_name(g.edges[i].first, g.edges[i].second));
  }
  f = rename_variables(f, map, k);
  auto m = hypersurface_model(f, "five-invariant");
  m.vars = names;
  st.chain.models.push_back(m);
}

void apply_step(ChainState& st, const PipelineStep& s, const FixtureRegistry& reg) {
  const auto& a = s.args;
  const auto names = st.names();
  if (s.op == "reduce" || s.op == "linear" || s.op == "resultant") {
    const MultiPoly& f = hypersurface_of(st.cur(), s.op);
    auto order = select_vars(a, names);
    if (order.empty()) throw ConfigError("no variables to reduce");
    auto [g, sub] = denominator_chain(f, order, names, st.cur().label);
    for (std::size_t i = 0; i < sub.steps.size(); ++i) {
      if (s.op != "reduce" && to_string(sub.steps[i].kind) != s.op)
        throw ConfigError("step by " + names[order[i]] + " is " + to_string(sub.steps[i].kind) + ", not " + s.op);
      st.chain.append(sub.steps[i], sub.models[i + 1]);
    }
    st.fixture.clear();
  } else if (s.op == "normal_cover") {
    const MultiPoly& f = hypersurface_of(st.cur(), s.op);
    std::vector<std::size_t> pair = select_vars(a, names);
    std::optional<std::pair<VarietyModel, SimilarityStep>> r;
    if (pair.empty() && a.value("auto", false)) {
      for (std::size_t i = 0; i < f.arity() && !r; ++i)
        for (std::size_t j = i + 1; j < f.arity() && !r; ++j) try {
            r = normal_to_weighted_cover(f, i, j, "normal cover");
            pair = {i, j};
          } catch (const MembershipFailure&) {
          }
      if (!r) throw ConfigError("no pair of variables admits a normal reduction");
    } else {
      if (pair.size() != 2) throw ConfigError("normal_cover needs two variables");
      r = normal_to_weighted_cover(f, pair[0], pair[1], "normal cover");
    }
    r->first.vars = without(names, pair);
    st.chain.append(r->second, r->first);
    st.fixture.clear();
  } else if (s.op == "subspace") {
    const MultiPoly& f = hypersurface_of(st.cur(), s.op);
    auto vars = select_vars(a, names);
    auto [m, step] = subspace_reduce(f, vars, "exceptional divisor");
    auto vn = without(names, vars);
    for (auto v : vars) vn.push_back("y" + names[v]);
    m.vars = vn;
    st.chain.append(step, m);
    st.fixture.clear();
  } else if (s.op == "to_hypersurface") {
    const auto& cover = st.cur();
    if (!cover.branch || cover.ambient.kind != Ambient::Kind::WeightedProj)
      throw ConfigError("to_hypersurface needs a weighted double cover");
    MultiPoly hint;
    if (a.contains("hint")) {
      hint = reg.poly(a["hint"].get<std::string>()).poly;
    } else {
      auto h = auto_split_search(*cover.branch, cover.branch->total_degree() / 2 - 1);
      if (!h) throw ConfigError("no product of linear factors of the branch has the needed degree");
      hint = *h;
    }
    auto [m, step] = to_hypersurface(cover, hint, "hypersurface");
    st.chain.append(step, m);
    st.fixture.clear();
  } else if (s.op == "complete_square") {
    const MultiPoly& f = hypersurface_of(st.cur(), s.op);
    auto v = select_vars(a, names);
    if (v.size() != 1) throw ConfigError("complete_square needs one variable");
    auto [m, step] = complete_square(f, v[0], "square completed");
    m.vars = without(names, v);
    st.chain.append(step, m);
    st.fixture.clear();
  } else if (s.op == "fixture") {
    const auto& fx = reg.model(a.at("name").get<std::string>());
    const std::string rel = a.value("relation", "match");
    const auto& cur = st.cur();
    int sign = a.value("sign", 1);
    std::string note;
    if (rel == "match") {
      std::vector<Rational> scales{1};
      if (a.contains("scales")) {
        scales.clear();
        for (const auto& x : a["scales"]) {
          Rational q(x.get<std::string>());
          q.canonicalize();
          scales.push_back(q);
        }
      }
      std::optional<PolyMatch> m;
      bool square_factor = true;
      if (is_hypersurface(cur) && is_hypersurface(fx.model)) {
        m = match_up_to_symmetry(fx.model.equations[0], cur.equations[0], scales);
      } else if (cur.branch && fx.model.branch && cur.ambient.kind == fx.model.ambient.kind && cur.equations.empty() &&
                 fx.model.equations.empty()) {
        m = match_up_to_symmetry(square_normalized(*fx.model.branch), square_normalized(*cur.branch), scales);
        if (m) square_factor = is_square_rational(m->factor);
      }
      if (!m) throw ConfigError("terminal does not match fixture " + fx.name + " up to permutation and scaling");
      if (!square_factor) throw ConfigError("branch matches fixture " + fx.name + " only up to a non-square factor");
      sign = 1;
      note = "equals fixture " + fx.name + " after a coordinate change";
    } else {
      note = "fixture substitution " + fx.name + "; relation asserted, checked numerically";
    }
    st.chain.append(fixture_step(cur, fx.model, sign, note), fx.model);
    st.fixture = fx.name;
  }
}

ChainState build_state(const PipelineConfig& cfg, const FixtureRegistry& reg) {
  validate_config(cfg, reg);
  ChainState st;
  if (!cfg.graph.empty()) {
    try {
      start_from_graph(st, cfg);
    } catch (const std::exception& e) {
      throw PipelineStepError("pipeline '" + cfg.name + "' graph stage: " + e.what(), 0, "graph");
    }
  } else {
    st.chain.models.push_back(reg.model(cfg.start_model).model);
    st.fixture = cfg.start_model;
  }
  for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
    const auto& s = cfg.steps[i];
    try {
      apply_step(st, s, reg);
    } catch (const UnknownFixture&) {
      throw;
    } catch (const std::exception& e) {
      std::vector<std::string> labels;
      for (const auto& m : st.chain.models) labels.push_back(m.label.empty() ? "?" : m.label);
      throw PipelineStepError("pipeline '" + cfg.name + "' step " + std::to_string(i + 1) + " (" + s.op +
                                  "): " + e.what() + "; chain so far: " + join(labels, " -> "),
                              i + 1, s.op);
    }
  }
  return st;
}

}  // namespace

SimilarityChain build_chain(const PipelineConfig& cfg, const FixtureRegistry& reg) {
  return build_state(cfg, reg).chain;
}

// ---------------------------------------------------------------- run

bool PrimeRow::ok() const {
  if (skipped) return true;
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.second; });
}

bool PipelineReport::ok() const {
  if (chain_checked && chain.any_failed()) return false;
  if (!links.checks.empty() && !links.ok()) return false;
  if (calibration && !calibration->found) return false;
  if (congruence && !congruence->ok()) return false;
  bool any = false;
  for (const auto& r : rows) {
    if (!r.ok()) return false;
    any |= !r.skipped && !r.checks.empty();
  }
  return any || (rows.empty() && chain_checked);
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const FixtureRegistry& reg, const RunOptions& opt) {
  ChainState st = build_state(cfg, reg);
  PipelineReport rep;
  rep.pipeline = cfg.name;
  for (const auto& m : st.chain.models) {
    rep.chain_labels.push_back(m.label);
    rep.chain_hashes.push_back(model_hash(m));
    rep.chain_dims.push_back(m.ambient.dimension());
  }
  for (const auto& s : st.chain.steps)
    rep.chain_steps.push_back(to_string(s.kind) + " " + (s.sign_flip > 0 ? "+1" : "-1"));

  if (!cfg.chain_primes.empty()) {
    VerifyOptions vo;
    vo.budget = cfg.chain_budget;
    vo.threads = opt.count.threads;
    vo.cache = opt.cache;
    rep.chain = verify_chain(st.chain, cfg.chain_primes, vo);
    rep.chain_checked = true;
  }

  std::vector<std::string> links = cfg.link_fixtures;
  for (const auto& s : cfg.steps)
    if (s.op == "fixture") links.push_back(s.args.at("name").get<std::string>());
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  rep.links = verify_fixture_links(reg, links, opt, false);

  const json& t = cfg.target;
  if (t.empty()) return rep;

  // target model and its metadata
  VarietyModel model = st.cur();
  const ModelFixture* fx = nullptr;
  if (t.contains("model")) {
    fx = &reg.model(t["model"].get<std::string>());
    model = fx->model;
  } else if (!st.fixture.empty()) {
    fx = &reg.model(st.fixture);
  }
  std::optional<CountFormula> formula;
  if (t.contains("formula")) formula = formula_from_json(t["formula"]);
  else if (fx) formula = fx->formula();
  std::optional<CountFormula> ledger;
  if (t.contains("ledger")) {
    auto led = load_ledger(t["ledger"].get<std::string>());
    ledger = (t.value("ledger_form", "stated") == "itemized" || !led.stated) ? ledger_total(led.events) : *led.stated;
  } else if (fx) {
    ledger = ledger_adjustment(*fx, t.value("ledger_form", "stated"));
  }
  if (ledger) rep.notes.push_back("counts include the resolution ledger " + ledger->describe());
  std::string form = t.value("form", fx ? fx->form() : "");
  const int weight = t.value("weight", fx ? fx->weight() : 4);
  std::set<std::uint32_t> bad = prime_set(t.value("bad_primes", json::array()));
  if (fx) bad.merge(fx->bad_primes());
  bad.merge(denominator_primes(model));
  bad.insert(2);

  std::optional<NewformTable> table;
  if (!form.empty()) {
    try {
      table = load_table_fixture(form);
      rep.table_label = table->label;
      rep.table_provenance = table->provenance;
    } catch (const TableError&) {
      rep.notes.push_back("no offline table for " + form + "; a_p checked against the Weil bound only");
    }
  }

  std::vector<json> ap_checks;
  if (t.contains("ap_checks")) ap_checks = t["ap_checks"].get<std::vector<json>>();
  else if (formula && formula->ap_sign != 0) ap_checks = {"weil"};
  const bool oracle = t.value("oracle", "") == "c2";
  if (oracle && !st.graph) throw ConfigError("pipeline '" + cfg.name + "': the c2 oracle needs a graph");

  const std::uint32_t hi = opt.extended ? std::max<std::uint32_t>(cfg.prime_hi, 200) : cfg.prime_hi;
  for (std::uint32_t p : primes_in(cfg.prime_lo, hi)) {
    PrimeRow row;
    row.p = p;
    if (bad.count(p) || cfg.exclude.count(p)) {
      row.skipped = true;
      row.skip_reason = bad.count(p) ? "bad prime" : "excluded";
      rep.rows.push_back(row);
      continue;
    }
    if (cfg.affine) {
      row.mode = "affine";
      row.count = affine_count(model, p, opt, row.count_hash);
    } else {
      row.count = projective_count(model, p, opt);
      row.count_hash = model_hash(model);
    }
    const Integer adjusted = ledger ? row.count + formula_eval(*ledger, p) : row.count;
    if (formula) {
      if (formula->ap_sign == 0) {
        row.formula_value = formula_eval(*formula, p);
        row.checks.emplace_back("formula", *row.formula_value == adjusted);
      } else {
        if (table && table->has(p)) {
          row.table_ap = table->at(p);
          row.formula_value = formula_eval(*formula, p, *row.table_ap);
          row.checks.emplace_back("formula", *row.formula_value == adjusted);
        }
        row.ap = (adjusted - formula_eval(*formula, p, Integer(0))) * formula->ap_sign;
        for (const auto& c : ap_checks) {
          if (c == "weil") {
            row.checks.emplace_back("weil", within_weil(*row.ap, p, weight));
          } else if (c == "even") {
            row.checks.emplace_back("even", mpz_even_p(row.ap->get_mpz_t()) != 0);
          } else if (c.is_object() && c.contains("cubic")) {
            auto v = c["cubic"].get<std::vector<long>>();
            std::array<Integer, 4> cubic{Integer(v.at(0)), Integer(v.at(1)), Integer(v.at(2)), Integer(v.at(3))};
            row.checks.emplace_back("parity", parity_check(*row.ap, p, cubic));
          } else {
            throw ConfigError("unknown a_p check " + c.dump());
          }
        }
      }
    }
    if (oracle) {
      auto c2 = c2_bruteforce(*st.graph, p, opt.count);
      const Integer P(p);
      row.formula_value = ((-Integer(c2.value)) % P + P) % P;
      row.checks.emplace_back("c2", ((row.count + c2.value) % P) == 0);
    }
    rep.rows.push_back(row);
  }

  if (t.contains("congruence")) {
    if (!table) {
      rep.notes.push_back("congruence requested but no table for '" + form + "'");
      rep.calibration = Calibration{};
    } else {
      std::map<std::uint32_t, Integer> counts;
      for (const auto& r : rep.rows)
        if (!r.skipped) counts[r.p] = ledger ? r.count + formula_eval(*ledger, r.p) : r.count;
      int sign = 1, offset = 0;
      const json& c = t["congruence"];
      if (c == "calibrate") {
        rep.calibration = calibrate_congruence(counts, *table, bad);
        sign = rep.calibration->sign;
        offset = rep.calibration->offset;
        if (rep.calibration->ambiguous) rep.notes.push_back("calibration ambiguous over the whole window");
      } else {
        sign = c.at("sign");
        offset = c.at("offset");
      }
      if (!rep.calibration || rep.calibration->found) {
        rep.congruence = congruence_match(counts, *table, sign, offset, bad);
        for (auto& r : rep.rows) {
          if (r.skipped) continue;
          if (table->has(r.p)) r.table_ap = table->at(r.p);
          const auto& cr = *rep.congruence;
          if (std::count(cr.passes.begin(), cr.passes.end(), r.p)) r.checks.emplace_back("congruence", true);
          if (std::count(cr.failures.begin(), cr.failures.end(), r.p)) r.checks.emplace_back("congruence", false);
        }
      }
    }
  }
  if (!opt.cache) rep.notes.push_back("counts were not cached");
  return rep;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string opt_str(const std::optional<Integer>& v) { return v ? v->get_str() : ""; }

std::string checks_str(const PrimeRow& r) {
  std::vector<std::string> v;
  for (const auto& [k, ok] : r.checks) v.push_back(k + (ok ? "+" : "-"));
  return join(v, " ");
}

}  // namespace

json report_to_json(const PipelineReport& r) {
  json j = {{"pipeline", r.pipeline}, {"ok", r.ok()}};
  json models = json::array();
  for (std::size_t i = 0; i < r.chain_labels.size(); ++i)
    models.push_back({{"label", r.chain_labels[i]}, {"hash", r.chain_hashes[i]}, {"ambient_dim", r.chain_dims[i]}});
  json chain = {{"models", models}, {"steps", r.chain_steps}};
  if (r.chain_checked) {
    json checks = json::array();
    auto put = [&](const StepCheck& c, bool composite) {
      checks.push_back({{"step", c.step},
                        {"p", c.p},
                        {"status", to_string(c.status)},
                        {"in", c.count_in.get_str()},
                        {"out", c.count_out.get_str()},
                        {"composite", composite},
                        {"reason", c.reason}});
    };
    for (const auto& c : r.chain.checks) put(c, false);
    for (const auto& c : r.chain.composite) put(c, true);
    chain["checks"] = checks;
  }
  j["chain"] = chain;
  json links = json::array();
  for (const auto& c : r.links.checks)
    links.push_back({{"fixture", c.fixture},
                     {"kind", c.kind},
                     {"other", c.other},
                     {"p", c.p},
                     {"passed", c.passed},
                     {"lhs", c.lhs.get_str()},
                     {"rhs", c.rhs.get_str()}});
  j["links"] = links;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json x = {{"p", row.p}, {"skipped", row.skipped}};
    if (row.skipped) {
      x["reason"] = row.skip_reason;
    } else {
      x["count"] = row.count.get_str();
      x["mode"] = row.mode;
      x["hash"] = row.count_hash;
      if (row.formula_value) x["formula"] = row.formula_value->get_str();
      if (row.ap) x["ap"] = row.ap->get_str();
      if (row.table_ap) x["table_ap"] = row.table_ap->get_str();
      json checks = json::object();
      for (const auto& [k, ok] : row.checks) checks[k] = ok;
      x["checks"] = checks;
    }
    rows.push_back(x);
  }
  j["rows"] = rows;
  if (r.calibration)
    j["calibration"] = {{"found", r.calibration->found},
                        {"sign", r.calibration->sign},
                        {"offset", r.calibration->offset},
                        {"prime", r.calibration->prime},
                        {"tie_breakers", r.calibration->tie_breakers},
                        {"ambiguous", r.calibration->ambiguous}};
  if (r.congruence)
    j["congruence"] = {{"sign", r.congruence->sign},
                       {"offset", r.congruence->offset},
                       {"passes", r.congruence->passes},
                       {"failures", r.congruence->failures},
                       {"skipped", r.congruence->skipped}};
  if (!r.table_label.empty()) j["table"] = {{"label", r.table_label}, {"provenance", r.table_provenance}};
  j["notes"] = r.notes;
  return j;
}

std::string report_to_markdown(const PipelineReport& r) {
  std::ostringstream o;
  o << "# Pipeline " << r.pipeline << ": " << (r.ok() ? "PASS" : "FAIL") << "\n\n";
  if (!r.chain_labels.empty()) {
    o << "## Chain\n\n";
    for (std::size_t i = 0; i < r.chain_labels.size(); ++i) {
      o << i << ". " << (r.chain_labels[i].empty() ? "(unlabelled)" : r.chain_labels[i]) << " `"
        << r.chain_hashes[i].substr(0, 12) << "`";
      if (i < r.chain_steps.size()) o << " -> " << r.chain_steps[i];
      o << "\n";
    }
    if (r.chain_checked) {
      std::size_t passed = 0, failed = 0, skipped = 0;
      for (const auto& c : r.chain.checks) {
        if (c.status == StepCheck::Status::passed) ++passed;
        else if (c.status == StepCheck::Status::failed) ++failed;
        else ++skipped;
      }
      o << "\nSimilarity checks: " << passed << " passed, " << failed << " failed, " << skipped << " skipped.\n";
    }
    o << "\n";
  }
  if (!r.links.checks.empty()) {
    std::size_t bad = 0;
    for (const auto& c : r.links.checks) bad += !c.passed;
    o << "## Fixture links\n\n" << r.links.checks.size() - bad << " of " << r.links.checks.size() << " checks pass.\n\n";
  }
  if (!r.rows.empty()) {
    o << "## Counts\n\n| p | count | formula | a_p | table a_p | checks |\n|---|---|---|---|---|---|\n";
    for (const auto& row : r.rows) {
      if (row.skipped) {
        o << "| " << row.p << " | " << row.skip_reason << " | | | | |\n";
        continue;
      }
      o << "| " << row.p << " | " << row.count << " | " << opt_str(row.formula_value) << " | " << opt_str(row.ap) << " | "
        << opt_str(row.table_ap) << " | " << checks_str(row) << " |\n";
    }
    o << "\n";
  }
  if (r.calibration && r.calibration->found)
    o << "Calibrated: count = " << r.calibration->offset << (r.calibration->sign > 0 ? " + " : " - ")
      << "a_p (mod p) at p = " << r.calibration->prime << ".\n\n";
  if (!r.table_label.empty()) o << "Table " << r.table_label << " (" << r.table_provenance << ").\n\n";
  for (const auto& n : r.notes) o << "- " << n << "\n";
  return o.str();
}

std::string report_to_csv(const PipelineReport& r) {
  std::ostringstream o;
  o << "p,skipped,count,mode,hash,formula,ap,table_ap,checks,ok\n";
  for (const auto& row : r.rows) {
    o << row.p << "," << (row.skipped ? 1 : 0) << ",";
    if (!row.skipped)
      o << row.count << "," << row.mode << "," << row.count_hash << "," << opt_str(row.formula_value) << ","
        << opt_str(row.ap) << "," << opt_str(row.table_ap) << "," << checks_str(row);
    else
      o << ",,,,,,";
    o << "," << (row.ok() ? 1 : 0) << "\n";
  }
  return o.str();
}

std::string render_report(const PipelineReport& r, const std::string& format) {
  if (format == "json") return report_to_json(r).dump(2) + "\n";
  if (format == "md") return report_to_markdown(r);
  if (format == "csv") return report_to_csv(r);
  throw ConfigError("unknown report format '" + format + "'");
}

}  // namespace phi4
