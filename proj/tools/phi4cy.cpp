// Command-line front end: counts, reductions, pipelines, verification suites, newform tables.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "phi4/acceptance.hpp"
#include "phi4/modforms.hpp"
#include "phi4/pipeline.hpp"
#include "phi4/pointcount.hpp"

using namespace phi4;
namespace fs = std::filesystem;

namespace {

struct Globals {
  unsigned threads = 0;
  std::string cache_path;
  bool no_cache = false;
  std::string format = "md";
  std::unique_ptr<CountCache> cache;
  CountStats stats;

  RunOptions run(bool extended = false) {
    RunOptions r;
    r.cache = cache.get();
    r.count.threads = threads;
    r.extended = extended;
    r.stats = &stats;
    return r;
  }
};

std::vector<std::uint32_t> parse_primes(const std::string& spec) {
  std::vector<std::uint32_t> out;
  auto dots = spec.find("..");
  try {
    if (dots != std::string::npos) {
      out = primes_in(std::stoul(spec.substr(0, dots)), std::stoul(spec.substr(dots + 2)));
    } else {
      std::stringstream ss(spec);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoul(tok));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad prime list '" + spec + "'; use A..B or p1,p2,...");
  }
  for (auto p : out)
    if (!is_prime(p) || p == 2) throw ConfigError(std::to_string(p) + " is not an odd prime");
  if (out.empty()) throw ConfigError("no primes in '" + spec + "'");
  return out;
}

VarietyModel resolve_model(const std::string& arg, const FixtureRegistry& reg, std::string& name) {
  if (fs::exists(arg)) {
    json j = read_json_file(arg);
    name = fs::path(arg).stem().string();
    if (reg.has_model(name) && !j.contains("ambient")) return reg.model(name).model;
    return model_from_json(j);
  }
  name = fs::path(arg).stem().string();
  return reg.model(name).model;  // fixtures/B.json and B both resolve to the fixture
}

PipelineConfig resolve_config(const std::string& arg) {
  if (fs::exists(arg)) return load_pipeline_config(arg);
  return load_pipeline_fixture(fs::path(arg).stem().string());
}

void write_sink(const PipelineReport& r, const std::string& path) {
  auto ext = fs::path(path).extension().string();
  std::string fmt = ext == ".json" ? "json" : ext == ".csv" ? "csv" : "md";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_report(r, fmt);
}

int cmd_count(Globals& g, const std::string& model_arg, const std::string& primes, bool affine) {
  auto reg = FixtureRegistry::load();
  std::string name;
  auto m = resolve_model(model_arg, reg, name);
  const std::string hash = model_hash(m);
  json rows = json::array();
  for (auto p : parse_primes(primes)) {
    Integer c;
    const std::string mode = affine ? "affine" : "projective";
    std::optional<CountRecord> hit;
    if (g.cache) hit = g.cache->get(hash, p, mode);
    if (hit) {
      c = hit->count;
      ++g.stats.hits;
    } else if (affine) {
      c = count_affine(m.equations, m.ambient.coordinate_count(), p, {g.threads});
      ++g.stats.enumerations;
      if (g.cache) g.cache->put({hash, p, c, mode});
    } else {
      c = cached_count(g.cache.get(), m, p, {g.threads}, &g.stats);
    }
    rows.push_back({{"model", name}, {"hash", hash}, {"p", p}, {"mode", mode}, {"count", c.get_str()}});
  }
  if (g.format == "json") {
    std::cout << rows.dump(2) << "\n";
  } else if (g.format == "csv") {
    std::cout << "model,hash,p,mode,count\n";
    for (const auto& r : rows)
      std::cout << r["model"].get<std::string>() << "," << r["hash"].get<std::string>() << "," << r["p"] << ","
                << r["mode"].get<std::string>() << "," << r["count"].get<std::string>() << "\n";
  } else {
    std::cout << "| p | count |\n|---|---|\n";
    for (const auto& r : rows) std::cout << "| " << r["p"] << " | " << r["count"].get<std::string>() << " |\n";
    std::cout << "\nmodel " << name << " `" << hash.substr(0, 16) << "`\n";
  }
  return 0;
}

int cmd_reduce(Globals& g, const std::string& cfg_arg, const std::string& verify) {
  auto reg = FixtureRegistry::load();
  auto cfg = resolve_config(cfg_arg);
  auto chain = build_chain(cfg, reg);
  json out = {{"pipeline", cfg.name}, {"composite_sign", chain.composite_sign()}};
  json models = json::array();
  for (std::size_t i = 0; i < chain.models.size(); ++i) {
    const auto& m = chain.models[i];
    json x = {{"label", m.label}, {"ambient", m.ambient.describe()}, {"vars", m.vars}, {"hash", model_hash(m)}};
    if (i < chain.steps.size())
      x["next"] = {{"kind", to_string(chain.steps[i].kind)}, {"sign", chain.steps[i].sign_flip}, {"note", chain.steps[i].note}};
    models.push_back(x);
  }
  out["models"] = models;
  bool ok = true;
  if (!verify.empty()) {
    VerifyOptions vo;
    vo.cache = g.cache.get();
    vo.threads = g.threads;
    vo.budget = cfg.chain_budget;
    auto rep = verify_chain(chain, parse_primes(verify), vo);
    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back({{"step", c.step}, {"p", c.p}, {"status", to_string(c.status)}});
    out["checks"] = checks;
    ok = !rep.any_failed();
  }
  if (g.format == "json") {
    std::cout << out.dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < chain.models.size(); ++i) {
      const auto& m = chain.models[i];
      std::cout << i << ". " << (m.label.empty() ? "(unlabelled)" : m.label) << "  " << m.ambient.describe() << "  ["
                << m.vars.size() << " vars]\n";
      if (i < chain.steps.size())
        std::cout << "   -> " << to_string(chain.steps[i].kind) << " (" << (chain.steps[i].sign_flip > 0 ? "+1" : "-1")
                  << ") " << chain.steps[i].note << "\n";
    }
    if (out.contains("checks"))
      for (const auto& c : out["checks"])
        std::cout << "step " << c["step"] << " p=" << c["p"] << " " << c["status"].get<std::string>() << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_pipeline(Globals& g, const std::string& cfg_arg, bool extended, const std::vector<std::string>& reports) {
  auto reg = FixtureRegistry::load();
  auto cfg = resolve_config(cfg_arg);
  auto rep = run_pipeline(cfg, reg, g.run(extended));
  std::cout << render_report(rep, g.format);
  for (const auto& s : cfg.sinks) write_sink(rep, s);
  for (const auto& s : reports) write_sink(rep, s);
  std::cerr << "counts: " << g.stats.enumerations << " enumerated, " << g.stats.hits << " from cache\n";
  return rep.ok() ? 0 : 1;
}

int cmd_verify(Globals& g, const std::string& suite) {
  if (suite == "acceptance-core" || suite == "acceptance-extended" || suite == "extended") {
    AcceptanceOptions opt;
    opt.extended = suite != "acceptance-core";
    opt.cache = g.cache.get();
    opt.threads = g.threads;
    opt.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
    auto res = run_acceptance(opt);
    std::size_t failed = 0;
    for (const auto& r : res) failed += !r.passed;
    std::cout << res.size() - failed << "/" << res.size() << " criteria pass\n";
    return failed ? 1 : 0;
  }
  if (suite == "fixtures") {
    auto reg = FixtureRegistry::load();
    reg.validate_anchors();
    auto rep = verify_fixture_links(reg, reg.model_names(), g.run(), false);
    std::size_t bad = 0;
    for (const auto& c : rep.checks) {
      bad += !c.passed;
      if (!c.passed || g.format != "md")
        std::cout << (c.passed ? "ok   " : "FAIL ") << c.fixture << " " << c.kind << (c.other.empty() ? "" : " " + c.other)
                  << " p=" << c.p << " " << c.lhs << " vs " << c.rhs << "\n";
    }
    std::cout << reg.model_names().size() << " fixtures anchored; " << rep.checks.size() - bad << "/" << rep.checks.size()
              << " link checks pass\n";
    return bad ? 1 : 0;
  }
  throw ConfigError("unknown suite '" + suite + "' (acceptance-core, acceptance-extended, fixtures)");
}

EtaQuotient eta_for(const std::string& label, const std::string& eta_spec) {
  EtaQuotient q;
  if (!eta_spec.empty()) {
    std::stringstream ss(eta_spec);
    std::string tok;
    while (ss >> tok) {
      auto hat = tok.find('^');
      if (hat == std::string::npos) throw ConfigError("eta factor '" + tok + "' is not d^e");
      q.factors.emplace_back(std::stoi(tok.substr(0, hat)), std::stoi(tok.substr(hat + 1)));
    }
    return q;
  }
  int level = 0, weight = 0;
  if (std::sscanf(label.c_str(), "%d.%d", &level, &weight) != 2) throw ConfigError("label '" + label + "' is not N.k...");
  auto s = shipped_eta(weight, level);
  if (!s) throw ConfigError("no eta quotient shipped for " + label + "; pass --eta");
  return *s;
}

int cmd_forms_fetch(Globals&, const std::string& label, std::string dest, const std::string& base, std::uint32_t max_p) {
  if (dest.empty()) dest = (fixture_dir() / "tables").string();
  auto path = fs::path(dest) / (label + ".json");
  auto t = fetch_newform(label, path, base, max_p);
  std::cout << "stored " << t.ap.size() << " a_p for " << t.label << " in " << path.string() << "\n";
  return 0;
}

int cmd_forms_expand(Globals& g, const std::string& label, const std::string& eta_spec, std::size_t terms) {
  auto q = eta_for(label, eta_spec);
  auto s = eta_expand(q, terms);
  if (g.format == "json") {
    json c = json::array();
    for (const auto& x : s.coeffs) c.push_back(x.get_str());
    std::cout << json{{"label", label}, {"eta", q.describe()}, {"coeffs", c}}.dump(2) << "\n";
  } else if (g.format == "csv") {
    std::cout << "n,a_n\n";
    for (std::size_t n = 0; n < s.coeffs.size(); ++n) std::cout << n << "," << s.coeffs[n] << "\n";
  } else {
    std::cout << label << " = eta " << q.describe() << ", weight " << q.weight() << "\n\n| p | a_p |\n|---|---|\n";
    for (std::size_t n = 2; n < s.coeffs.size(); ++n)
      if (is_prime(n)) std::cout << "| " << n << " | " << s.coeffs[n] << " |\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phi4cy: graph hypersurfaces, reductions, point counts and modular forms"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  if (const char* env = std::getenv("PHI4_CACHE")) g.cache_path = env;
  else g.cache_path = ".phi4-cache.jsonl";
  app.add_option("--threads", g.threads, "counting threads (0 = all cores)");
  app.add_option("--cache", g.cache_path, "count cache file (JSON lines)");
  app.add_flag("--no-cache", g.no_cache, "do not read or write the count cache");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "md", "csv"}));

  std::string model_arg, primes = "5..50";
  bool affine = false;
  auto* count = app.add_subcommand("count", "count points of a model fixture or model file");
  count->add_option("model", model_arg, "fixture name or model JSON")->required();
  count->add_option("--primes", primes, "A..B or p1,p2,...");
  count->add_flag("--affine", affine, "affine count of the equations");

  std::string cfg_arg, verify_primes;
  auto* reduce = app.add_subcommand("reduce", "build the reduction chain of a pipeline config");
  reduce->add_option("config", cfg_arg, "pipeline fixture name or JSON path")->required();
  reduce->add_option("--verify", verify_primes, "primes for signed similarity checks");

  bool extended = false;
  std::vector<std::string> reports;
  auto* pipeline = app.add_subcommand("pipeline", "run a pipeline config");
  pipeline->add_option("config", cfg_arg, "pipeline fixture name or JSON path")->required();
  pipeline->add_flag("--extended", extended, "count on [lo, 200]");
  pipeline->add_option("--report", reports, "write the report here (.json, .md, .csv)");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", suite, "acceptance-core | acceptance-extended | fixtures")->required();
  verify->add_flag("--extended", extended, "same as suite acceptance-extended");

  auto* forms = app.add_subcommand("forms", "newform tables");
  forms->require_subcommand(1);
  std::string label, dest, base = "https://www.lmfdb.org", eta_spec;
  std::uint32_t max_p = 200;
  std::size_t terms = 100;
  auto* fetch = forms->add_subcommand("fetch", "download a_p into a table");
  fetch->add_option("label", label, "newform label, e.g. 13.4.a.a")->required();
  fetch->add_option("--dest", dest, "directory for <label>.json (default: fixture tables)");
  fetch->add_option("--base", base, "API base URL");
  fetch->add_option("--max-prime", max_p, "largest prime stored");
  auto* expand = forms->add_subcommand("expand", "q-expansion of a shipped or given eta quotient");
  expand->add_option("label", label, "newform label, e.g. 5.4.a.a")->required();
  expand->add_option("--eta", eta_spec, "factors such as \"1^4 5^4\"");
  expand->add_option("--terms", terms, "precision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (!g.no_cache) g.cache = std::make_unique<CountCache>(g.cache_path);
    if (verify->parsed() && extended && suite == "acceptance-core") suite = "acceptance-extended";
    if (count->parsed()) return cmd_count(g, model_arg, primes, affine);
    if (reduce->parsed()) return cmd_reduce(g, cfg_arg, verify_primes);
    if (pipeline->parsed()) return cmd_pipeline(g, cfg_arg, extended, reports);
    if (verify->parsed()) return cmd_verify(g, suite);
    if (fetch->parsed()) return cmd_forms_fetch(g, label, dest, base, max_p);
    if (expand->parsed()) return cmd_forms_expand(g, label, eta_spec, terms);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FixtureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
