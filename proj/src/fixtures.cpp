#include "phi4/fixtures.hpp"

#include <cstdlib>
#include <fstream>

namespace phi4 {

std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("PHI4_FIXTURES"); env && *env) return env;
#ifdef PHI4_FIXTURE_DIR
  return PHI4_FIXTURE_DIR;
#else
  return "fixtures";
#endif
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FixtureError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FixtureError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FixtureError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

json poly_to_json(const MultiPoly& f, std::span<const std::string> names) {
  json terms = json::array();
  for (const auto& t : f.terms()) {
    std::vector<int> e(f.arity());
    for (std::size_t i = 0; i < f.arity(); ++i) e[i] = t.mono.e[i];
    terms.push_back({{"e", e}, {"c", t.coeff.get_str()}});
  }
  return {{"vars", std::vector<std::string>(names.begin(), names.begin() + f.arity())},
          {"den", f.denominator().get_str()},
          {"terms", terms}};
}

json poly_to_json(const MultiPoly& f) {
  auto names = default_var_names(f.arity());
  return poly_to_json(f, names);
}

std::vector<std::string> poly_vars_from_json(const json& j) {
  if (!j.contains("vars") || !j["vars"].is_array()) throw FixtureError("polynomial without \"vars\"");
  return j["vars"].get<std::vector<std::string>>();
}

MultiPoly poly_from_json(const json& j) {
  auto vars = poly_vars_from_json(j);
  if (j.contains("expr")) return parse_poly(j["expr"].get<std::string>(), vars);
  if (!j.contains("terms")) throw FixtureError("polynomial needs \"terms\" or \"expr\"");
  Integer den = 1;
  if (j.contains("den")) den = Integer(j["den"].get<std::string>());
  std::vector<Term> terms;
  for (const auto& t : j["terms"]) {
    auto e = t.at("e").get<std::vector<int>>();
    if (e.size() != vars.size()) throw FixtureError("exponent vector length differs from vars");
    Monomial m;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] < 0 || e[i] > int(kMaxExponent)) throw FixtureError("exponent out of range");
      m.e[i] = std::uint8_t(e[i]);
    }
    const auto& c = t.at("c");
    terms.push_back({m, c.is_string() ? Integer(c.get<std::string>()) : Integer(c.get<long>())});
  }
  return MultiPoly::from_terms(vars.size(), std::move(terms), den);
}

}  // namespace phi4
