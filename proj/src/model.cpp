#include "phi4/model.hpp"

#include <openssl/evp.h>

#include <numeric>
#include <sstream>

namespace phi4 {

std::size_t Ambient::coordinate_count() const {
  std::size_t n = 0;
  for (auto d : dims) n += d + 1;
  return n;
}

std::vector<std::size_t> Ambient::group_sizes() const {
  std::vector<std::size_t> g;
  for (auto d : dims) g.push_back(d + 1);
  return g;
}

int Ambient::dimension() const {
  int n = 0;
  for (auto d : dims) n += int(d);
  return n;
}

std::string Ambient::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Proj: out << "P^" << dims.at(0); break;
    case Kind::WeightedProj:
      out << "P(" << weight;
      for (std::size_t i = 0; i <= dims.at(0); ++i) out << ",1";
      out << ")";
      break;
    case Kind::MultiProj:
      for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? " x " : "") << "P^" << dims[i];
      break;
  }
  return out.str();
}

int VarietyModel::dimension() const { return ambient.dimension() - int(equations.size()); }

std::vector<int> multidegree(const MultiPoly& f, const std::vector<std::size_t>& groups) {
  if (f.is_zero()) throw ModelError("zero equation");
  std::vector<int> deg(groups.size(), -1);
  for (const auto& t : f.terms()) {
    std::size_t v = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      int d = 0;
      for (std::size_t k = 0; k < groups[g]; ++k) d += t.mono.e[v++];
      if (deg[g] < 0) deg[g] = d;
      else if (deg[g] != d) throw ModelError("equation is not multihomogeneous: " + to_string(f));
    }
  }
  return deg;
}

void VarietyModel::validate() const {
  const auto groups = ambient.group_sizes();
  const std::size_t n = ambient.coordinate_count();
  if (ambient.kind != Ambient::Kind::MultiProj && ambient.dims.size() != 1)
    throw ModelError("single-factor ambient with several dimensions");
  if (degrees.size() != equations.size()) throw ModelError("missing recorded degrees");
  for (std::size_t i = 0; i < equations.size(); ++i) {
    if (equations[i].arity() != n) throw ModelError("equation arity does not match ambient " + ambient.describe());
    if (multidegree(equations[i], groups) != degrees[i]) throw ModelError("equation degree differs from record");
  }
  if (ambient.kind == Ambient::Kind::WeightedProj) {
    if (!branch) throw ModelError("weighted model needs t^2 = F");
    if (!equations.empty()) throw ModelError("weighted models carry only the branch function");
  }
  if (branch) {
    if (branch->arity() != n) throw ModelError("branch arity does not match ambient");
    auto d = multidegree(*branch, groups);
    if (ambient.kind == Ambient::Kind::WeightedProj) {
      if (d[0] != 2 * ambient.weight) throw ModelError("branch degree must be twice the weight of t");
    } else {
      for (int x : d)
        if (x % 2) throw ModelError("branch function needs even degree in every factor");
    }
  }
}

namespace {

std::vector<std::string> names_or_default(std::vector<std::string> vars, std::size_t n) {
  if (vars.size() == n) return vars;
  return default_var_names(n);
}

}  // namespace

VarietyModel hypersurface_model(const MultiPoly& f, std::string label) {
  return projective_model({f}, std::move(label));
}

VarietyModel projective_model(std::vector<MultiPoly> eqs, std::string label) {
  if (eqs.empty()) throw ModelError("projective model needs an arity; use multiproj_model for bare spaces");
  VarietyModel m;
  std::size_t n = eqs.front().arity();
  if (n == 0) throw ModelError("projective model needs at least one coordinate");
  m.ambient = Ambient::proj(n - 1);
  for (auto& f : eqs) {
    m.degrees.push_back(multidegree(f, m.ambient.group_sizes()));
    m.equations.push_back(std::move(f));
  }
  m.vars = default_var_names(n);
  m.label = std::move(label);
  m.validate();
  return m;
}

VarietyModel weighted_cover_model(const MultiPoly& branch, std::string label) {
  int d = branch.total_degree();
  if (branch.is_zero() || d % 2 || !branch.is_homogeneous())
    throw ModelError("branch function must be homogeneous of even degree");
  VarietyModel m;
  m.ambient = Ambient::weighted(d / 2, branch.arity() - 1);
  m.branch = branch;
  m.vars = default_var_names(branch.arity());
  m.label = std::move(label);
  m.validate();
  return m;
}

VarietyModel multiproj_model(std::vector<std::size_t> dims, std::vector<MultiPoly> eqs,
                             std::optional<MultiPoly> branch, std::string label) {
  VarietyModel m;
  m.ambient = Ambient::multi(std::move(dims));
  for (auto& f : eqs) {
    m.degrees.push_back(multidegree(f, m.ambient.group_sizes()));
    m.equations.push_back(std::move(f));
  }
  m.branch = std::move(branch);
  m.vars = default_var_names(m.ambient.coordinate_count());
  m.label = std::move(label);
  m.validate();
  return m;
}

std::string canonical_form(const VarietyModel& m) {
  std::ostringstream out;
  out << "kind=" << int(m.ambient.kind) << ";weight=" << m.ambient.weight << ";dims=";
  for (auto d : m.ambient.dims) out << d << ",";
  auto put = [&](const MultiPoly& f) {
    out << "den=" << f.denominator().get_str() << "[";
    for (const auto& t : f.terms()) {
      out << t.coeff.get_str() << ":";
      for (std::size_t i = 0; i < f.arity(); ++i) out << int(t.mono.e[i]) << ".";
      out << ";";
    }
    out << "]";
  };
  out << ";eqs=";
  for (const auto& f : m.equations) put(f);
  if (m.branch) {
    out << ";branch=";
    put(*m.branch);
  }
  return out.str();
}

std::string model_hash(const VarietyModel& m) {
  const auto text = canonical_form(m);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

json model_to_json(const VarietyModel& m) {
  json j;
  j["label"] = m.label;
  const char* kind = m.ambient.kind == Ambient::Kind::Proj           ? "proj"
                     : m.ambient.kind == Ambient::Kind::WeightedProj ? "weighted"
                                                                     : "multi";
  j["ambient"] = {{"kind", kind}, {"dims", m.ambient.dims}};
  if (m.ambient.kind == Ambient::Kind::WeightedProj) j["ambient"]["weight"] = m.ambient.weight;
  auto names = names_or_default(m.vars, m.ambient.coordinate_count());
  j["vars"] = names;
  j["equations"] = json::array();
  for (const auto& f : m.equations) j["equations"].push_back(to_string(f, names));
  if (m.branch) j["branch"] = to_string(*m.branch, names);
  return j;
}

VarietyModel model_from_json(const json& j) {
  try {
    VarietyModel m;
    const auto& a = j.at("ambient");
    const auto kind = a.at("kind").get<std::string>();
    auto dims = a.at("dims").get<std::vector<std::size_t>>();
    if (kind == "proj") m.ambient = Ambient::proj(dims.at(0));
    else if (kind == "weighted") m.ambient = Ambient::weighted(a.at("weight").get<int>(), dims.at(0));
    else if (kind == "multi") m.ambient = Ambient::multi(dims);
    else throw ModelError("unknown ambient kind " + kind);
    const std::size_t n = m.ambient.coordinate_count();
    m.vars = j.contains("vars") ? j["vars"].get<std::vector<std::string>>() : default_var_names(n);
    if (m.vars.size() != n) throw ModelError("vars do not match the ambient coordinate count");
    if (j.contains("equations"))
      for (const auto& e : j["equations"]) {
        m.equations.push_back(parse_poly(e.get<std::string>(), m.vars));
        m.degrees.push_back(multidegree(m.equations.back(), m.ambient.group_sizes()));
      }
    if (j.contains("branch")) m.branch = parse_poly(j["branch"].get<std::string>(), m.vars);
    m.label = j.value("label", "");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

}  // namespace phi4
