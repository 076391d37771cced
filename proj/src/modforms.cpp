#include "phi4/modforms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "phi4/pointcount.hpp"

namespace phi4 {

int EtaQuotient::weight() const {
  int s = 0;
  for (auto [d, e] : factors) s += e;
  if (s % 2) throw std::invalid_argument("eta quotient " + describe() + " has odd exponent sum");
  return s / 2;
}

int EtaQuotient::q_shift() const {
  long s = 0;
  for (auto [d, e] : factors) {
    if (d <= 0) throw std::invalid_argument("eta dilation must be positive");
    s += long(d) * e;
  }
  if (s % 24 || s <= 0) throw NonIntegralShift("eta quotient " + describe() + " has q-shift " + std::to_string(s) + "/24");
  return int(s / 24);
}

std::string EtaQuotient::describe() const {
  std::ostringstream o;
  for (std::size_t i = 0; i < factors.size(); ++i) o << (i ? " " : "") << factors[i].first << "^" << factors[i].second;
  return o.str();
}

QSeries euler_product(std::size_t N) {
  QSeries s;
  s.coeffs.assign(N + 1, 0);
  // sum over k of (-1)^k q^(k(3k-1)/2), k running over all integers
  for (std::size_t k = 0;; ++k) {
    const std::size_t e1 = k * (3 * k - 1) / 2, e2 = k * (3 * k + 1) / 2;
    if (k > 0 && e1 > N) break;
    const int sign = k % 2 ? -1 : 1;
    if (e1 <= N) s.coeffs[e1] = sign;
    if (k > 0 && e2 <= N) s.coeffs[e2] = sign;
  }
  return s;
}

namespace {

// a *= (sparse series b evaluated at q^d)
void mul_dilated(std::vector<Integer>& a, const std::vector<std::pair<std::size_t, int>>& b, std::size_t d) {
  const std::size_t N = a.size() - 1;
  std::vector<Integer> out(N + 1, 0);
  for (std::size_t i = 0; i <= N; ++i) {
    if (a[i] == 0) continue;
    for (auto [e, c] : b) {
      const std::size_t k = i + e * d;
      if (k > N) break;
      if (c > 0) out[k] += a[i];
      else out[k] -= a[i];
    }
  }
  a.swap(out);
}

// a /= (sparse series b at q^d); b has constant term 1
void div_dilated(std::vector<Integer>& a, const std::vector<std::pair<std::size_t, int>>& b, std::size_t d) {
  const std::size_t N = a.size() - 1;
  for (std::size_t k = 0; k <= N; ++k)
    for (auto [e, c] : b) {
      if (e == 0) continue;
      if (e * d > k) break;
      if (c > 0) a[k] -= a[k - e * d];
      else a[k] += a[k - e * d];
    }
}

}  // namespace

QSeries eta_expand(const EtaQuotient& q, std::size_t N) {
  if (N > 100000) throw PrecisionExceeded("eta expansion precision is limited to 1e5");
  const std::size_t shift = std::size_t(q.q_shift());
  QSeries out;
  out.coeffs.assign(N + 1, 0);
  if (shift > N) return out;
  const std::size_t M = N - shift;
  std::vector<Integer> prod(M + 1, 0);
  prod[0] = 1;
  auto euler = euler_product(M);
  std::vector<std::pair<std::size_t, int>> sparse;
  for (std::size_t i = 0; i <= M; ++i)
    if (euler.coeffs[i] != 0) sparse.emplace_back(i, euler.coeffs[i] > 0 ? 1 : -1);
  for (auto [d, e] : q.factors)
    for (int k = 0; k < std::abs(e); ++k) {
      if (e > 0) mul_dilated(prod, sparse, std::size_t(d));
      else div_dilated(prod, sparse, std::size_t(d));
    }
  for (std::size_t i = 0; i <= M; ++i) out.coeffs[i + shift] = prod[i];
  return out;
}

Integer ap_from_eta(const EtaQuotient& q, std::uint32_t p, std::size_t precision) {
  if (precision && p > precision) throw PrecisionExceeded("p=" + std::to_string(p) + " beyond the expansion precision");
  return eta_expand(q, std::max<std::size_t>(p, precision))[p];
}

const Integer& NewformTable::at(std::uint32_t p) const {
  auto it = ap.find(p);
  if (it == ap.end()) throw TableError("table " + label + " has no a_" + std::to_string(p));
  return it->second;
}

bool within_weil(const Integer& ap, std::uint32_t p, int weight) {
  // a^2 <= 4 p^(k-1)
  Integer bound = 4;
  for (int i = 0; i < weight - 1; ++i) bound *= p;
  return Integer(ap * ap) <= bound;
}

void validate_weil(const NewformTable& t) {
  for (const auto& [p, a] : t.ap)
    if (!within_weil(a, p, t.weight))
      throw BoundViolation("table " + t.label + ": |a_" + std::to_string(p) + "| = " + Integer(abs(a)).get_str() +
                               " exceeds the Weil bound",
                           p);
}

json table_to_json(const NewformTable& t) {
  json ap = json::object();
  for (const auto& [p, a] : t.ap) ap[std::to_string(p)] = a.get_str();
  json j = {{"label", t.label}, {"level", t.level}, {"weight", t.weight}, {"ap", ap}};
  if (!t.provenance.empty()) j["provenance"] = t.provenance;
  return j;
}

NewformTable table_from_json(const json& j) {
  try {
    NewformTable t;
    t.label = j.at("label").get<std::string>();
    t.level = j.at("level").get<int>();
    t.weight = j.at("weight").get<int>();
    t.provenance = j.value("provenance", "ingested");
    for (const auto& [k, v] : j.at("ap").items()) {
      const unsigned long p = std::stoul(k);
      if (!is_prime(p)) throw TableError("table " + t.label + ": key " + k + " is not prime");
      t.ap[std::uint32_t(p)] = Integer(v.is_string() ? v.get<std::string>() : std::to_string(v.get<long long>()));
    }
    if (t.weight < 2) throw TableError("table " + t.label + ": bad weight");
    validate_weil(t);
    return t;
  } catch (const json::exception& e) {
    throw TableError(std::string("malformed newform table: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw TableError(std::string("malformed newform table: ") + e.what());
  }
}

NewformTable load_newform_table(const std::filesystem::path& path) {
  try {
    return table_from_json(read_json_file(path));
  } catch (const FixtureError& e) {
    throw TableError(e.what());
  }
}

void save_newform_table(const NewformTable& t, const std::filesystem::path& path) {
  write_json_file(path, table_to_json(t));
}

NewformTable load_table_fixture(const std::string& label) {
  auto path = fixture_dir() / "tables" / (label + ".json");
  if (!std::filesystem::exists(path)) throw TableError("no newform table for " + label);
  return load_newform_table(path);
}

std::vector<std::string> table_fixture_names() {
  std::vector<std::string> out;
  auto dir = fixture_dir() / "tables";
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

NewformTable table_from_eta(const std::string& label, int level, const EtaQuotient& q, std::uint32_t max_prime) {
  NewformTable t;
  t.label = label;
  t.level = level;
  t.weight = q.weight();
  t.provenance = "eta:" + q.describe();
  auto s = eta_expand(q, max_prime);
  for (auto p : primes_in(2, max_prime)) t.ap[p] = s[p];
  validate_weil(t);
  return t;
}

NewformTable fetch_newform(const std::string& label, const std::filesystem::path& dest, const std::string& base,
                           std::uint32_t max_prime) {
  httplib::Client cli(base);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(20);
  auto res = cli.Get("/api/mf_newforms/?label=" + label + "&_format=json");
  if (!res) throw NetworkUnavailable("cannot reach " + base + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw TableError("GET " + label + " returned HTTP " + std::to_string(res->status));
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TableError(std::string("unparsable response: ") + e.what());
  }
  if (!body.contains("data") || body["data"].empty()) throw TableError("unknown newform label " + label);
  const auto& rec = body["data"][0];
  NewformTable t;
  t.label = label;
  t.level = rec.at("level").get<int>();
  t.weight = rec.at("weight").get<int>();
  t.provenance = "ingested:" + base;
  if (rec.value("dim", 1) != 1) throw TableError(label + " is not a rational newform");
  const auto& traces = rec.at("traces");
  for (auto p : primes_in(2, max_prime)) {
    if (p > traces.size()) break;
    const auto& v = traces[p - 1];
    t.ap[p] = Integer(v.is_string() ? v.get<std::string>() : std::to_string(v.get<long long>()));
  }
  validate_weil(t);
  save_newform_table(t, dest);
  return t;
}

std::optional<EtaQuotient> shipped_eta(int weight, int level) {
  if (weight == 4 && level == 5) return EtaQuotient{{{1, 4}, {5, 4}}};
  if (weight == 4 && level == 6) return EtaQuotient{{{1, 2}, {2, 2}, {3, 2}, {6, 2}}};
  if (weight == 3 && level == 7) return EtaQuotient{{{1, 3}, {7, 3}}};
  if (weight == 3 && level == 8) return EtaQuotient{{{1, 2}, {2, 1}, {4, 1}, {8, 2}}};
  if (weight == 3 && level == 12) return EtaQuotient{{{2, 3}, {6, 3}}};
  return std::nullopt;
}

int Twist::value(std::uint32_t p) const {
  switch (kind) {
    case Kind::none: return 1;
    case Kind::legendre: return legendre(Integer(d), p);
    case Kind::alpha8: return alpha_8(p);
    case Kind::alpha390: return alpha_390(p);
  }
  return 1;
}

std::string Twist::describe() const {
  switch (kind) {
    case Kind::none: return "";
    case Kind::legendre: return "(" + std::to_string(d) + "/p)";
    case Kind::alpha8: return "alpha8(p)";
    case Kind::alpha390: return "alpha390(p)";
  }
  return "";
}

Twist legendre_twist(long d) { return {Twist::Kind::legendre, d}; }
Twist alpha8_twist() { return {Twist::Kind::alpha8, 0}; }
Twist alpha390_twist() { return {Twist::Kind::alpha390, 0}; }

CountFormula& CountFormula::add(const Integer& c, int power, Twist t) {
  terms.push_back({c, power, t});
  return *this;
}

CountFormula& CountFormula::operator+=(const CountFormula& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  ap_sign += o.ap_sign;
  return *this;
}

CountFormula operator-(CountFormula a, const CountFormula& b) {
  for (auto t : b.terms) {
    t.coeff = -t.coeff;
    a.terms.push_back(t);
  }
  a.ap_sign -= b.ap_sign;
  return a;
}

namespace {

auto twist_key(const Twist& t) { return std::make_pair(int(t.kind), t.d); }

}  // namespace

CountFormula CountFormula::normalized() const {
  std::map<std::tuple<int, int, long>, Integer> acc;
  for (const auto& t : terms) {
    auto [k, d] = twist_key(t.twist);
    acc[{-t.power, k, d}] += t.coeff;
  }
  CountFormula out;
  out.ap_sign = ap_sign;
  for (const auto& [key, c] : acc) {
    if (c == 0) continue;
    auto [mp, k, d] = key;
    out.terms.push_back({c, -mp, {Twist::Kind(k), d}});
  }
  return out;
}

bool operator==(const CountFormula& a, const CountFormula& b) {
  auto x = a.normalized(), y = b.normalized();
  if (x.ap_sign != y.ap_sign || x.terms.size() != y.terms.size()) return false;
  for (std::size_t i = 0; i < x.terms.size(); ++i) {
    const auto &s = x.terms[i], &t = y.terms[i];
    if (s.coeff != t.coeff || s.power != t.power || !(s.twist == t.twist)) return false;
  }
  return true;
}

std::string CountFormula::describe() const {
  auto n = normalized();
  std::ostringstream o;
  bool first = true;
  for (const auto& t : n.terms) {
    Integer c = t.coeff;
    o << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    c = abs(c);
    std::string tw = t.twist.describe();
    std::string pw = t.power == 0 ? "" : t.power == 1 ? "p" : "p^" + std::to_string(t.power);
    std::string body = tw.empty() ? pw : (pw.empty() ? tw : tw + pw);
    if (c != 1 || body.empty()) o << c.get_str();
    o << body;
    first = false;
  }
  if (n.ap_sign) o << (n.ap_sign < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << (std::abs(n.ap_sign) != 1 ? std::to_string(std::abs(n.ap_sign)) : "") << "a_p";
  if (first && !n.ap_sign) o << "0";
  return o.str();
}

json twist_to_json(const Twist& t) {
  switch (t.kind) {
    case Twist::Kind::none: return nullptr;
    case Twist::Kind::legendre: return {{"legendre", t.d}};
    case Twist::Kind::alpha8: return "alpha8";
    case Twist::Kind::alpha390: return "alpha390";
  }
  return nullptr;
}

Twist twist_from_json(const json& w) {
  if (w.is_null()) return {};
  if (w.is_object() && w.contains("legendre")) return legendre_twist(w.at("legendre").get<long>());
  if (w == "alpha8") return alpha8_twist();
  if (w == "alpha390") return alpha390_twist();
  throw std::invalid_argument("unknown twist " + w.dump());
}

json formula_to_json(const CountFormula& f) {
  json terms = json::array();
  for (const auto& t : f.terms) {
    json j = {{"c", t.coeff.get_str()}, {"pow", t.power}};
    if (t.twist.kind != Twist::Kind::none) j["twist"] = twist_to_json(t.twist);
    terms.push_back(j);
  }
  return {{"terms", terms}, {"ap_sign", f.ap_sign}};
}

CountFormula formula_from_json(const json& j) {
  try {
    CountFormula f;
    f.ap_sign = j.value("ap_sign", 0);
    for (const auto& t : j.at("terms")) {
      Twist tw = t.contains("twist") ? twist_from_json(t["twist"]) : Twist{};
      const auto& c = t.at("c");
      f.add(Integer(c.is_string() ? c.get<std::string>() : std::to_string(c.get<long long>())), t.at("pow").get<int>(), tw);
    }
    return f;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed formula: ") + e.what());
  }
}

Integer formula_eval(const CountFormula& f, std::uint32_t p, std::optional<Integer> ap) {
  if (p == 2 || !is_prime(p)) throw InvalidPrime("formulas are evaluated at odd primes");
  Integer s = 0;
  for (const auto& t : f.terms) {
    if (t.power < 0) throw std::invalid_argument("negative power in a count formula");
    Integer pp;
    mpz_ui_pow_ui(pp.get_mpz_t(), p, unsigned(t.power));
    s += t.coeff * t.twist.value(p) * pp;
  }
  if (f.ap_sign) {
    if (!ap) throw MissingAp("formula needs a_" + std::to_string(p));
    s += f.ap_sign * *ap;
  }
  return s;
}

Integer extract_ap(const Integer& count, const CountFormula& f, std::uint32_t p, int weight) {
  if (f.ap_sign != 1 && f.ap_sign != -1) throw std::invalid_argument("formula has no a_p slot");
  CountFormula rest = f;
  rest.ap_sign = 0;
  Integer ap = (count - formula_eval(rest, p)) * f.ap_sign;
  if (!within_weil(ap, p, weight))
    throw BoundViolation("extracted a_" + std::to_string(p) + " = " + ap.get_str() + " violates the Weil bound", p);
  return ap;
}

bool parity_check(const Integer& ap, std::uint32_t p, const std::array<Integer, 4>& cubic) {
  const bool odd = mpz_odd_p(ap.get_mpz_t());
  return odd == (cubic_frobenius(cubic, p) == FrobeniusClass::inert3);
}

CongruenceReport congruence_match(const std::map<std::uint32_t, Integer>& counts, const NewformTable& table, int sign,
                                  int offset, const std::set<std::uint32_t>& bad) {
  CongruenceReport r;
  r.sign = sign;
  r.offset = offset;
  bool overlap = false;
  for (const auto& [p, c] : counts) {
    if (!table.has(p)) continue;
    overlap = true;
    if (bad.count(p) || p == 2) {
      r.skipped.push_back(p);
      continue;
    }
    Integer d = c - offset - sign * table.at(p);
    (d % p == 0 ? r.passes : r.failures).push_back(p);
  }
  if (!overlap) throw EmptyOverlap("no prime is shared by the counts and table " + table.label);
  return r;
}

Calibration calibrate_congruence(const std::map<std::uint32_t, Integer>& counts, const NewformTable& table,
                                 const std::set<std::uint32_t>& bad) {
  std::vector<std::pair<int, int>> alive = {{1, 0}, {1, 1}, {-1, 0}, {-1, 1}};
  Calibration cal;
  for (const auto& [p, c] : counts) {
    if (p == 2 || bad.count(p) || !table.has(p)) continue;
    std::vector<std::pair<int, int>> keep;
    for (auto [s, o] : alive) {
      Integer d = c - o - s * table.at(p);
      if (d % p == 0) keep.emplace_back(s, o);
    }
    if (cal.prime == 0) {
      cal.prime = p;
    } else {
      if (keep.empty()) break;  // the frozen choice fails here; leave that to the match
      cal.tie_breakers.push_back(p);
    }
    alive = keep;
    if (alive.size() <= 1) break;
  }
  if (alive.empty()) return cal;
  cal.found = true;
  cal.sign = alive[0].first;
  cal.offset = alive[0].second;
  cal.ambiguous = alive.size() > 1;
  return cal;
}

}  // namespace phi4
