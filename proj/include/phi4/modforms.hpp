#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "phi4/fixtures.hpp"
#include "phi4/multipoly.hpp"

namespace phi4 {

class NonIntegralShift : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PrecisionExceeded : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class BoundViolation : public std::runtime_error {
 public:
  BoundViolation(const std::string& what, std::uint32_t p) : std::runtime_error(what), prime(p) {}
  std::uint32_t prime;
};

class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NetworkUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingAp : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyOverlap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// prod_d eta(d tau)^(e_d), written as a list of (d, e).
struct EtaQuotient {
  std::vector<std::pair<int, int>> factors;

  int weight() const;   // throws if sum e is odd
  int q_shift() const;  // throws NonIntegralShift
  std::string describe() const;  // "1^4 5^4"
};

/// Coefficients a_0..a_N of a q-expansion.
struct QSeries {
  std::vector<Integer> coeffs;

  std::size_t precision() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  const Integer& operator[](std::size_t n) const { return coeffs.at(n); }
};

/// prod_{n>=1} (1 - q^n) up to q^N via the pentagonal number theorem.
QSeries euler_product(std::size_t N);
QSeries eta_expand(const EtaQuotient& q, std::size_t N);
/// Coefficient of q^p; computed at precision max(p, precision).
Integer ap_from_eta(const EtaQuotient& q, std::uint32_t p, std::size_t precision = 0);

struct NewformTable {
  std::string label;
  int level = 0;
  int weight = 0;
  std::map<std::uint32_t, Integer> ap;
  std::string provenance;  // "eta:<factors>" or "ingested"

  bool has(std::uint32_t p) const { return ap.count(p) > 0; }
  const Integer& at(std::uint32_t p) const;
};

bool within_weil(const Integer& ap, std::uint32_t p, int weight);
/// Throws BoundViolation at the first prime outside 2 p^((k-1)/2).
void validate_weil(const NewformTable& t);

json table_to_json(const NewformTable& t);
NewformTable table_from_json(const json& j);
NewformTable load_newform_table(const std::filesystem::path& path);
void save_newform_table(const NewformTable& t, const std::filesystem::path& path);
/// Looks up fixtures/tables/<label>.json.
NewformTable load_table_fixture(const std::string& label);
std::vector<std::string> table_fixture_names();

NewformTable table_from_eta(const std::string& label, int level, const EtaQuotient& q, std::uint32_t max_prime);

/// GET <base>/api/mf_newforms/?label=<label>&_format=json and materialize the
/// a_p (from the trace field) into `dest`. Throws NetworkUnavailable when the
/// host cannot be reached, TableError for unknown labels.
NewformTable fetch_newform(const std::string& label, const std::filesystem::path& dest,
                           const std::string& base = "https://www.lmfdb.org", std::uint32_t max_prime = 200);

/// The multiplicative eta quotients shipped for (weight, level), if any.
std::optional<EtaQuotient> shipped_eta(int weight, int level);

struct Twist {
  enum class Kind { none, legendre, alpha8, alpha390 };
  Kind kind = Kind::none;
  long d = 0;  // for legendre

  int value(std::uint32_t p) const;
  std::string describe() const;
  friend bool operator==(const Twist&, const Twist&) = default;
};

struct FormulaTerm {
  Integer coeff;
  int power = 0;
  Twist twist;
};

/// sum coeff * twist(p) * p^power + ap_sign * a_p
struct CountFormula {
  std::vector<FormulaTerm> terms;
  int ap_sign = 0;

  CountFormula& add(const Integer& c, int power, Twist t = {});
  CountFormula& operator+=(const CountFormula& o);
  friend CountFormula operator+(CountFormula a, const CountFormula& b) { return a += b; }
  friend CountFormula operator-(CountFormula a, const CountFormula& b);
  /// Merges terms with equal (power, twist) and drops zeros; terms are
  /// sorted by descending power, then twist.
  CountFormula normalized() const;
  std::string describe() const;
  friend bool operator==(const CountFormula& a, const CountFormula& b);
};

Twist legendre_twist(long d);
Twist alpha8_twist();
Twist alpha390_twist();

/// {"legendre": d}, "alpha8", "alpha390"; null for no twist.
json twist_to_json(const Twist& t);
Twist twist_from_json(const json& j);
json formula_to_json(const CountFormula& f);
CountFormula formula_from_json(const json& j);

Integer formula_eval(const CountFormula& f, std::uint32_t p, std::optional<Integer> ap = std::nullopt);
/// The a_p making formula_eval(f, p, a_p) == count; Weil bound checked.
Integer extract_ap(const Integer& count, const CountFormula& f, std::uint32_t p, int weight = 4);

/// (a_p odd) == (p inert in the cubic field). Throws RamifiedPrime.
bool parity_check(const Integer& ap, std::uint32_t p, const std::array<Integer, 4>& cubic);

/// count == offset + sign * a_p (mod p) at every prime of counts that is in
/// the table and not in `bad`.
struct CongruenceReport {
  int sign = 1;
  int offset = 0;
  std::vector<std::uint32_t> passes, failures, skipped;

  bool ok() const { return failures.empty() && !passes.empty(); }
};
CongruenceReport congruence_match(const std::map<std::uint32_t, Integer>& counts, const NewformTable& table,
                                  int sign, int offset, const std::set<std::uint32_t>& bad = {});

/// Picks (sign, offset) at the smallest good prime. When several choices fit
/// there, later primes are used one at a time until one choice is left; the
/// result then stays frozen.
struct Calibration {
  int sign = 1;
  int offset = 0;
  std::uint32_t prime = 0;
  std::vector<std::uint32_t> tie_breakers;
  bool ambiguous = false;  // more than one choice survived every prime
  bool found = false;
};
Calibration calibrate_congruence(const std::map<std::uint32_t, Integer>& counts, const NewformTable& table,
                                 const std::set<std::uint32_t>& bad = {});

}  // namespace phi4
