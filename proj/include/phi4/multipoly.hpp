#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace phi4 {

using Integer = mpz_class;
using Rational = mpq_class;

inline constexpr std::size_t kMaxVars = 32;
inline constexpr unsigned kMaxExponent = 255;

class NotDivisible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DenominatorNotInvertible : public std::runtime_error {
 public:
  DenominatorNotInvertible(std::uint32_t p, const std::string& what)
      : std::runtime_error(what), prime(p) {}
  std::uint32_t prime;
};

class ArityMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exponent vector. Comparison is lexicographic with x0 most significant,
/// which is the term order used everywhere (leading term = largest).
struct Monomial {
  std::array<std::uint8_t, kMaxVars> e{};

  unsigned degree() const {
    unsigned d = 0;
    for (auto x : e) d += x;
    return d;
  }
  unsigned operator[](std::size_t v) const { return e[v]; }

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return std::memcmp(a.e.data(), b.e.data(), kMaxVars) == 0;
  }
  friend bool operator<(const Monomial& a, const Monomial& b) {
    return std::memcmp(a.e.data(), b.e.data(), kMaxVars) < 0;
  }
  friend bool operator>(const Monomial& a, const Monomial& b) { return b < a; }

  Monomial operator*(const Monomial& o) const;
  /// True if this monomial is divisible by `o`.
  bool divisible_by(const Monomial& o) const;
  Monomial operator/(const Monomial& o) const;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept;
};

struct Term {
  Monomial mono;
  Integer coeff;
};

/// Sparse multivariate polynomial over Q, stored as an integer numerator
/// polynomial and one positive global denominator. Terms are kept sorted by
/// descending monomial, with no zero coefficients, and
/// gcd(content, denominator) == 1.
class MultiPoly {
 public:
  MultiPoly() = default;
  explicit MultiPoly(std::size_t arity);

  static MultiPoly constant(std::size_t arity, const Rational& c);
  static MultiPoly variable(std::size_t arity, std::size_t v);
  static MultiPoly monomial(std::size_t arity, const Monomial& m, const Rational& c = 1);
  /// Builds from unsorted terms; duplicate monomials are merged.
  static MultiPoly from_terms(std::size_t arity, std::vector<Term> terms,
                              const Integer& denominator = 1);

  std::size_t arity() const { return arity_; }
  const std::vector<Term>& terms() const { return terms_; }
  const Integer& denominator() const { return den_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;

  Rational coeff(const Monomial& m) const;
  Rational leading_coeff() const;

  /// -1 for the zero polynomial.
  int degree_in(std::size_t v) const;
  int total_degree() const;
  int min_total_degree() const;
  bool is_homogeneous() const;
  /// Homogeneous of degree d_i in each variable group (groups partition a
  /// prefix of the variables, in order).
  bool is_multihomogeneous(std::span<const std::size_t> group_sizes,
                           std::span<const int> degrees) const;
  bool involves(std::size_t v) const { return degree_in(v) > 0; }

  MultiPoly operator-() const;
  MultiPoly& operator+=(const MultiPoly& o);
  MultiPoly& operator-=(const MultiPoly& o);
  MultiPoly& operator*=(const MultiPoly& o);
  MultiPoly& operator*=(const Rational& c);

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
  friend MultiPoly operator*(MultiPoly a, const Rational& c) { return a *= c; }
  friend MultiPoly operator*(const Rational& c, MultiPoly a) { return a *= c; }

  friend bool operator==(const MultiPoly& a, const MultiPoly& b);

  MultiPoly pow(unsigned k) const;

  /// Integer numerator with content removed, sign making the leading
  /// coefficient positive. Zero stays zero.
  MultiPoly primitive() const;

  /// Exact rational evaluation.
  Rational evaluate(std::span<const Rational> point) const;

 private:
  friend class PolyBuilder;
  void normalize();
  static MultiPoly add_scaled(const MultiPoly& a, const MultiPoly& b, int sign);

  std::size_t arity_ = 0;
  std::vector<Term> terms_;
  Integer den_ = 1;
};

/// f = q * g, or throws NotDivisible.
MultiPoly exact_div(const MultiPoly& f, const MultiPoly& g);
bool divides(const MultiPoly& g, const MultiPoly& f);

/// s with s*s == f and positive leading coefficient, if one exists over Q.
std::optional<MultiPoly> poly_sqrt(const MultiPoly& f);

/// Coefficients of v^0, v^1, ...; the coefficient polynomials keep the same
/// arity and do not involve v.
std::vector<MultiPoly> coeffs_in_var(const MultiPoly& f, std::size_t v);

/// B^2 - 4AC for f = A v^2 + B v + C. Throws std::domain_error if deg_v f > 2.
MultiPoly disc_wrt(const MultiPoly& f, std::size_t v);

MultiPoly substitute_zero(const MultiPoly& f, std::span<const std::size_t> vars);

/// Drops variable v (which must not occur) and shifts later indices down.
MultiPoly remove_variable(const MultiPoly& f, std::size_t v);

/// Reindexes variables: variable i of f becomes variable map[i] of the result.
MultiPoly rename_variables(const MultiPoly& f, std::span<const std::size_t> map,
                           std::size_t new_arity);

/// Substitutes polynomial images[i] (all of arity `new_arity`) for variable i.
MultiPoly compose(const MultiPoly& f, std::span<const MultiPoly> images);

/// Polynomial over F_p with coefficients in [0, p).
struct ResiduePoly {
  std::uint32_t p = 0;
  std::size_t arity = 0;
  std::vector<Monomial> monos;
  std::vector<std::uint32_t> coeffs;

  std::uint32_t evaluate(std::span<const std::uint32_t> point) const;
  int degree_in(std::size_t v) const;
  int total_degree() const;
};

/// Maps coefficients to F_p. Throws DenominatorNotInvertible when p divides
/// the denominator.
ResiduePoly reduce_mod_p(const MultiPoly& f, std::uint32_t p);

/// Default variable names x0, x1, ...
std::vector<std::string> default_var_names(std::size_t arity, const std::string& stem = "x");

std::string to_string(const MultiPoly& f, std::span<const std::string> names);
std::string to_string(const MultiPoly& f);

/// Parses an expression such as "-x0^2 x1 x2/4 + (x1+x2)(x0 - 3x3)".
/// Juxtaposition is multiplication; "x_1" and "x1" are the same name.
/// Division is only by integer literals.
MultiPoly parse_poly(const std::string& text, std::span<const std::string> names);

}  // namespace phi4
