#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phi4/graph.hpp"
#include "phi4/model.hpp"
#include "phi4/multipoly.hpp"

namespace phi4 {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivisibilityFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class RamifiedPrime : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidPrime : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CountOptions {
  unsigned threads = 0;             // 0 = hardware concurrency
  std::uint64_t budget = 4'000'000'000ULL;  // maximum number of enumerated points
};

bool is_prime(std::uint64_t n);
std::vector<std::uint32_t> primes_in(std::uint32_t lo, std::uint32_t hi);

/// Points enumerated by a count over the given coordinate groups (empty =
/// affine space of `arity` coordinates).
long double enumeration_size(const std::vector<std::size_t>& groups, std::size_t arity, std::uint32_t p);

/// Number of common zeros in A^arity over F_p, origin included.
Integer count_affine(std::span<const MultiPoly> eqs, std::size_t arity, std::uint32_t p,
                     const CountOptions& opt = {});
Integer count_affine(std::span<const MultiPoly> eqs, std::uint32_t p, const CountOptions& opt = {});

/// Points of the projective variety in P^(arity-1), enumerated over
/// representatives whose first nonzero coordinate is 1.
Integer count_projective(std::span<const MultiPoly> eqs, std::size_t arity, std::uint32_t p,
                         const CountOptions& opt = {});
Integer count_projective(std::span<const MultiPoly> eqs, std::uint32_t p, const CountOptions& opt = {});

/// Naive enumeration over a product of projective spaces; `groups` lists the
/// number of coordinates of each factor.
Integer count_multiprojective(std::span<const MultiPoly> eqs, const std::vector<std::size_t>& groups,
                              std::uint32_t p, const CountOptions& opt = {});

/// t^2 = F over P^(arity-1): sum over base points of 1 + (F(x)/p).
Integer count_weighted_double_cover(const MultiPoly& F, std::uint32_t p, const CountOptions& opt = {});

/// Independent oracle: nonzero affine solutions of t^2 = F(x), divided by p-1.
Integer count_double_cover_affine(const MultiPoly& F, std::uint32_t p, const CountOptions& opt = {});

/// Dispatches on the ambient; double covers use the character sum.
Integer count_model(const VarietyModel& m, std::uint32_t p, const CountOptions& opt = {});

/// True when the model has the shape P^n x (P^1)^r with every equation of
/// degree 1 in the first factor and in exactly one P^1 factor.
bool has_fiber_shape(const VarietyModel& m);
/// Counts such a model by solving each P^1 fiber over the points of P^n.
Integer count_multiprojective_fibered(const VarietyModel& m, std::uint32_t p);

struct C2Value {
  std::string graph;
  std::uint32_t p = 0;
  std::uint32_t value = 0;
  Integer affine_count;
};

/// Affine count of the Kirchhoff polynomial divided by p^2, reduced mod p.
C2Value c2_bruteforce(const Graph& g, std::uint32_t p, const CountOptions& opt = {});

int legendre(const Integer& a, std::uint32_t p);
/// Square root of a mod p; the smaller of the two representatives.
std::optional<std::uint32_t> sqrt_mod(const Integer& a, std::uint32_t p);
/// 1 if p = 1 mod 8, else 0.
int alpha_8(std::uint32_t p);
/// 0 if (3/p) = -1 or (-3/p) = -1; otherwise 2 if 6 + 4 sqrt(3) is a square mod p, else -2.
int alpha_390(std::uint32_t p);

enum class FrobeniusClass { split3, partial, inert3 };
std::string to_string(FrobeniusClass c);

/// Cubic c[0] + c[1] x + c[2] x^2 + c[3] x^3.
Integer cubic_discriminant(const std::array<Integer, 4>& c);
/// Classified by the number of roots mod p. Throws RamifiedPrime when p
/// divides the discriminant.
FrobeniusClass cubic_frobenius(const std::array<Integer, 4>& c, std::uint32_t p);

}  // namespace phi4
