#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "phi4/cache.hpp"
#include "phi4/model.hpp"
#include "phi4/multipoly.hpp"
#include "phi4/pointcount.hpp"

namespace phi4 {

class DegreeNotOne : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StepNotApplicable : public std::runtime_error {
 public:
  StepNotApplicable(const std::string& what, std::size_t variable, MultiPoly current)
      : std::runtime_error(what), variable(variable), current(std::move(current)) {}
  std::size_t variable;
  MultiPoly current;
};

class MembershipFailure : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class HintDoesNotDivide : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WrongDegree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StepKind {
  linear,
  resultant,
  subspace,
  to_weighted_cover,
  complete_square,
  to_hypersurface,
  fixture_substitution
};
std::string to_string(StepKind k);

/// One prime-similarity [V]-1 = sign ([W]-1) mod p between consecutive models.
struct SimilarityStep {
  StepKind kind = StepKind::linear;
  std::string input_label, output_label;
  int sign_flip = -1;  // (-1)^(dim W - dim V)
  std::set<std::uint32_t> verified_primes;
  std::set<std::uint32_t> invalid_primes;  // primes where the step says nothing
  std::string note;
};

/// models[i] -> models[i+1] via steps[i].
struct SimilarityChain {
  std::vector<VarietyModel> models;
  std::vector<SimilarityStep> steps;

  int composite_sign() const;
  void append(SimilarityStep step, VarietyModel to);
  const VarietyModel& terminal() const { return models.back(); }
};

int dimension_sign(const VarietyModel& from, const VarietyModel& to);

/// f = a v + b  ->  a, with v removed from the variables.
std::pair<MultiPoly, SimilarityStep> linear_reduce(const MultiPoly& f, std::size_t v);

/// f of degree 2 in v: square root of the v-discriminant (v removed), or
/// nullopt if the discriminant is not a square over Q.
std::optional<std::pair<MultiPoly, SimilarityStep>> resultant_reduce(const MultiPoly& f, std::size_t v);

/// Applies linear or resultant reduction to each variable of `order` in turn
/// (indices refer to the variables of the input f). Every intermediate
/// polynomial is made primitive. `names` labels the models.
std::pair<MultiPoly, SimilarityChain> denominator_chain(const MultiPoly& f, const std::vector<std::size_t>& order,
                                                        std::vector<std::string> names = {},
                                                        const std::string& label = "start");

/// Exceptional divisor of the blowup of P^n along {x_i = 0, i in vars}: the
/// part of f of degree exactly k = |vars| in those variables, with y_j
/// substituted for the j-th chosen variable. Ambient P^(n-k) x P^(k-1); for
/// deg f = n+1 the bidegree is (n-k+1, k).
std::pair<VarietyModel, SimilarityStep> subspace_reduce(const MultiPoly& f, const std::vector<std::size_t>& vars,
                                                        const std::string& label = {});

/// f in (x_a, x_b)^2: t^2 = c1^2 - 4 c0 c2 where c0, c1, c2 are the
/// coefficients of x_a^2, x_a x_b, x_b^2 at x_a = x_b = 0; the base keeps the
/// remaining variables in order.
std::pair<VarietyModel, SimilarityStep> normal_to_weighted_cover(const MultiPoly& f, std::size_t a, std::size_t b,
                                                                 const std::string& label = {});

/// t^2 = g h  ->  v0^2 g - h = 0, with v0 the new first coordinate.
std::pair<VarietyModel, SimilarityStep> to_hypersurface(const VarietyModel& cover, const MultiPoly& g_hint,
                                                        const std::string& label = {});

/// f of degree 2 in v  ->  t^2 = disc_v(f) over the other variables.
std::pair<VarietyModel, SimilarityStep> complete_square(const MultiPoly& f, std::size_t v,
                                                        const std::string& label = {});

/// Step connecting two shipped models whose relation is asserted, not derived.
SimilarityStep fixture_step(const VarietyModel& from, const VarietyModel& to, int sign, std::string note);

/// Primitive linear forms with coefficients in [-bound, bound] dividing D,
/// listed with multiplicity.
std::vector<MultiPoly> linear_factors(const MultiPoly& D, int bound = 8);

/// Product of linear factors of D of the given degree; distinct factors are
/// preferred, then lexicographic order of the factor list.
std::optional<MultiPoly> auto_split_search(const MultiPoly& D, int target_degree, int bound = 8);

/// Searches variable permutations and scalings x_i -> c_i x_i (c_i in
/// `scales`) making g a constant multiple of f. Returns the permuted,
/// rescaled g on success.
struct PolyMatch {
  std::vector<std::size_t> permutation;  // variable i of g becomes variable permutation[i]
  std::vector<Rational> scales;          // applied after permuting
  Rational factor;                       // f = factor * transformed g
};
std::optional<PolyMatch> match_up_to_symmetry(const MultiPoly& f, const MultiPoly& g,
                                              const std::vector<Rational>& scales = {1});

struct StepCheck {
  enum class Status { passed, failed, skipped_budget, skipped_invalid };
  std::size_t step = 0;
  std::uint32_t p = 0;
  Status status = Status::skipped_budget;
  Integer count_in, count_out;
  std::string reason;
};
std::string to_string(StepCheck::Status s);

struct ChainReport {
  std::vector<StepCheck> checks;
  std::vector<StepCheck> composite;  // first vs last model with the composite sign

  bool any_failed() const;
  /// Every (step, prime) pair was either checked and passed or invalid for the step.
  bool step_verified(std::size_t step) const;
};

struct VerifyOptions {
  std::uint64_t budget = 50'000'000;  // maximum enumeration size per count
  unsigned threads = 0;
  CountCache* cache = nullptr;
};

/// Checks the signed congruence for every step at every prime; steps whose
/// models exceed the budget are reported as skipped, never passed.
ChainReport verify_chain(SimilarityChain& chain, const std::vector<std::uint32_t>& primes,
                         const VerifyOptions& opt = {});

/// Finds G on P^n x (P^1)^r, homogeneous of degree degrees[0] in x and
/// degrees[k] in the k-th pair of P^1 coordinates, with
/// G(x; a_1(x), b_1(x); ...; a_r(x), b_r(x)) = D(x), by exact linear algebra.
/// Free unknowns are set to zero. Returns nullopt when no such G exists.
std::optional<MultiPoly> lift_through_graph(const MultiPoly& D, const std::vector<std::pair<MultiPoly, MultiPoly>>& fibers,
                                            const std::vector<int>& degrees);

/// Clears denominators and removes square factors of the content; the
/// double cover t^2 = F only sees F up to squares.
MultiPoly square_normalized(const MultiPoly& f);

/// Primes dividing a denominator of any equation of the model.
std::set<std::uint32_t> denominator_primes(const VarietyModel& m);

}  // namespace phi4
