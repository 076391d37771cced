#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phi4/fixtures.hpp"
#include "phi4/multipoly.hpp"

namespace phi4 {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ambient space of a model. Coordinates are laid out factor by factor:
/// Proj(n) has n+1 coordinates, MultiProj(d_1, ..., d_r) has sum(d_i + 1),
/// WeightedProj(m, n) is P(m, 1, ..., 1) whose weight-m coordinate t is kept
/// implicit; only the n+1 unit-weight coordinates appear in polynomials.
struct Ambient {
  enum class Kind { Proj, WeightedProj, MultiProj };

  Kind kind = Kind::Proj;
  std::vector<std::size_t> dims;  // factor dimensions (one entry unless MultiProj)
  int weight = 1;                 // weight of t for WeightedProj

  static Ambient proj(std::size_t n) { return {Kind::Proj, {n}, 1}; }
  static Ambient weighted(int m, std::size_t n) { return {Kind::WeightedProj, {n}, m}; }
  static Ambient multi(std::vector<std::size_t> dims) { return {Kind::MultiProj, std::move(dims), 1}; }

  std::size_t coordinate_count() const;
  std::vector<std::size_t> group_sizes() const;
  int dimension() const;
  std::string describe() const;
};

/// Equations live on the unit-weight coordinates. When `branch` is set the
/// model is the double cover t^2 = branch of the variety cut out by the
/// equations: for WeightedProj that is the usual hypersurface in P(m,1,...,1),
/// for MultiProj it is a double cover of a multiprojective base.
struct VarietyModel {
  Ambient ambient;
  std::vector<MultiPoly> equations;
  std::vector<std::vector<int>> degrees;  // recorded (multi)degree per equation
  std::optional<MultiPoly> branch;
  std::vector<std::string> vars;
  std::string label;

  int dimension() const;
  bool is_double_cover() const { return branch.has_value(); }
  /// Throws ModelError when an equation is not homogeneous of its recorded
  /// degree or the branch degree does not fit the ambient.
  void validate() const;
};

/// Multidegree of f for the given coordinate groups; throws ModelError if
/// f is not multihomogeneous.
std::vector<int> multidegree(const MultiPoly& f, const std::vector<std::size_t>& groups);

VarietyModel hypersurface_model(const MultiPoly& f, std::string label = {});
VarietyModel projective_model(std::vector<MultiPoly> eqs, std::string label = {});
VarietyModel weighted_cover_model(const MultiPoly& branch, std::string label = {});
VarietyModel multiproj_model(std::vector<std::size_t> dims, std::vector<MultiPoly> eqs,
                             std::optional<MultiPoly> branch = std::nullopt, std::string label = {});

/// Canonical text (sorted terms, declared ambient); labels and variable names
/// are excluded so renaming a fixture keeps its hash.
std::string canonical_form(const VarietyModel& m);
/// Hex SHA-256 of canonical_form.
std::string model_hash(const VarietyModel& m);

json model_to_json(const VarietyModel& m);
/// {"label", "ambient": {"kind": "proj"|"weighted"|"multi", "dims": [...],
/// "weight": m}, "vars": [...], "equations": ["expr", ...], "branch": "expr"}
VarietyModel model_from_json(const json& j);

}  // namespace phi4
