#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "phi4/cache.hpp"
#include "phi4/fixtures.hpp"
#include "phi4/graph.hpp"
#include "phi4/model.hpp"
#include "phi4/modforms.hpp"
#include "phi4/reduction.hpp"

namespace phi4 {

/// Malformed or inconsistent pipeline configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownFixture : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LinkFailure : public std::runtime_error {
 public:
  LinkFailure(const std::string& what, std::string fixture, std::uint32_t p)
      : std::runtime_error(what), fixture(std::move(fixture)), prime(p) {}
  std::string fixture;
  std::uint32_t prime;
};

/// A step of run_pipeline failed; `what` names the pipeline, step and chain so far.
class PipelineStepError : public std::runtime_error {
 public:
  PipelineStepError(const std::string& what, std::size_t step, std::string op)
      : std::runtime_error(what), step(step), op(std::move(op)) {}
  std::size_t step;
  std::string op;
};

class UnknownEvent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelFixture {
  std::string name;
  VarietyModel model;
  json meta;

  std::set<std::uint32_t> bad_primes() const;
  std::optional<CountFormula> formula() const;
  std::string form() const;  // empty if none
  int weight() const;        // meta weight, default 4
};

struct PolyFixture {
  std::string name;
  MultiPoly poly;
  std::vector<std::string> vars;
};

class FixtureRegistry {
 public:
  /// Reads <root>/models/*.json and <root>/polys/*.json.
  static FixtureRegistry load(const std::filesystem::path& root = fixture_dir());

  bool has_model(const std::string& name) const { return models_.count(name) > 0; }
  bool has_poly(const std::string& name) const { return polys_.count(name) > 0; }
  const ModelFixture& model(const std::string& name) const;  // throws UnknownFixture
  const PolyFixture& poly(const std::string& name) const;
  std::vector<std::string> model_names() const;
  std::vector<std::string> poly_names() const;

  /// Each model: declared degree matches its equations (or branch), the
  /// variable count matches the ambient, and meta names a source plus at
  /// least one check, formula or form. Throws FixtureError naming the model.
  void validate_anchors() const;

 private:
  std::map<std::string, ModelFixture> models_;
  std::map<std::string, PolyFixture> polys_;
};

struct RunOptions {
  CountCache* cache = nullptr;
  CountOptions count;
  bool extended = false;  // replaces count windows [a, b] by [a, 200]
  CountStats* stats = nullptr;
};

/// One evaluated fixture check at one prime.
struct LinkCheck {
  std::string fixture, kind, other;
  std::uint32_t p = 0;
  bool passed = false;
  Integer lhs, rhs;  // the two sides compared (mod p for congruences)
  std::string detail;
};

struct LinkReport {
  std::vector<LinkCheck> checks;

  bool ok() const;
  const LinkCheck* first_failure() const;
};

/// Evaluates the meta checks of the named model fixtures. Check kinds:
/// formula (exact count), difference (exact [X] - [other]), similar
/// ([X]-1 = sign twist ([other]-1) mod p), ap_parity and ap_parity_cubic
/// (on a_p extracted with the fixture formula). With `throw_on_failure` the
/// first failing prime raises LinkFailure.
LinkReport verify_fixture_links(const FixtureRegistry& reg, const std::vector<std::string>& fixtures,
                                const RunOptions& opt = {}, bool throw_on_failure = true);

struct LedgerEvent {
  std::string kind;  // fourfold_point, curve_blowup, meet_adjustment, small_resolution, character, custom
  long count = 1;
  int d = 0;                  // curve_blowup
  int sign = -1;              // meet_adjustment
  Integer coeff = 1;          // character
  int power = 1;              // character
  Twist twist;                // character
  CountFormula custom;        // custom
  std::string note;
};

LedgerEvent ledger_event_from_json(const json& j);  // throws UnknownEvent
json ledger_event_to_json(const LedgerEvent& e);
/// Sum of the events' contributions; normalized, so the order of events is irrelevant.
CountFormula ledger_total(const std::vector<LedgerEvent>& events);

struct Ledger {
  std::string name;
  std::vector<LedgerEvent> events;
  std::optional<CountFormula> stated;  // the closed form the itemization should reach
};
Ledger ledger_from_json(const json& j);
/// fixtures/ledgers/<name>.json
Ledger load_ledger(const std::string& name);

struct PipelineStep {
  std::string op;  // reduce, linear, resultant, normal_cover, subspace, to_hypersurface, complete_square, fixture
  json args;
};

struct PipelineConfig {
  std::string name;
  // Either a graph recipe or a starting fixture model.
  std::string graph;
  std::optional<int> delete_vertex;
  std::vector<std::pair<int, int>> five_invariant;
  std::optional<int> drop_vertex;
  std::string start_model;
  std::vector<PipelineStep> steps;
  // count plan
  std::uint32_t prime_lo = 5, prime_hi = 50;
  std::set<std::uint32_t> exclude;
  bool affine = false;  // count the terminal polynomial in affine space
  std::vector<std::uint32_t> chain_primes;  // signed similarity checks; empty = none
  std::uint64_t chain_budget = 2'000'000;
  std::vector<std::string> link_fixtures;
  // target
  json target;
  std::vector<std::string> sinks;  // report paths; extension selects the format
};

PipelineConfig config_from_json(const json& j);  // throws ConfigError
json config_to_json(const PipelineConfig& c);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// fixtures/pipelines/<name>.json
PipelineConfig load_pipeline_fixture(const std::string& name);
std::vector<std::string> pipeline_fixture_names();

/// Checks that every fixture and poly named by the steps and target is
/// registered and that the prime range excludes 2. Throws ConfigError.
void validate_config(const PipelineConfig& cfg, const FixtureRegistry& reg);

struct PrimeRow {
  std::uint32_t p = 0;
  bool skipped = false;
  std::string skip_reason;
  Integer count;
  std::string count_hash;  // model hash of the cache record
  std::string mode = "projective";
  std::optional<Integer> formula_value;
  std::optional<Integer> ap;        // extracted from the count
  std::optional<Integer> table_ap;  // from the newform table
  std::vector<std::pair<std::string, bool>> checks;

  bool ok() const;
};

struct PipelineReport {
  std::string pipeline;
  std::vector<std::string> chain_labels;
  std::vector<std::string> chain_hashes;
  std::vector<int> chain_dims;           // ambient dimension per model
  std::vector<std::string> chain_steps;  // "kind sign" per step
  ChainReport chain;
  bool chain_checked = false;
  LinkReport links;
  std::vector<PrimeRow> rows;
  std::optional<Calibration> calibration;
  std::optional<CongruenceReport> congruence;
  std::string table_label, table_provenance;
  std::vector<std::string> notes;

  bool ok() const;
};

PipelineReport run_pipeline(const PipelineConfig& cfg, const FixtureRegistry& reg, const RunOptions& opt = {});

/// Builds only the similarity chain (graph, five-invariant, steps).
SimilarityChain build_chain(const PipelineConfig& cfg, const FixtureRegistry& reg);

json report_to_json(const PipelineReport& r);
std::string report_to_markdown(const PipelineReport& r);
std::string report_to_csv(const PipelineReport& r);
/// "json", "md" or "csv"; throws ConfigError otherwise.
std::string render_report(const PipelineReport& r, const std::string& format);

}  // namespace phi4
