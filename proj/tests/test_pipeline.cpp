#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "phi4/cache.hpp"
#include "phi4/pipeline.hpp"

using namespace phi4;

namespace {

const FixtureRegistry& registry() {
  static const FixtureRegistry reg = FixtureRegistry::load();
  return reg;
}

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

CountFormula poly(long c2, long c1) {
  CountFormula f;
  f.add(c2, 2).add(c1, 1);
  return f.normalized();
}

}  // namespace

TEST_CASE("registry loads and every model is anchored") {
  const auto& reg = registry();
  for (const char* name : {"B", "D_B", "H3", "Q3", "octic78", "octic390"}) CHECK(reg.has_model(name));
  CHECK(reg.has_poly("q1_hint"));
  CHECK(reg.has_model("Q1"));
  CHECK_NOTHROW(reg.validate_anchors());
  CHECK_THROWS_AS(reg.model("no_such_model"), UnknownFixture);
  CHECK(reg.model("H3").bad_primes().count(13));
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS_AS(config_from_json(json::object()), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"name", "x"}, {"steps", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"name":"x","graph":"K4","five_invariant":[[1,2]]})")),
                  ConfigError);
  auto cfg = load_pipeline_fixture("K4_oracle");
  cfg.prime_lo = 2;
  CHECK_THROWS_AS(validate_config(cfg, registry()), ConfigError);
  CHECK_THROWS_AS(load_pipeline_fixture("no_such_pipeline"), ConfigError);
}

TEST_CASE("config json round-trip") {
  for (const auto& name : pipeline_fixture_names()) {
    CAPTURE(name);
    auto cfg = load_pipeline_fixture(name);
    CHECK_NOTHROW(validate_config(cfg, registry()));
    auto j = config_to_json(cfg);
    CHECK(config_to_json(config_from_json(j)) == j);
  }
}

TEST_CASE("unknown fixture in a step is reported with the step") {
  auto cfg = load_pipeline_fixture("3_7");
  PipelineStep bogus;
  bogus.op = "fixture";
  bogus.args = {{"op", "fixture"}, {"name", "Q99"}, {"relation", "match"}};
  cfg.steps.push_back(bogus);
  CHECK_THROWS_AS(validate_config(cfg, registry()), UnknownFixture);
  try {
    run_pipeline(cfg, registry());
    FAIL("expected an error");
  } catch (const PipelineStepError& e) {
    CHECK(e.step == 3);
    CHECK(e.op == "fixture");
    CHECK(std::string(e.what()).find("Q99") != std::string::npos);
  } catch (const UnknownFixture& e) {
    CHECK(std::string(e.what()).find("Q99") != std::string::npos);
  }
}

TEST_CASE("a failing fixture match names the step") {
  auto cfg = load_pipeline_fixture("3_7");
  PipelineStep wrong;
  wrong.op = "fixture";
  wrong.args = {{"op", "fixture"}, {"name", "H3"}, {"relation", "match"}};
  cfg.steps.push_back(wrong);
  try {
    run_pipeline(cfg, registry());
    FAIL("expected PipelineStepError");
  } catch (const PipelineStepError& e) {
    CHECK(e.step == 3);
    CHECK(std::string(e.what()).find("3_7") != std::string::npos);
  }
}

TEST_CASE("(4,13) reductions stop at the six unconsumed edges") {
  auto cfg = load_pipeline_fixture("4_13");
  auto chain = build_chain(cfg, registry());
  const auto it = std::find_if(chain.models.begin(), chain.models.end(),
                               [](const VarietyModel& m) { return m.label == "after (9,11)"; });
  REQUIRE(it != chain.models.end());
  std::vector<std::string> want = {"(6,10)", "(7,9)", "(7,11)", "(8,10)", "(8,11)", "(9,10)"};
  CHECK(it->vars == want);
  CHECK(chain.terminal().label == "H3");
  for (const auto& m : chain.models) CHECK(m.ambient.dimension() <= 12);
}

TEST_CASE("ledgers") {
  auto l13 = load_ledger("4_13");
  CHECK(ledger_total(l13.events) == poly(43, 64));
  REQUIRE(l13.stated);
  CHECK(ledger_total(l13.events) == l13.stated->normalized());

  auto l78 = load_ledger("78");
  CountFormula want78 = poly(32, 53);
  want78.add(1, 1, legendre_twist(-15));
  CHECK(ledger_total(l78.events) == want78.normalized());

  auto reversed = l78.events;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(ledger_total(reversed) == ledger_total(l78.events));

  auto l390 = load_ledger("390");
  REQUIRE(l390.stated);
  auto gap = (*l390.stated - ledger_total(l390.events)).normalized();
  CountFormula six;
  six.add(6, 1);
  CHECK(gap == six.normalized());

  CHECK_THROWS_AS(ledger_event_from_json(json{{"kind", "flop"}}), UnknownEvent);
  for (const auto& e : l78.events) CHECK(ledger_total({ledger_event_from_json(ledger_event_to_json(e))}) ==
                                         ledger_total({e}));
}

TEST_CASE("B and D_B links") {
  RunOptions opt;
  auto rep = verify_fixture_links(registry(), {"B", "D_B"}, opt, false);
  CHECK(rep.ok());
  CHECK(rep.first_failure() == nullptr);
  CHECK(rep.checks.size() >= 8);
}

TEST_CASE("K4 oracle pipeline") {
  auto rep = run_pipeline(load_pipeline_fixture("K4_oracle"), registry());
  CHECK(rep.ok());
  for (const auto& row : rep.rows) {
    CHECK(row.mode == "affine");
    CHECK(row.ok());
  }
}

TEST_CASE("warm cache reproduces the report without enumerating") {
  auto path = temp_file("phi4_pipeline_cache.jsonl");
  auto cfg = load_pipeline_fixture("O5");
  json first, second;
  {
    CountCache cache(path);
    CountStats stats;
    RunOptions opt;
    opt.cache = &cache;
    opt.stats = &stats;
    auto rep = run_pipeline(cfg, registry(), opt);
    CHECK(rep.ok());
    CHECK(stats.enumerations > 0);
    first = report_to_json(rep);
  }
  {
    CountCache cache(path);
    CountStats stats;
    RunOptions opt;
    opt.cache = &cache;
    opt.stats = &stats;
    second = report_to_json(run_pipeline(cfg, registry(), opt));
    CHECK(stats.enumerations == 0);
    CHECK(stats.hits > 0);
  }
  CHECK(first == second);
  std::filesystem::remove(path);
}

TEST_CASE("report renderings") {
  auto rep = run_pipeline(load_pipeline_fixture("O5"), registry());
  auto md = render_report(rep, "md");
  CHECK(md.find("# Pipeline O5: PASS") != std::string::npos);
  CHECK(md.find("5.4.a.a") != std::string::npos);

  auto csv = render_report(rep, "csv");
  std::istringstream in(csv);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == rep.rows.size() + 1);

  auto j = json::parse(render_report(rep, "json"));
  CHECK(j["pipeline"] == "O5");
  CHECK(j["rows"].size() == rep.rows.size());
  CHECK_THROWS_AS(render_report(rep, "xml"), ConfigError);
}

TEST_CASE("weight-3 calibration is recorded") {
  auto rep = run_pipeline(load_pipeline_fixture("3_7"), registry());
  REQUIRE(rep.calibration);
  CHECK(rep.calibration->found);
  CHECK(rep.calibration->sign == 1);
  CHECK(rep.calibration->offset == 1);
  REQUIRE(rep.congruence);
  CHECK(rep.congruence->ok());
}
