#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "phi4/modforms.hpp"
#include "phi4/pointcount.hpp"

using namespace phi4;

namespace {

std::vector<long> head(const QSeries& s, std::size_t n) {
  std::vector<long> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(s[i].get_si());
  return v;
}

CountFormula octic5() {
  CountFormula f;
  f.add(1, 3).add(25, 2).add(25, 1).add(1, 0);
  f.ap_sign = -1;
  return f;
}

EtaQuotient eta(std::vector<std::pair<int, int>> f) { return EtaQuotient{std::move(f)}; }

}  // namespace

TEST_CASE("euler product is the pentagonal series") {
  CHECK(head(euler_product(16), 17) == std::vector<long>{1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1, 0});
}

TEST_CASE("cube of the Euler product") {
  auto e = euler_product(20);
  std::vector<Integer> cube(21, 0), sq(21, 0);
  for (std::size_t i = 0; i <= 20; ++i)
    for (std::size_t j = 0; i + j <= 20; ++j) sq[i + j] += e[i] * e[j];
  for (std::size_t i = 0; i <= 20; ++i)
    for (std::size_t j = 0; i + j <= 20; ++j) cube[i + j] += sq[i] * e[j];
  // 1 - 3q + 5q^3 - 7q^6 + 9q^10 - 11q^15
  std::map<std::size_t, long> nz{{0, 1}, {1, -3}, {3, 5}, {6, -7}, {10, 9}, {15, -11}};
  for (std::size_t i = 0; i <= 20; ++i) CHECK(cube[i] == (nz.count(i) ? nz[i] : 0));
}

TEST_CASE("weight-3 level-7 eta product") {
  EtaQuotient q{{{1, 3}, {7, 3}}};
  CHECK(q.weight() == 3);
  CHECK(q.q_shift() == 1);
  auto s = eta_expand(q, 20);
  CHECK(s[1] == 1);
  CHECK(s[2] == -3);
  CHECK(s[3] == 0);
  CHECK(s[5] == 0);
  CHECK(s[4] == 5);  // a_2^2 - (-7/2) 2^2
  CHECK(ap_from_eta(q, 11) == -6);
}

TEST_CASE("weight-3 level-12 eta product has a_5 = 0") {
  EtaQuotient q{{{2, 3}, {6, 3}}};
  CHECK(q.weight() == 3);
  CHECK(ap_from_eta(q, 5) == 0);
  CHECK(ap_from_eta(q, 11) == 0);
}

TEST_CASE("eta input validation") {
  CHECK_THROWS(eta({{1, 3}}).weight());
  CHECK_THROWS_AS(eta({{1, 2}}).q_shift(), NonIntegralShift);
  CHECK_THROWS_AS(eta_expand(eta({{1, 4}, {5, 4}}), 200000), PrecisionExceeded);
  CHECK_THROWS_AS(ap_from_eta(eta({{1, 4}, {5, 4}}), 101, 50), PrecisionExceeded);
}

TEST_CASE("shipped tables agree with the eta products") {
  for (const auto& name : table_fixture_names()) {
    auto t = load_table_fixture(name);
    auto q = shipped_eta(t.weight, t.level);
    REQUIRE(q);
    auto s = eta_expand(*q, 400);
    for (const auto& [p, a] : t.ap) CHECK(s[p] == a);
    CHECK_NOTHROW(validate_weil(t));
  }
}

TEST_CASE("table round-trip through json and disk") {
  auto t = table_from_eta("5.4.a.a", 5, *shipped_eta(4, 5), 100);
  CHECK(t.at(7) == 6);
  CHECK(t.at(13) == -38);
  auto back = table_from_json(table_to_json(t));
  CHECK(back.label == t.label);
  CHECK(back.ap == t.ap);
  auto path = std::filesystem::temp_directory_path() / "phi4_table_roundtrip.json";
  save_newform_table(t, path);
  auto disk = load_newform_table(path);
  CHECK(disk.ap == t.ap);
  CHECK(disk.provenance == t.provenance);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_table_fixture("999.4.z.z"), TableError);
}

TEST_CASE("Weil bound") {
  CHECK(within_weil(22, 5, 4));   // 2 * 5^1.5 = 22.36
  CHECK_FALSE(within_weil(23, 5, 4));
  CHECK(within_weil(-10, 5, 3));  // 2 * 5 = 10
  CHECK_FALSE(within_weil(11, 5, 3));
  NewformTable bad;
  bad.label = "bad";
  bad.weight = 4;
  bad.ap[5] = 100;
  try {
    validate_weil(bad);
    FAIL("expected BoundViolation");
  } catch (const BoundViolation& e) {
    CHECK(e.prime == 5);
  }
}

TEST_CASE("formula values") {
  CountFormula led;
  led.add(43, 2).add(64, 1);
  CHECK(formula_eval(led, 5) == 1395);
  CountFormula b;
  b.add(1, 3).add(7, 2).add(4, 1).add(1, 0);
  CHECK(formula_eval(b, 5) == 321);
  CountFormula tw;
  tw.add(1, 1, legendre_twist(-15));
  CHECK(formula_eval(tw, 7) == -7);
  CHECK(legendre_twist(-15).value(7) == -1);
  CHECK(legendre_twist(-1).value(13) == 1);
  CHECK(legendre_twist(-1).value(11) == -1);
  CHECK_THROWS(formula_eval(octic5(), 7));  // a_p slot without a value
}

TEST_CASE("formula json round-trip and normalization") {
  CountFormula f;
  f.add(3, 2).add(-1, 1, legendre_twist(-6)).add(2, 1, alpha390_twist()).add(1, 2);
  f.ap_sign = -1;
  auto g = formula_from_json(formula_to_json(f));
  CHECK(g == f);
  CHECK(g.normalized().terms.size() == 3);
  for (std::uint32_t p : {7u, 11u, 17u}) CHECK(formula_eval(f, p, Integer(4)) == formula_eval(g, p, Integer(4)));
  CHECK(twist_from_json(twist_to_json(alpha8_twist())) == alpha8_twist());
  CHECK(twist_from_json(nullptr) == Twist{});
}

TEST_CASE("extract_ap inverts formula_eval") {
  auto f = octic5();
  for (std::uint32_t p : {7u, 11u, 13u, 17u}) {
    for (long a : {-20L, 0L, 6L, 21L}) {
      if (!within_weil(a, p, 4)) continue;
      CHECK(extract_ap(formula_eval(f, p, Integer(a)), f, p) == a);
    }
  }
  CHECK_THROWS_AS(extract_ap(formula_eval(f, 5, Integer(1000)), f, 5), BoundViolation);
  CountFormula plain;
  plain.add(1, 1);
  CHECK_THROWS_AS(extract_ap(5, plain, 5), std::invalid_argument);
}

TEST_CASE("parity against a pure cubic field") {
  // x^3 - 2: 7 is inert (2 is not a cube mod 7), 31 splits (4^3 = 2 mod 31)
  std::array<Integer, 4> cubic{-2, 0, 0, 1};
  CHECK(parity_check(3, 7, cubic));
  CHECK_FALSE(parity_check(2, 7, cubic));
  CHECK(parity_check(4, 31, cubic));
  CHECK_FALSE(parity_check(5, 31, cubic));
  CHECK_THROWS_AS(parity_check(1, 3, cubic), RamifiedPrime);
}

TEST_CASE("congruence and calibration") {
  auto t = load_table_fixture("7.3.b.a");
  std::map<std::uint32_t, Integer> counts;
  for (std::uint32_t p : {3u, 5u, 11u, 13u, 17u, 19u, 23u})
    counts[p] = 1 + t.at(p) + Integer(p) * Integer(p) * 3 + Integer(p);
  auto good = congruence_match(counts, t, 1, 1, {7});
  CHECK(good.ok());
  CHECK(good.failures.empty());
  auto wrong = congruence_match(counts, t, -1, 1, {7});
  CHECK_FALSE(wrong.ok());
  CHECK_FALSE(wrong.failures.empty());
  auto cal = calibrate_congruence(counts, t, {7});
  CHECK(cal.found);
  CHECK(cal.sign == 1);
  CHECK(cal.offset == 1);
  CHECK_FALSE(cal.ambiguous);
  std::map<std::uint32_t, Integer> far{{1009, 1}};
  CHECK_THROWS_AS(congruence_match(far, t, 1, 1), EmptyOverlap);
}
