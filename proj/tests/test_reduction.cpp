#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "phi4/graph.hpp"
#include "phi4/reduction.hpp"

using namespace phi4;

namespace {

MultiPoly P(const std::string& s, std::size_t n) { return parse_poly(s, default_var_names(n)); }

Integer proj_count(const MultiPoly& f, std::uint32_t p) { return count_model(hypersurface_model(f), p); }

bool similar(const Integer& v, const Integer& w, int sign, std::uint32_t p) {
  Integer d = (v - 1) - sign * (w - 1);
  return d % p == 0;
}

MultiPoly random_form(std::mt19937& rng, std::size_t n, int d, int terms) {
  std::uniform_int_distribution<int> coef(-3, 3), var(0, int(n) - 1);
  std::vector<Term> t;
  for (int k = 0; k < terms; ++k) {
    Monomial m;
    for (int j = 0; j < d; ++j) ++m.e[var(rng)];
    if (int c = coef(rng)) t.push_back({m, c});
  }
  Monomial m;
  m.e[0] = std::uint8_t(d);
  t.push_back({m, 1});
  return MultiPoly::from_terms(n, t);
}

const char* kQ1 =
    "-x_0^2x_1x_2x_3/4 + x_1x_2^3x_3 - x_0^2x_1x_3^2/4 + x_1x_2^2x_3^2 - 4x_1^2x_2^2x_4 - 4x_1x_2^3x_4 "
    "- x_0^2x_1x_3x_4/4 - x_0^2x_2x_3x_4/4 - 4x_1^2x_2x_3x_4 - 3x_1x_2^2x_3x_4 + x_2^3x_3x_4 "
    "- x_0^2x_3^2x_4/4 + x_2^2x_3^2x_4 - 4x_1^2x_2x_4^2 - 4x_1x_2^2x_4^2 - 4x_1^2x_3x_4^2 - 4x_1x_2x_3x_4^2";

}  // namespace

TEST_CASE("linear reduction") {
  auto [a, st] = linear_reduce(P("x0 x1 + x2 x3", 4), 0);
  CHECK(a == P("x0", 3));
  CHECK(st.kind == StepKind::linear);
  CHECK(st.sign_flip == -1);
  CHECK_THROWS_AS(linear_reduce(P("x0^2 + x1 x2", 3), 0), DegreeNotOne);

  std::mt19937 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    // f = x0 * g + h with g, h free of x0
    const std::vector<std::size_t> shift{1, 2, 3};
    auto g = rename_variables(random_form(rng, 3, 2, 5), shift, 4);
    auto h = rename_variables(random_form(rng, 3, 3, 6), shift, 4);
    auto f = P("x0", 4) * g + h;
    if (f.degree_in(0) != 1) continue;
    auto [w, s] = linear_reduce(f, 0);
    for (std::uint32_t p : {5u, 7u}) CHECK(similar(proj_count(f, p), proj_count(w, p), s.sign_flip, p));
  }
}

TEST_CASE("resultant reduction") {
  auto f = P("(x0 + x1)(2x0 + x2)", 3);
  auto r = resultant_reduce(f, 0);
  REQUIRE(r);
  auto want = P("x1 - 2x0", 2);
  CHECK((r->first == want || r->first == -want));
  CHECK(r->second.kind == StepKind::resultant);

  CHECK_FALSE(resultant_reduce(P("x0^2 + x1 x2", 3), 0));
  CHECK_THROWS_AS(resultant_reduce(P("x0 x1 + x2", 3), 0), StepNotApplicable);

  // random products of two forms linear in x0: sqrt(disc) squares back to disc
  std::mt19937 rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    auto a = random_form(rng, 4, 1, 3), b = random_form(rng, 4, 1, 3);
    auto prod = a * b;
    if (prod.degree_in(0) != 2) continue;
    auto rr = resultant_reduce(prod, 0);
    REQUIRE(rr);
    auto back = rename_variables(rr->first, std::vector<std::size_t>{1, 2, 3}, 4);
    CHECK(back * back == disc_wrt(prod, 0));
  }
}

TEST_CASE("denominator chain") {
  auto f = P("x0 x1 + x2 x3", 4);
  auto [same, empty] = denominator_chain(f, {});
  CHECK(same == f.primitive());
  CHECK(empty.models.size() == 1);
  CHECK(empty.steps.empty());
  CHECK(empty.composite_sign() == 1);

  auto [g, chain] = denominator_chain(P("x0 x1 x2 + x3^2 x1 + x2^3", 4), {0}, {"a", "b", "c", "d"});
  CHECK(g == P("x0 x1", 3));
  CHECK(chain.steps.size() == 1);
  CHECK(chain.terminal().vars == std::vector<std::string>{"b", "c", "d"});
  CHECK(chain.terminal().label == "after a");

  CHECK_THROWS_AS(denominator_chain(P("x0^3 + x1^3", 2), {0}), StepNotApplicable);
  CHECK_THROWS_AS(denominator_chain(f, {0, 0}), std::invalid_argument);
}

TEST_CASE("subspace reduction") {
  // quartic in P^3 vanishing to order 2 along the line x0 = x1 = 0
  auto f = P("x0^2 x2^2 + x1^2 x3^2 + x0 x1 x2 x3 + x0^3 x3 - x1^3 x2 + x0^2 x1 x3", 4);
  auto [m, st] = subspace_reduce(f, {0, 1});
  CHECK(m.ambient.kind == Ambient::Kind::MultiProj);
  CHECK(m.ambient.dims == std::vector<std::size_t>{1, 1});
  CHECK(m.degrees[0] == std::vector<int>{2, 2});
  CHECK(st.sign_flip == -1);
  for (std::uint32_t p : {3u, 5u, 7u}) CHECK(similar(proj_count(f, p), count_model(m, p), -1, p));

  CHECK_THROWS_AS(subspace_reduce(P("x0^2 + x1 x2", 3), {0, 1}), MembershipFailure);
  CHECK_THROWS_AS(subspace_reduce(P("x0^2 x2 + x0 x2^2", 3), {0, 1}), MembershipFailure);
  CHECK_THROWS_AS(subspace_reduce(P("x0 x1 + x2", 3), {0}), MembershipFailure);
}

TEST_CASE("normal reduction to a weighted cover") {
  auto g = P("x2^2 + x3^2 + x2 x3", 4);
  auto f = P("x0 x1", 4) * g;
  auto [w, st] = normal_to_weighted_cover(f, 0, 1);
  REQUIRE(w.branch);
  auto base = P("x0^2 + x1^2 + x0 x1", 2);
  CHECK(*w.branch == base * base);
  CHECK(st.kind == StepKind::to_weighted_cover);
  CHECK(st.invalid_primes.count(2));

  std::mt19937 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 10 && checked < 4; ++trial) {
    // quartic in the square of (x0, x1) with quadratic coefficients in x2, x3
    auto sub = [&] { return rename_variables(random_form(rng, 2, 2, 4), std::vector<std::size_t>{2, 3}, 4); };
    auto c0 = sub(), c1 = sub(), c2 = sub();
    auto q = P("x0^2", 4) * c0 + P("x0 x1", 4) * c1 + P("x1^2", 4) * c2 + P("x0^3 x2 - x1^3 x3", 4);
    std::pair<VarietyModel, SimilarityStep> r;
    try {
      r = normal_to_weighted_cover(q, 0, 1);
    } catch (const MembershipFailure&) {
      continue;
    }
    ++checked;
    for (std::uint32_t p : {5u, 7u}) CHECK(similar(proj_count(q, p), count_model(r.first, p), -1, p));
  }
  CHECK(checked > 0);
  CHECK_THROWS_AS(normal_to_weighted_cover(P("x0 x2 + x1 x2", 3), 0, 1), MembershipFailure);
}

TEST_CASE("weighted cover to hypersurface") {
  auto D = P("x0 x1 (x0 + x1)(x0 - x1 + x2) x2 (x1 + 2x2)", 3);
  auto cover = weighted_cover_model(D);
  auto g = P("x0 x1", 3);
  auto [h, st] = to_hypersurface(cover, g);
  CHECK(h.ambient.coordinate_count() == 4);
  CHECK(st.sign_flip == 1);
  for (std::uint32_t p : {5u, 7u, 11u}) CHECK(similar(count_model(cover, p), count_model(h, p), 1, p));

  CHECK_THROWS_AS(to_hypersurface(cover, P("x0", 3)), WrongDegree);
  CHECK_THROWS_AS(to_hypersurface(cover, P("x0^2 + x1^2", 3)), HintDoesNotDivide);
  CHECK_THROWS_AS(to_hypersurface(hypersurface_model(D), g), WrongDegree);
  CHECK_THROWS_AS(to_hypersurface(cover, P("x0 x1", 4)), ArityMismatch);
}

TEST_CASE("complete the square") {
  auto f = P("x0^2 x1 + x0 x2^2 + x1^2 x3 + x2 x3^2", 4);
  auto [w, st] = complete_square(f, 0);
  REQUIRE(w.branch);
  CHECK(st.sign_flip == 1);
  for (std::uint32_t p : {5u, 7u, 11u}) CHECK(similar(proj_count(f, p), count_model(w, p), 1, p));
  CHECK_THROWS_AS(complete_square(P("x0 x1 + x2^2", 3), 0), WrongDegree);
}

TEST_CASE("linear factor search") {
  auto D = P("x2^2 (x1 + x2)^2 (x0^2 + x1^2 + x0 x2)", 3);
  auto lf = linear_factors(D);
  CHECK(lf.size() == 4);
  auto g = auto_split_search(D, 2);
  REQUIRE(g);
  CHECK((*g == P("x2 (x1 + x2)", 3) || *g == -P("x2 (x1 + x2)", 3)));
  CHECK_FALSE(auto_split_search(P("x0^2 + x1^2", 2), 1));
  auto sq = auto_split_search(P("x0^2 x1", 2), 2);
  REQUIRE(sq);
  CHECK(*sq == P("x0 x1", 2));
  auto twice = auto_split_search(P("x0^3 x1", 2), 3);
  REQUIRE(twice);
  CHECK(*twice == P("x0^2 x1", 2));
  CHECK_THROWS_AS(auto_split_search(P("x0 + 1", 1), 1), std::invalid_argument);
}

TEST_CASE("matching up to symmetry") {
  auto f = P("x0^2 x1 + 4 x1 x2^2", 3);
  auto g = P("x2^2 x0 + x0 x1^2", 3);
  auto m = match_up_to_symmetry(f, g, {1, 2, Rational(1, 2)});
  REQUIRE(m);
  CHECK_FALSE(match_up_to_symmetry(f, g, {1}));
  CHECK_FALSE(match_up_to_symmetry(f, P("x0^3", 3)));
}

TEST_CASE("chain verification") {
  SimilarityChain empty;
  empty.models.push_back(hypersurface_model(P("x0 x1 + x2^2", 3), "conic"));
  auto rep = verify_chain(empty, {5, 7});
  CHECK(rep.checks.empty());
  CHECK(rep.composite.empty());
  CHECK_FALSE(rep.any_failed());

  // reduces to an elliptic curve, so both signs are distinguishable
  auto f = P("x1 (x2^2 x3 - x0^3 - x0 x3^2 - x3^3) + x0^4 + x2^4", 4);
  auto [g, chain] = denominator_chain(f, {1});
  auto r = verify_chain(chain, {2, 3, 5, 7});
  CHECK_FALSE(r.any_failed());
  CHECK(r.step_verified(0));
  CHECK(chain.steps[0].verified_primes == std::set<std::uint32_t>{3, 5, 7});

  // a deliberately wrong sign must be caught
  chain.steps[0].sign_flip = 1;
  chain.steps[0].verified_primes.clear();
  auto bad = verify_chain(chain, {5, 7});
  CHECK(bad.any_failed());
  CHECK_FALSE(bad.step_verified(0));

  VerifyOptions tight;
  tight.budget = 10;
  chain.steps[0].sign_flip = -1;
  auto skipped = verify_chain(chain, {5}, tight);
  CHECK(skipped.checks[0].status == StepCheck::Status::skipped_budget);
  CHECK_FALSE(skipped.step_verified(0));
}

TEST_CASE("4_13 sextic reduces to the quintic fixture") {
  auto g = delete_vertex(load_graph_fixture("4_13"), 1);
  auto E = [&](int a, int b) { return std::size_t(g.find_edge(a, b)); };
  const std::array<std::size_t, 5> five{E(2, 3), E(2, 6), E(2, 7), E(3, 9), E(6, 7)};
  auto f = five_invariant(g, five, 2);
  std::vector<std::string> names;
  std::vector<std::size_t> map(g.edge_count(), 0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    if (std::find(five.begin(), five.end(), i) != five.end()) continue;
    map[i] = k++;
    names.push_back("(" + std::to_string(g.edges[i].first) + "," + std::to_string(g.edges[i].second) + ")");
  }
  f = rename_variables(f, map, k);
  std::vector<std::size_t> order;
  for (auto [a, b] : std::vector<std::pair<int, int>>{{3, 8}, {4, 6}, {5, 10}, {4, 5}, {4, 8}, {5, 11}, {9, 11}})
    order.push_back(map[E(a, b)]);
  auto [s, chain] = denominator_chain(f, order, names, "five-invariant");
  CHECK(s.arity() == 6);
  CHECK(s.total_degree() == 6);

  auto [w, st] = normal_to_weighted_cover(s, 1, 2);
  REQUIRE(w.branch);
  CHECK(w.branch->size() == 32);
  auto lf = linear_factors(*w.branch);
  REQUIRE(lf.size() == 1);
  CHECK(lf[0] == P("x2", 4));

  auto hint = P("-x0*x1*x2/4 - x0*x2^2/4 - x0*x2*x3/4 - x1*x2*x3/4 - x2^2*x3/4", 4);
  auto [h, st2] = to_hypersurface(w, hint);
  auto q1 = P(kQ1, 5);
  auto m = match_up_to_symmetry(q1, h.equations[0], {1, -1, 2, -2, Rational(1, 2), Rational(-1, 2)});
  REQUIRE(m);
  CHECK(m->factor != 0);
}
