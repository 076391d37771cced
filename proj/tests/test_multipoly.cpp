#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "phi4/multipoly.hpp"

using namespace phi4;

namespace {

std::vector<std::string> xyzw = {"x", "y", "z", "w"};

MultiPoly P(const std::string& s, std::size_t n = 4) {
  if (n == 4) return parse_poly(s, xyzw);
  auto names = default_var_names(n);
  return parse_poly(s, names);
}

MultiPoly random_poly(std::mt19937& rng, std::size_t arity, int terms, int maxdeg) {
  std::uniform_int_distribution<int> c(-5, 5), e(0, maxdeg);
  std::vector<Term> t;
  for (int i = 0; i < terms; ++i) {
    Monomial m;
    for (std::size_t v = 0; v < arity; ++v) m.e[v] = std::uint8_t(e(rng));
    t.push_back({m, c(rng)});
  }
  return MultiPoly::from_terms(arity, std::move(t));
}

}  // namespace

TEST_CASE("ring operations") {
  CHECK(P("(x+y)*(x-y)") == P("x^2 - y^2"));
  auto f = P("3x^2y - z/2 + 7");
  CHECK(f + MultiPoly(4) == f);
  CHECK(f - f == MultiPoly(4));
  CHECK(P("2(x+y)") == P("2x+2y"));
  CHECK_THROWS_AS(P("x") + MultiPoly::variable(3, 0), ArityMismatch);

  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    auto a = random_poly(rng, 3, 4, 2), b = random_poly(rng, 3, 4, 2), c = random_poly(rng, 3, 3, 2);
    CHECK((a + b) * c == a * c + b * c);
  }
}

TEST_CASE("denominator normalization") {
  auto f = P("x/4 + y/2");
  CHECK(f.denominator() == 4);
  auto g = f * Rational(4);
  CHECK(g.denominator() == 1);
  CHECK(g == P("x + 2y"));
  CHECK((P("x/6") + P("x/3")) == P("x/2"));
}

TEST_CASE("exact division") {
  CHECK(exact_div(P("x^2-y^2"), P("x+y")) == P("x-y"));
  auto f = P("x^3 z - 2y w/3");
  CHECK(exact_div(f, MultiPoly::constant(4, 1)) == f);
  CHECK_THROWS_AS(exact_div(P("x^2+y^2"), P("x+y")), NotDivisible);
  CHECK(exact_div(P("x^2 y/2 - x y^2/2"), P("3x-3y")) == P("x y/6"));

  std::mt19937 rng(11);
  for (int i = 0; i < 40; ++i) {
    auto a = random_poly(rng, 3, 4, 2), b = random_poly(rng, 3, 3, 2);
    if (b.is_zero()) continue;
    CHECK(exact_div(a * b, b) == a);
  }
}

TEST_CASE("square roots") {
  CHECK(*poly_sqrt(P("(x+y)^2")) == P("x+y"));
  CHECK(*poly_sqrt(P("4x^2 - 4x y + y^2")) == P("2x - y"));
  CHECK_FALSE(poly_sqrt(P("x^2+y^2")).has_value());
  CHECK(*poly_sqrt(P("(y - x)^2")) == P("x - y"));
  CHECK(*poly_sqrt(P("x^2/4 + x y/3 + y^2/9")) == P("x/2 + y/3"));
  CHECK_FALSE(poly_sqrt(P("-x^2")).has_value());
  CHECK_FALSE(poly_sqrt(P("2x^2")).has_value());

  std::mt19937 rng(3);
  for (int i = 0; i < 40; ++i) {
    auto a = random_poly(rng, 4, 5, 2);
    if (a.is_zero()) continue;
    auto s = poly_sqrt(a * a);
    REQUIRE(s.has_value());
    CHECK(*s * *s == a * a);
    CHECK(s->leading_coeff() > 0);
  }
}

TEST_CASE("coefficients in a variable") {
  auto f = P("x^2 y + x z + w");
  auto c = coeffs_in_var(f, 0);
  REQUIRE(c.size() == 3);
  CHECK(c[0] == P("w"));
  CHECK(c[1] == P("z"));
  CHECK(c[2] == P("y"));
  auto k = coeffs_in_var(P("5"), 2);
  REQUIRE(k.size() == 1);
  CHECK(k[0] == P("5"));

  std::mt19937 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto g = random_poly(rng, 4, 6, 3);
    auto cs = coeffs_in_var(g, 1);
    MultiPoly sum(4), pw = MultiPoly::constant(4, 1);
    for (auto& ci : cs) {
      sum += ci * pw;
      pw *= MultiPoly::variable(4, 1);
    }
    CHECK(sum == g);
  }
}

TEST_CASE("discriminant") {
  CHECK(disc_wrt(P("x y + z"), 0) == P("y^2"));
  CHECK(disc_wrt(P("(x+y)(2x+z)"), 0) == P("(2y - z)^2"));
  CHECK_THROWS_AS(disc_wrt(P("x^3"), 0), std::domain_error);

  std::mt19937 rng(9);
  for (int i = 0; i < 30; ++i) {
    auto a1 = random_poly(rng, 4, 2, 1), b1 = random_poly(rng, 4, 2, 1);
    auto a2 = random_poly(rng, 4, 2, 1), b2 = random_poly(rng, 4, 2, 1);
    a1 = substitute_zero(a1, std::vector<std::size_t>{0});
    a2 = substitute_zero(a2, std::vector<std::size_t>{0});
    b1 = substitute_zero(b1, std::vector<std::size_t>{0});
    b2 = substitute_zero(b2, std::vector<std::size_t>{0});
    auto x = MultiPoly::variable(4, 0);
    auto r = a1 * b2 - a2 * b1;
    CHECK(disc_wrt((a1 * x + b1) * (a2 * x + b2), 0) == r * r);
  }
}

TEST_CASE("substitution and renaming") {
  std::vector<std::size_t> one = {1};
  CHECK(substitute_zero(P("x+y+z"), one) == P("x+z"));
  auto f = P("x^2 y + z w");
  CHECK(substitute_zero(f, std::vector<std::size_t>{}) == f);
  CHECK(substitute_zero(f, std::vector<std::size_t>{3}).is_homogeneous());

  auto g = remove_variable(P("x + z"), 1);
  CHECK(g.arity() == 3);
  CHECK(to_string(g) == "x0 + x1");
  std::vector<std::size_t> swap = {1, 0, 2, 3};
  CHECK(rename_variables(P("x^2 y"), swap, 4) == P("y^2 x"));

  std::vector<MultiPoly> img = {P("y+z"), P("y"), P("z"), P("w")};
  CHECK(compose(P("x^2 - y z"), img) == P("y^2 + y z + z^2"));
}

TEST_CASE("reduction mod p") {
  auto r = reduce_mod_p(P("x - 5"), 5);
  REQUIRE(r.monos.size() == 1);
  CHECK(r.coeffs[0] == 1);
  CHECK_THROWS_AS(reduce_mod_p(P("x^2 y/4 + z"), 2), DenominatorNotInvertible);

  std::mt19937 rng(2);
  auto f = random_poly(rng, 3, 5, 2), g = random_poly(rng, 3, 5, 2);
  auto a = reduce_mod_p(f, 7), b = reduce_mod_p(f + g * Rational(7), 7);
  std::vector<std::uint32_t> pt(3);
  for (pt[0] = 0; pt[0] < 7; ++pt[0])
    for (pt[1] = 0; pt[1] < 7; ++pt[1])
      for (pt[2] = 0; pt[2] < 7; ++pt[2]) CHECK(a.evaluate(pt) == b.evaluate(pt));
  // x/2 at x=1 mod 7 is 4
  auto h = reduce_mod_p(P("x/2"), 7);
  std::vector<std::uint32_t> one_pt = {1, 0, 0, 0};
  CHECK(h.evaluate(one_pt) == 4);
}

TEST_CASE("parse and format") {
  std::vector<std::string> names = {"x_0", "x_1", "x_2", "x_3"};
  auto q = parse_poly("-x_0^2x_1x_2x_3/4 + x_1x_2^3x_3", names);
  CHECK(q.denominator() == 4);
  CHECK(q.total_degree() == 5);
  CHECK(parse_poly(to_string(q), default_var_names(4)) == q);
  CHECK(parse_poly("x_{0}\\cdot x_1 + 2\\left(x_2 - x_3\\right)", names) ==
        parse_poly("x0 x1 + 2 x2 - 2 x3", default_var_names(4)));
  CHECK_THROWS_AS(parse_poly("x0 + q", names), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("x0 +", names), std::invalid_argument);

  std::mt19937 rng(1);
  for (int i = 0; i < 30; ++i) {
    auto f = random_poly(rng, 4, 6, 3) * Rational(1, 6);
    CHECK(parse_poly(to_string(f), default_var_names(4)) == f);
  }
}

TEST_CASE("homogeneity") {
  CHECK(P("x^2 y + z w^2").is_homogeneous());
  CHECK_FALSE(P("x^2 + y").is_homogeneous());
  std::vector<std::size_t> groups = {2, 2};
  std::vector<int> deg = {1, 2};
  CHECK(P("x z^2 + y z w").is_multihomogeneous(groups, deg));
  CHECK_FALSE(P("x^2 z").is_multihomogeneous(groups, deg));
}
