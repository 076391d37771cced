#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "phi4/cache.hpp"
#include "phi4/pointcount.hpp"

using namespace phi4;

namespace {

MultiPoly P(const std::string& s, std::size_t n) { return parse_poly(s, default_var_names(n)); }

// Random homogeneous form of degree d in n variables with small coefficients.
MultiPoly random_form(std::mt19937& rng, std::size_t n, int d, int terms) {
  std::uniform_int_distribution<int> coef(-3, 3), var(0, int(n) - 1);
  std::vector<Term> t;
  for (int k = 0; k < terms; ++k) {
    Monomial m;
    for (int j = 0; j < d; ++j) ++m.e[var(rng)];
    int c = coef(rng);
    if (c) t.push_back({m, c});
  }
  if (t.empty()) {
    Monomial m;
    m.e[0] = std::uint8_t(d);
    t.push_back({m, 1});
  }
  return MultiPoly::from_terms(n, std::move(t));
}

VarietyModel b_model() {
  // P^3 x (P^1)^3, graphs of the projections away from x1+x2 = x_i = 0
  const std::size_t n = 10;
  std::vector<MultiPoly> eqs = {P("x4*(x1+x2) - x5*x0", n), P("x6*(x1+x2) - x7*x1", n), P("x8*(x1+x2) - x9*x3", n)};
  return multiproj_model({3, 1, 1, 1}, eqs, std::nullopt, "B");
}

}  // namespace

TEST_CASE("affine counts") {
  MultiPoly f[] = {P("x0 + x1 + x2", 3)};
  CHECK(count_affine(f, 5) == 25);
  CHECK(count_affine(std::span<const MultiPoly>{}, 3, 5) == 125);
  MultiPoly two[] = {P("x0 - x1", 2), P("x0 + x1", 2)};
  CHECK(count_affine(two, 7) == 1);
  MultiPoly nonzero[] = {P("x0^2 + 1", 1)};
  CHECK(count_affine(nonzero, 5) == 2);
  CHECK(count_affine(nonzero, 7) == 0);
}

TEST_CASE("projective counts") {
  CHECK(count_projective(std::span<const MultiPoly>{}, 4, 5) == 156);
  MultiPoly conic[] = {P("x0*x1 - x2^2", 3)};
  CHECK(count_projective(conic, 7) == 8);
  for (std::uint32_t p : {3u, 5u, 7u, 11u}) {
    MultiPoly line[] = {P("x0 + 2*x1 - x2", 3)};
    CHECK(count_projective(line, p) == p + 1);
  }
  // denominators must be invertible
  MultiPoly half[] = {P("x0/5 + x1", 2)};
  CHECK_THROWS_AS(count_projective(half, 5), DenominatorNotInvertible);
  CHECK(count_projective(half, 7) == 1);
  CHECK_THROWS_AS(count_projective(conic, 2), InvalidPrime);
  CHECK_THROWS_AS(count_projective(conic, 9), InvalidPrime);
  CountOptions tiny;
  tiny.budget = 100;
  CHECK_THROWS_AS(count_projective(conic, 11, tiny), BudgetExceeded);
}

TEST_CASE("multiprojective counts") {
  CHECK(count_multiprojective(std::span<const MultiPoly>{}, {2, 2}, 5) == 36);
  auto B = b_model();
  CHECK(has_fiber_shape(B));
  for (std::uint32_t p : {5u, 7u, 11u, 13u}) {
    const Integer expect = Integer(p) * p * p + 7 * p * p + 4 * p + 1;
    CHECK(count_multiprojective_fibered(B, p) == expect);
    if (p <= 7) CHECK(count_model(B, p) == expect);
  }
  CHECK(count_multiprojective_fibered(B, 5) == 321);

  auto toy = multiproj_model({1, 1}, {P("x2*x0 - x3*x1", 4)});
  CHECK(count_multiprojective_fibered(toy, 5) == count_model(toy, 5));
  CHECK(count_model(toy, 5) == 6);
  CHECK_FALSE(has_fiber_shape(hypersurface_model(P("x0^2 - x1*x2", 3))));
}

TEST_CASE("weighted double covers") {
  // base P^1: two lines through a point, and a cover with no points off x0 = 0
  CHECK(count_weighted_double_cover(P("x0^2", 2), 5) == 11);
  CHECK(count_weighted_double_cover(P("x0*x1", 2), 5) == 6);
  CHECK(count_weighted_double_cover(P("2*x0^2", 2), 5) == 1);
  CHECK(count_double_cover_affine(P("x0^2", 2), 5) == 11);

  std::mt19937 rng(7);
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + k % 3;
    const int half = 1 + k % 2;
    MultiPoly F = k < 4 ? random_form(rng, n, 3, 5).pow(2) : random_form(rng, n, 2 * half, 6);
    const std::uint32_t p = k % 2 ? 5 : 7;
    CHECK(count_weighted_double_cover(F, p) == count_double_cover_affine(F, p));
    ++checked;
  }
  CHECK(checked == 20);

  auto m = weighted_cover_model(P("x0*x1*x2*x3*(x0+x1+x2+x3)^4", 4));
  CHECK(m.ambient.weight == 4);
  CHECK(count_model(m, 7) == count_weighted_double_cover(*m.branch, 7));
}

TEST_CASE("engine properties") {
  std::mt19937 rng(11);
  SUBCASE("affine-projective relation") {
    for (int k = 0; k < 8; ++k) {
      MultiPoly f = random_form(rng, 3 + k % 2, 2 + k % 3, 6);
      for (std::uint32_t p : {3u, 5u, 7u}) {
        MultiPoly one[] = {f};
        CHECK(count_affine(one, p) == (p - 1) * count_projective(one, p) + 1);
      }
    }
  }
  SUBCASE("Chevalley-Warning") {
    int models = 0;
    for (int k = 0; k < 10; ++k) {
      const std::size_t n = 3 + k % 3;  // coordinates
      std::vector<MultiPoly> eqs;
      int used = 0;
      while (used < int(n) - 1) {
        int d = std::min<int>(1 + k % 2, int(n) - 1 - used);
        eqs.push_back(random_form(rng, n, d, 4));
        used += d;
      }
      for (std::uint32_t p : {3u, 5u, 7u}) CHECK(count_projective(eqs, n, p) % p == 1);
      ++models;
    }
    CHECK(models == 10);
  }
  SUBCASE("thread-count determinism") {
    MultiPoly f = random_form(rng, 5, 4, 20);
    MultiPoly one[] = {f};
    CountOptions o1, o2, o4;
    o1.threads = 1;
    o2.threads = 2;
    o4.threads = 4;
    const Integer c = count_projective(one, 7, o1);
    CHECK(count_projective(one, 7, o2) == c);
    CHECK(count_projective(one, 7, o4) == c);
    CHECK(count_weighted_double_cover(f.pow(2) * 3, 5, o1) == count_weighted_double_cover(f.pow(2) * 3, 5, o4));
  }
  SUBCASE("fiber solver against naive enumeration") {
    for (int k = 0; k < 6; ++k) {
      const std::size_t n = 3 + 2 + 2;
      auto a = random_form(rng, 3, 1 + k % 2, 3), b = random_form(rng, 3, 1 + k % 2, 3);
      auto c = random_form(rng, 3, 1, 3), d = random_form(rng, 3, 1, 3);
      std::vector<std::size_t> lift = {0, 1, 2};
      auto L = [&](const MultiPoly& f) { return rename_variables(f, lift, n); };
      auto e1 = L(a) * MultiPoly::variable(n, 3) + L(b) * MultiPoly::variable(n, 4);
      auto e2 = L(c) * MultiPoly::variable(n, 5) - L(d) * MultiPoly::variable(n, 6);
      auto m = multiproj_model({2, 1, 1}, {e1, e2});
      for (std::uint32_t p : {3u, 5u}) CHECK(count_multiprojective_fibered(m, p) == count_model(m, p));
      auto G = L(a * b) * MultiPoly::variable(n, 3).pow(2) * MultiPoly::variable(n, 6).pow(2) +
               L(c.pow(2)) * MultiPoly::variable(n, 4) * MultiPoly::variable(n, 3) * MultiPoly::variable(n, 5).pow(2);
      if (k % 2 == 0) {
        auto cover = multiproj_model({2, 1, 1}, {e1, e2}, G);
        CHECK(count_multiprojective_fibered(cover, 5) == count_model(cover, 5));
      }
    }
  }
}

TEST_CASE("c2 by brute force") {
  auto c3 = load_graph_fixture("C3");
  auto v = c2_bruteforce(c3, 5);
  CHECK(v.affine_count == 25);
  CHECK(v.value == 1);
  auto k4 = load_graph_fixture("K4");
  MultiPoly psi[] = {kirchhoff_polynomial(k4)};
  CHECK(count_affine(psi, 3) % 9 == 0);
  for (std::uint32_t p : {3u, 5u, 7u}) CHECK(c2_bruteforce(k4, p).value == p - 1);
  CHECK_THROWS_AS(c2_bruteforce(make_graph(2, {{1, 2}, {1, 2}}), 5), GraphError);
}

TEST_CASE("legendre and square roots") {
  CHECK(legendre(-1, 5) == 1);
  CHECK(legendre(5, 7) == -1);
  CHECK(legendre(14, 7) == 0);
  std::mt19937 rng(3);
  const auto primes = primes_in(3, 200);
  for (int k = 0; k < 300; ++k) {
    std::uint32_t p = primes[rng() % primes.size()];
    long a = long(rng() % 1000) - 500, b = long(rng() % 1000) - 500;
    CHECK(legendre(a, p) * legendre(b, p) == legendre(Integer(a) * b, p));
  }
  CHECK(sqrt_mod(9, 13) == 3u);
  CHECK_FALSE(sqrt_mod(2, 5).has_value());
  CHECK(sqrt_mod(0, 7) == 0u);
  for (int k = 0; k < 1000; ++k) {
    std::uint32_t p = primes[rng() % primes.size()];
    Integer a = Integer(rng() % 100000);
    auto s = sqrt_mod(a, p);
    CHECK(s.has_value() == (legendre(a, p) >= 0));
    if (s) CHECK((Integer(*s) * *s - a) % p == 0);
  }
  const auto big = primes_in(1000000, 1000100);
  for (auto p : big) {
    auto s = sqrt_mod(p - 1, p);
    CHECK(s.has_value() == (p % 4 == 1));
  }
}

TEST_CASE("indicator functions") {
  CHECK(alpha_8(17) == 1);
  CHECK(alpha_8(7) == 0);
  CHECK(alpha_8(41) == 1);
  CHECK(alpha_390(5) == 0);
  CHECK(alpha_390(7) == 0);
  CHECK(alpha_390(13) == 2);
  for (auto p : primes_in(5, 400)) {
    int a = alpha_390(p);
    CHECK((a == 0 || a == 2 || a == -2));
    if (p % 12 != 1) CHECK(a == 0);
  }
}

TEST_CASE("cubic Frobenius classes") {
  const std::array<Integer, 4> xx = {0, -1, 0, 1}, c = {-2, -1, 0, 1};
  CHECK(cubic_frobenius(xx, 5) == FrobeniusClass::split3);
  CHECK(cubic_discriminant(c) == -104);
  CHECK(cubic_frobenius(c, 5) == FrobeniusClass::inert3);
  CHECK(cubic_frobenius(c, 17) == FrobeniusClass::inert3);
  for (std::uint32_t p : {19u, 23u, 29u}) CHECK(cubic_frobenius(c, p) != FrobeniusClass::inert3);
  CHECK_THROWS_AS(cubic_frobenius(c, 13), RamifiedPrime);
}

TEST_CASE("count cache") {
  auto dir = std::filesystem::temp_directory_path() / "phi4_cache_test";
  std::filesystem::remove_all(dir);
  auto file = dir / "counts.jsonl";
  {
    CountCache cache(file);
    CHECK_FALSE(cache.get("abc", 5, "projective").has_value());
    CountRecord r{"abc", 5, 321, "projective"};
    CHECK(cache.put(r) == r);
    CHECK(cache.get("abc", 5, "projective") == r);
    CHECK(cache.put(r) == r);
    CHECK_THROWS_AS(cache.put({"abc", 5, 322, "projective"}), CacheConflict);
    CHECK_FALSE(cache.get("abc", 5, "affine").has_value());
  }
  CountCache reopened(file);
  CHECK(reopened.size() == 1);
  CHECK(reopened.get("abc", 5, "projective")->count == 321);

  auto B = b_model();
  CountStats stats;
  CountOptions opt;
  auto c1 = cached_count(&reopened, B, 7, opt, &stats);
  auto c2 = cached_count(&reopened, B, 7, opt, &stats);
  CHECK(c1 == c2);
  CHECK(stats.enumerations == 1);
  CHECK(stats.hits == 1);
  auto renamed = B;
  renamed.label = "renamed";
  CHECK(model_hash(renamed) == model_hash(B));
  std::filesystem::remove_all(dir);
}

TEST_CASE("model serialization") {
  auto B = b_model();
  auto j = model_to_json(B);
  auto back = model_from_json(j);
  CHECK(model_hash(back) == model_hash(B));
  CHECK(back.dimension() == 3);
  auto w = weighted_cover_model(P("x0*x1*x2*x3*(x0+x1)^2*(x2-x3)^2", 4), "toy");
  auto w2 = model_from_json(model_to_json(w));
  CHECK(*w2.branch == *w.branch);
  CHECK(w2.ambient.weight == 4);
  CHECK_THROWS_AS(weighted_cover_model(P("x0^3", 2)), ModelError);
  CHECK_THROWS_AS(hypersurface_model(P("x0^3 + x1", 2)), ModelError);
}
