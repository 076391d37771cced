#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>

#include "phi4/graph.hpp"

using namespace phi4;

namespace {

bool equal_up_to_sign(const MultiPoly& a, const MultiPoly& b) { return a == b || a == -b; }

Graph tree4() { return make_graph(4, {{1, 2}, {2, 3}, {2, 4}}, "star"); }

}  // namespace

TEST_CASE("fixture loading") {
  auto k5 = load_graph_fixture("K5");
  CHECK(k5.vertex_count() == 5);
  CHECK(k5.edge_count() == 10);

  auto g = load_graph_fixture("3_7");
  CHECK(g.vertex_count() == 10);
  CHECK(g.edge_count() == 20);
  for (int v : g.labels) CHECK(g.degree(v) == 4);

  auto h = load_graph_fixture("4_13");
  CHECK(h.vertex_count() == 11);
  CHECK(h.edge_count() == 22);
  for (int v : h.labels) CHECK(h.degree(v) == 4);
  CHECK(h.find_edge(1, 2) == 21);

  for (const auto& name : graph_fixture_names()) {
    auto f = load_graph_fixture(name);
    if (f.has_tag("phi4")) CHECK(f.has_tag("4-regular"));
  }
  CHECK_THROWS_AS(load_graph_fixture("no_such_graph"), GraphError);
  CHECK_THROWS_AS(make_graph(3, {{1, 4}}), GraphError);
}

TEST_CASE("vertex deletion") {
  auto k4 = delete_vertex(load_graph_fixture("K5"), 3);
  CHECK(k4.vertex_count() == 4);
  CHECK(k4.edge_count() == 6);

  auto g = delete_vertex(load_graph_fixture("4_13"), 1);
  CHECK(g.vertex_count() == 10);
  CHECK(g.edge_count() == 18);
  for (auto [u, v] : std::vector<std::pair<int, int>>{{2, 3}, {2, 6}, {2, 7}, {3, 9}, {6, 7}})
    CHECK(g.find_edge(u, v) >= 0);
  CHECK(g.has_vertex(11));
  CHECK_FALSE(g.has_vertex(1));

  auto path = delete_vertex(load_graph_fixture("C3"), 2);
  CHECK(path.edge_count() == 1);
  CHECK(path.vertex_count() == 2);
  CHECK_THROWS_AS(delete_vertex(path, 2), GraphError);
}

TEST_CASE("betti numbers and eligibility") {
  CHECK(betti_h(load_graph_fixture("C3")) == 1);
  CHECK(betti_h(load_graph_fixture("K4")) == 3);
  CHECK(betti_h(tree4()) == 0);
  CHECK(is_phi4_eligible(load_graph_fixture("K4")));
  CHECK_FALSE(is_phi4_eligible(load_graph_fixture("C3")));
  CHECK(is_phi4_eligible(delete_vertex(load_graph_fixture("4_13"), 1)));
  std::vector<std::pair<int, int>> k8;
  for (int a = 1; a <= 8; ++a)
    for (int b = a + 1; b <= 8; ++b) k8.emplace_back(a, b);
  CHECK_THROWS_AS(is_phi4_eligible(make_graph(8, k8)), GraphError);
}

TEST_CASE("spanning trees") {
  CHECK(spanning_tree_count(load_graph_fixture("K4")) == 16);
  CHECK(spanning_tree_count(load_graph_fixture("C3")) == 3);
  CHECK(spanning_tree_count(make_graph(2, {{1, 2}})) == 1);
  CHECK(spanning_tree_count(load_graph_fixture("K5")) == 125);
  CHECK_THROWS_AS(spanning_tree_count(make_graph(3, {{1, 2}})), GraphError);

  auto psi = kirchhoff_polynomial(load_graph_fixture("C3"));
  CHECK(to_string(psi) == "x0 + x1 + x2");
  CHECK(kirchhoff_polynomial(tree4()) == MultiPoly::constant(3, 1));

  for (const char* name : {"K4", "K5", "C3", "3_7"}) {
    auto g = load_graph_fixture(name);
    if (g.edge_count() > 12) g = delete_vertex(g, 1);
    auto k = kirchhoff_polynomial(g);
    CHECK(Integer(k.size()) == spanning_tree_count(g));
    CHECK(k.is_homogeneous());
    CHECK(k.total_degree() == betti_h(g));
    for (const auto& t : k.terms())
      for (std::size_t i = 0; i < k.arity(); ++i) CHECK(t.mono.e[i] <= 1);
  }
}

TEST_CASE("Kirchhoff polynomial does not depend on orientation") {
  auto g = load_graph_fixture("K4");
  auto flipped = g;
  for (std::size_t i = 0; i < flipped.edges.size(); i += 2) std::swap(flipped.edges[i].first, flipped.edges[i].second);
  CHECK(kirchhoff_polynomial(g) == kirchhoff_polynomial(flipped));
  for (int v = 1; v <= 4; ++v)
    CHECK(equal_up_to_sign(graph_matrix_determinant(graph_matrix(flipped, v)), kirchhoff_polynomial(g)));
}

TEST_CASE("graph matrix") {
  auto c3 = load_graph_fixture("C3");
  auto M = graph_matrix(c3, 3);
  CHECK(M.size == 5);
  for (std::size_t r = 0; r < M.size; ++r)
    for (std::size_t c = 0; c < M.size; ++c) CHECK(M.at(r, c) == M.at(c, r));
  for (std::size_t r = M.edges; r < M.size; ++r)
    for (std::size_t c = M.edges; c < M.size; ++c) CHECK(M.at(r, c) == 0);
  CHECK(equal_up_to_sign(graph_matrix_determinant(M), kirchhoff_polynomial(c3)));

  auto k4 = load_graph_fixture("K4");
  for (int v = 1; v <= 4; ++v) {
    auto Mk = graph_matrix(k4, v);
    CHECK(Mk.size == 9);
    CHECK(equal_up_to_sign(graph_matrix_determinant(Mk), kirchhoff_polynomial(k4)));
  }
  CHECK_THROWS_AS(graph_matrix(k4, 7), GraphError);
}

TEST_CASE("Dodgson polynomials") {
  auto k4 = load_graph_fixture("K4");
  auto psi = kirchhoff_polynomial(k4);
  CHECK(equal_up_to_sign(dodgson(k4, {}, 4), psi));

  // symmetry and degree over all |I| = |J| <= 2
  std::vector<std::vector<std::size_t>> sets = {{}};
  for (std::size_t a = 0; a < 6; ++a) {
    sets.push_back({a});
    for (std::size_t b = a + 1; b < 6; ++b) sets.push_back({a, b});
  }
  int checked = 0;
  for (const auto& I : sets)
    for (const auto& J : sets) {
      if (I.size() != J.size()) continue;
      auto a = dodgson(k4, {I, J, {}}, 1);
      auto b = dodgson(k4, {J, I, {}}, 1);
      CHECK(equal_up_to_sign(a, b));
      if (!a.is_zero()) {
        CHECK(a.is_homogeneous());
        CHECK(a.total_degree() == 3 - int(I.size()));
      }
      ++checked;
    }
  CHECK(checked > 200);

  // the restricted expansion agrees with the full one
  auto M = graph_matrix(k4, 2);
  DodgsonSpec s{{0, 1}, {2, 3}, {4}};
  CHECK(dodgson(M, s, {}) == dodgson(M, s, {1, 0}));
  CHECK_THROWS_AS(dodgson(k4, {{0}, {1, 2}, {}}, 1), GraphError);
  CHECK_THROWS_AS(dodgson(k4, {{9}, {1}, {}}, 1), GraphError);
}

TEST_CASE("five-invariant on K4") {
  auto k4 = load_graph_fixture("K4");
  for (std::size_t skip = 0; skip < 6; ++skip) {
    std::array<std::size_t, 5> e{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 6; ++i)
      if (i != skip) e[k++] = i;
    auto f = five_invariant(k4, e, 4);
    CHECK_FALSE(f.is_zero());
    for (auto x : e) CHECK_FALSE(f.involves(x));
    CHECK(f.degree_in(skip) <= 2);
    // every ordering gives f or -f
    std::sort(e.begin(), e.end());
    do {
      CHECK(equal_up_to_sign(five_invariant(k4, e, 4), f));
    } while (std::next_permutation(e.begin(), e.end()));
  }
  CHECK_THROWS_AS(five_invariant(k4, {0, 1, 2, 3, 3}, 4), GraphError);
}

TEST_CASE("five-invariant ordering on 3_7 minus a vertex") {
  auto g = delete_vertex(load_graph_fixture("3_7"), 3);
  std::array<std::size_t, 5> base = {0, 1, 2, 5, 7};
  auto f = five_invariant(g, base, g.labels.front());
  CHECK_FALSE(f.is_zero());
  for (std::size_t v = 0; v < f.arity(); ++v) CHECK(f.degree_in(v) <= 2);
  std::array<std::array<std::size_t, 5>, 4> orders = {{{7, 5, 2, 1, 0}, {1, 0, 2, 7, 5}, {2, 7, 0, 5, 1}, {5, 1, 7, 0, 2}}};
  for (const auto& o : orders) CHECK(equal_up_to_sign(five_invariant(g, o, g.labels.front()), f));
}
