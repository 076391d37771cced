#include "phi4/graph.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "phi4/fixtures.hpp"

namespace phi4 {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// label -> dense index
std::vector<int> label_index(const Graph& g) {
  int max = g.labels.empty() ? 0 : g.labels.back();
  std::vector<int> idx(max + 1, -1);
  for (std::size_t i = 0; i < g.labels.size(); ++i) idx[g.labels[i]] = int(i);
  return idx;
}

unsigned resolve_threads(unsigned t) {
  if (t) return t;
  unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

}  // namespace

bool Graph::has_vertex(int v) const { return std::binary_search(labels.begin(), labels.end(), v); }

bool Graph::has_tag(const std::string& t) const {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

int Graph::degree(int v) const {
  int d = 0;
  for (auto [a, b] : edges) d += (a == v) + (b == v);
  return d;
}

int Graph::find_edge(int u, int v) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [a, b] = edges[i];
    if ((a == u && b == v) || (a == v && b == u)) return int(i);
  }
  return -1;
}

Graph make_graph(int vertex_count, std::vector<std::pair<int, int>> edges, std::string name) {
  if (vertex_count <= 0) throw GraphError("graph needs at least one vertex");
  Graph g;
  g.labels.resize(vertex_count);
  std::iota(g.labels.begin(), g.labels.end(), 1);
  for (auto [u, v] : edges)
    if (u < 1 || v < 1 || u > vertex_count || v > vertex_count)
      throw GraphError("edge endpoint out of range in " + name);
  g.edges = std::move(edges);
  g.name = std::move(name);
  return g;
}

Graph load_graph_file(const std::string& path) {
  json j = read_json_file(path);
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  Graph g = make_graph(j.at("vertices").get<int>(), std::move(edges), j.value("name", std::string{}));
  if (j.contains("tags")) g.tags = j["tags"].get<std::vector<std::string>>();
  if (g.has_tag("4-regular"))
    for (int v : g.labels)
      if (g.degree(v) != 4)
        throw GraphError("fixture " + g.name + " tagged 4-regular but vertex " + std::to_string(v) +
                         " has degree " + std::to_string(g.degree(v)));
  return g;
}

Graph load_graph_fixture(const std::string& name) {
  auto path = fixture_dir() / "graphs" / (name + ".json");
  if (!std::filesystem::exists(path)) throw GraphError("unknown graph fixture '" + name + "'");
  return load_graph_file(path.string());
}

std::vector<std::string> graph_fixture_names() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(fixture_dir() / "graphs"))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Graph delete_vertex(const Graph& g, int v) {
  if (!g.has_vertex(v)) throw GraphError("no vertex " + std::to_string(v));
  Graph r;
  r.name = g.name.empty() ? std::string{} : g.name + "-v" + std::to_string(v);
  r.tags = {};
  for (int x : g.labels)
    if (x != v) r.labels.push_back(x);
  for (auto e : g.edges)
    if (e.first != v && e.second != v) r.edges.push_back(e);
  return r;
}

int component_count(const Graph& g) {
  auto idx = label_index(g);
  UnionFind uf(g.vertex_count());
  int c = int(g.vertex_count());
  for (auto [a, b] : g.edges) c -= uf.unite(idx[a], idx[b]);
  return c;
}

int betti_h(const Graph& g) {
  return int(g.edge_count()) - int(g.vertex_count()) + component_count(g);
}

bool is_phi4_eligible(const Graph& g) {
  const std::size_t n = g.edge_count();
  if (n > 24) throw GraphError("eligibility check limited to 24 edges");
  if (int(n) != 2 * betti_h(g)) return false;
  auto idx = label_index(g);
  const std::uint32_t full = n == 32 ? ~0u : ((1u << n) - 1);
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    // h of the subgraph spanned by the edges in mask (vertices = endpoints)
    UnionFind uf(g.vertex_count());
    int merges = 0, edges = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      ++edges;
      merges += uf.unite(idx[g.edges[i].first], idx[g.edges[i].second]);
    }
    int h = edges - merges;
    if (edges <= 2 * h) return false;
  }
  return true;
}

Integer spanning_tree_count(const Graph& g) {
  if (component_count(g) != 1) throw GraphError("graph is disconnected");
  std::size_t m = g.vertex_count();
  if (m == 1) return 1;
  auto idx = label_index(g);
  std::vector<Integer> L((m - 1) * (m - 1));
  auto add = [&](int r, int c, int v) {
    if (r < int(m) - 1 && c < int(m) - 1) L[r * (m - 1) + c] += v;
  };
  for (auto [a, b] : g.edges) {
    int i = idx[a], j = idx[b];
    if (i == j) continue;
    add(i, i, 1);
    add(j, j, 1);
    add(i, j, -1);
    add(j, i, -1);
  }
  // Bareiss over mpz
  std::size_t k = m - 1;
  Integer prev = 1;
  int sign = 1;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    while (piv < k && L[piv * k + c] == 0) ++piv;
    if (piv == k) return 0;
    if (piv != c) {
      for (std::size_t t = 0; t < k; ++t) std::swap(L[c * k + t], L[piv * k + t]);
      sign = -sign;
    }
    for (std::size_t r = c + 1; r < k; ++r) {
      for (std::size_t t = c + 1; t < k; ++t) {
        L[r * k + t] = (L[r * k + t] * L[c * k + c] - L[r * k + c] * L[c * k + t]) / prev;
      }
      L[r * k + c] = 0;
    }
    prev = L[c * k + c];
  }
  return sign * L[(k - 1) * k + (k - 1)];
}

MultiPoly kirchhoff_polynomial(const Graph& g) {
  if (component_count(g) != 1) throw GraphError("graph is disconnected");
  const std::size_t n = g.edge_count(), m = g.vertex_count();
  if (n > kMaxVars) throw GraphError("too many edges for a polynomial");
  auto idx = label_index(g);
  const std::size_t tree = m - 1;
  std::vector<Term> terms;
  // enumerate (m-1)-subsets of edges in lexicographic order
  std::vector<std::size_t> pick(tree);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    UnionFind uf(m);
    bool ok = true;
    for (auto e : pick)
      if (!uf.unite(idx[g.edges[e].first], idx[g.edges[e].second])) {
        ok = false;
        break;
      }
    if (ok) {
      Monomial mono;
      for (std::size_t i = 0; i < n; ++i) mono.e[i] = 1;
      for (auto e : pick) mono.e[e] = 0;
      terms.push_back({mono, 1});
    }
    if (tree == 0) break;
    std::size_t i = tree;
    while (i > 0 && pick[i - 1] == n - tree + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < tree; ++j) pick[j] = pick[j - 1] + 1;
  }
  return MultiPoly::from_terms(n, std::move(terms));
}

GraphMatrix graph_matrix(const Graph& g, int drop) {
  if (!g.has_vertex(drop)) throw GraphError("no vertex " + std::to_string(drop));
  GraphMatrix M;
  M.edges = g.edge_count();
  M.dropped_vertex = drop;
  std::vector<int> row_of(g.labels.empty() ? 1 : g.labels.back() + 1, -1);
  for (int v : g.labels) {
    if (v == drop) continue;
    row_of[v] = int(M.edges + M.vertex_of_row.size());
    M.vertex_of_row.push_back(v);
  }
  M.size = M.edges + M.vertex_of_row.size();
  M.integer_part.assign(M.size * M.size, 0);
  for (std::size_t i = 0; i < M.edges; ++i) {
    auto [u, v] = g.edges[i];
    if (u == v) continue;  // a self-loop has zero incidence column
    if (row_of[u] >= 0) {
      M.integer_part[i * M.size + row_of[u]] += 1;
      M.integer_part[row_of[u] * M.size + i] += 1;
    }
    if (row_of[v] >= 0) {
      M.integer_part[i * M.size + row_of[v]] -= 1;
      M.integer_part[row_of[v] * M.size + i] -= 1;
    }
  }
  return M;
}

Integer int_determinant(std::vector<std::int64_t> a, std::size_t n) {
  if (n == 0) return 1;
  std::int64_t prev = 1;
  int sign = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv * n + c] == 0) ++piv;
    if (piv == n) return 0;
    if (piv != c) {
      for (std::size_t t = c; t < n; ++t) std::swap(a[c * n + t], a[piv * n + t]);
      sign = -sign;
    }
    const std::int64_t p = a[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const std::int64_t f = a[r * n + c];
      std::int64_t* row = &a[r * n];
      const std::int64_t* prow = &a[c * n];
      if (f == 0) {
        // Bareiss step degenerates to scaling by p/prev
        if (p != prev)
          for (std::size_t t = c + 1; t < n; ++t) {
            __int128 v = __int128(row[t]) * p;
            row[t] = std::int64_t(v / prev);
          }
        continue;
      }
      for (std::size_t t = c + 1; t < n; ++t) {
        __int128 v = __int128(row[t]) * p - __int128(f) * prow[t];
        v /= prev;
        if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("integer determinant overflow");
        row[t] = std::int64_t(v);
      }
      row[c] = 0;
    }
    prev = p;
  }
  return Integer(static_cast<long>(sign * a[n * n - 1]));
}

namespace {

// Coefficient extraction for the diagonal-subset expansion.
struct Expansion {
  const GraphMatrix& M;
  std::vector<std::size_t> rows, cols;   // kept rows/cols of M(I,J)
  std::vector<std::size_t> var_edges;    // edges carrying a live variable
  std::vector<int> var_row_pos, var_col_pos;

  Expansion(const GraphMatrix& m, const DodgsonSpec& s) : M(m) {
    std::vector<char> inI(M.size, 0), inJ(M.size, 0), inK(M.size, 0);
    for (auto i : s.I) inI[i] = 1;
    for (auto j : s.J) inJ[j] = 1;
    for (auto k : s.K) inK[k] = 1;
    for (std::size_t r = 0; r < M.size; ++r) {
      if (!inI[r]) rows.push_back(r);
      if (!inJ[r]) cols.push_back(r);
    }
    for (std::size_t e = 0; e < M.edges; ++e) {
      if (inI[e] || inJ[e] || inK[e]) continue;
      var_edges.push_back(e);
      var_row_pos.push_back(int(std::find(rows.begin(), rows.end(), e) - rows.begin()));
      var_col_pos.push_back(int(std::find(cols.begin(), cols.end(), e) - cols.begin()));
    }
  }

  // coefficient of prod_{k in chosen} x_{var_edges[k]}
  Integer coefficient(const std::vector<char>& chosen, std::vector<std::int64_t>& buf) const {
    std::vector<char> drop_row(M.size, 0), drop_col(M.size, 0);
    int parity = 0;
    for (std::size_t k = 0; k < var_edges.size(); ++k) {
      if (!chosen[k]) continue;
      drop_row[var_edges[k]] = drop_col[var_edges[k]] = 1;
      parity += var_row_pos[k] + var_col_pos[k];
    }
    std::size_t n = 0;
    for (auto r : rows) n += !drop_row[r];
    std::size_t nc = 0;
    for (auto c : cols) nc += !drop_col[c];
    if (n != nc) return 0;
    buf.assign(n * n, 0);
    std::size_t i = 0;
    for (auto r : rows) {
      if (drop_row[r]) continue;
      std::size_t j = 0;
      for (auto c : cols) {
        if (drop_col[c]) continue;
        buf[i * n + j] = M.at(r, c);
        ++j;
      }
      ++i;
    }
    Integer d = int_determinant(buf, n);
    return (parity & 1) ? Integer(-d) : d;
  }
};

MultiPoly expand(const Expansion& ex, std::optional<int> degree, unsigned threads) {
  const std::size_t k = ex.var_edges.size();
  if (k > 24) throw GraphError("diagonal-subset expansion limited to 24 variables");
  // enumerate masks; with a degree target only masks of that popcount
  std::vector<std::uint32_t> masks;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask)
    if (!degree || __builtin_popcount(mask) == *degree) masks.push_back(mask);

  threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), unsigned(masks.size() / 64 + 1)));
  std::vector<Integer> coeff(masks.size());
  auto work = [&](unsigned t) {
    std::vector<char> chosen(k);
    std::vector<std::int64_t> buf;
    for (std::size_t i = t; i < masks.size(); i += threads) {
      for (std::size_t b = 0; b < k; ++b) chosen[b] = masks[i] >> b & 1;
      coeff[i] = ex.coefficient(chosen, buf);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::vector<Term> terms;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (coeff[i] == 0) continue;
    Monomial m;
    for (std::size_t b = 0; b < k; ++b)
      if (masks[i] >> b & 1) m.e[ex.var_edges[b]] = 1;
    terms.push_back({m, coeff[i]});
  }
  return MultiPoly::from_terms(ex.M.edges, std::move(terms));
}

void check_spec(const GraphMatrix& M, const DodgsonSpec& s) {
  if (s.I.size() != s.J.size()) throw GraphError("Dodgson spec needs |I| = |J|");
  for (const auto* set : {&s.I, &s.J, &s.K})
    for (auto e : *set)
      if (e >= M.edges) throw GraphError("edge index out of range in Dodgson spec");
  for (const auto* set : {&s.I, &s.J, &s.K}) {
    auto c = *set;
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end()) != c.end()) throw GraphError("repeated edge in Dodgson spec");
  }
}

}  // namespace

MultiPoly dodgson(const GraphMatrix& m, const DodgsonSpec& spec, const ExpansionOptions& opt) {
  check_spec(m, spec);
  Expansion ex(m, spec);
  return expand(ex, opt.degree, opt.threads);
}

MultiPoly dodgson(const Graph& g, const DodgsonSpec& spec, int drop) {
  auto M = graph_matrix(g, drop);
  // Psi^{I,J}_K is homogeneous of degree h - |I|
  int deg = betti_h(g) - int(spec.I.size());
  if (component_count(g) != 1 || deg < 0) return dodgson(M, spec, {});
  return dodgson(M, spec, {deg, 0});
}

MultiPoly graph_matrix_determinant(const GraphMatrix& m, unsigned threads) {
  return dodgson(m, DodgsonSpec{}, {std::nullopt, threads});
}

MultiPoly five_invariant(const Graph& g, const std::array<std::size_t, 5>& e, int drop) {
  auto s = e;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw GraphError("five-invariant needs 5 distinct edges");
  for (auto x : e)
    if (x >= g.edge_count()) throw GraphError("edge index out of range");
  auto [i, j, k, l, m] = e;
  auto a = dodgson(g, {{i, j}, {k, l}, {m}}, drop);
  auto b = dodgson(g, {{i, k, m}, {j, l, m}, {}}, drop);
  auto c = dodgson(g, {{i, k}, {j, l}, {m}}, drop);
  auto d = dodgson(g, {{i, j, m}, {k, l, m}, {}}, drop);
  return a * b - c * d;
}

}  // namespace phi4
