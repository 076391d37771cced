#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phi4/multipoly.hpp"

namespace phi4 {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Multigraph. Vertex labels are positive integers and survive vertex
/// deletion. Edge i carries variable x_i (0-based) and is oriented
/// first -> second.
struct Graph {
  std::vector<int> labels;  // sorted
  std::vector<std::pair<int, int>> edges;
  std::string name;
  std::vector<std::string> tags;

  std::size_t vertex_count() const { return labels.size(); }
  std::size_t edge_count() const { return edges.size(); }
  bool has_vertex(int v) const;
  bool has_tag(const std::string& t) const;
  int degree(int v) const;
  int find_edge(int u, int v) const;  // unordered lookup, -1 if absent
};

Graph make_graph(int vertex_count, std::vector<std::pair<int, int>> edges, std::string name = {});

/// Graph fixture from <fixture dir>/graphs/<name>.json.
Graph load_graph_fixture(const std::string& name);
Graph load_graph_file(const std::string& path);
std::vector<std::string> graph_fixture_names();

Graph delete_vertex(const Graph& g, int v);

int component_count(const Graph& g);
int betti_h(const Graph& g);

/// N = 2h and N_gamma > 2h_gamma for every nonempty strict edge subset.
bool is_phi4_eligible(const Graph& g);

/// Matrix-tree count from the reduced Laplacian.
Integer spanning_tree_count(const Graph& g);

/// Sum over spanning trees of the product of the variables of the edges not
/// in the tree.
MultiPoly kirchhoff_polynomial(const Graph& g);

/// Symmetric matrix with diagonal edge variables in the upper-left block and
/// the oriented incidence matrix (one vertex dropped) off the diagonal.
struct GraphMatrix {
  std::size_t edges = 0;            // n: number of variable rows
  std::size_t size = 0;             // n + m - 1
  int dropped_vertex = 0;
  std::vector<int> vertex_of_row;   // label of vertex row k (k >= edges)
  std::vector<std::int8_t> integer_part;  // row-major size x size, diagonal of edge rows is 0

  int at(std::size_t r, std::size_t c) const { return integer_part[r * size + c]; }
};

GraphMatrix graph_matrix(const Graph& g, int drop);

struct DodgsonSpec {
  std::vector<std::size_t> I, J, K;
};

struct ExpansionOptions {
  /// Only expand diagonal subsets whose complement gives this degree;
  /// nullopt expands all 2^k subsets.
  std::optional<int> degree;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// det M(I,J)_K by diagonal-subset expansion.
MultiPoly dodgson(const GraphMatrix& m, const DodgsonSpec& spec, const ExpansionOptions& opt = {});
MultiPoly dodgson(const Graph& g, const DodgsonSpec& spec, int drop);

/// Full determinant of the graph matrix (all diagonal subsets).
MultiPoly graph_matrix_determinant(const GraphMatrix& m, unsigned threads = 0);

/// Psi^{ij,kl}_m Psi^{ikm,jlm} - Psi^{ik,jl}_m Psi^{ijm,klm}.
MultiPoly five_invariant(const Graph& g, const std::array<std::size_t, 5>& e, int drop);

/// Integer determinant of a small dense matrix; exact.
Integer int_determinant(std::vector<std::int64_t> a, std::size_t n);

}  // namespace phi4
