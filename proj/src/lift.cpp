#include <map>

#include "phi4/reduction.hpp"

namespace phi4 {

namespace {

// all exponent vectors of total degree d in n variables
void monomials_of_degree(std::size_t n, int d, std::vector<std::vector<int>>& out, std::vector<int>& cur,
                         std::size_t i = 0) {
  if (i + 1 == n) {
    cur[i] = d;
    out.push_back(cur);
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[i] = e;
    monomials_of_degree(n, d - e, out, cur, i + 1);
  }
}

std::vector<std::vector<int>> monomials_of_degree(std::size_t n, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  monomials_of_degree(n, d, out, cur);
  return out;
}

}  // namespace

std::optional<MultiPoly> lift_through_graph(const MultiPoly& D, const std::vector<std::pair<MultiPoly, MultiPoly>>& fibers,
                                            const std::vector<int>& degrees) {
  const std::size_t n = D.arity(), r = fibers.size();
  if (degrees.size() != r + 1) throw std::invalid_argument("need one degree per factor");
  const std::size_t total = n + 2 * r;
  if (total > kMaxVars) throw std::invalid_argument("too many variables for a lift");

  // unknown k <-> product of one monomial per factor
  std::vector<std::vector<std::vector<int>>> per(r + 1);
  per[0] = monomials_of_degree(n, degrees[0]);
  for (std::size_t f = 1; f <= r; ++f) per[f] = monomials_of_degree(2, degrees[f]);
  std::vector<std::vector<std::size_t>> unknowns(1);
  for (std::size_t f = 0; f <= r; ++f) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& u : unknowns)
      for (std::size_t m = 0; m < per[f].size(); ++m) {
        next.push_back(u);
        next.back().push_back(m);
      }
    unknowns.swap(next);
  }

  // image of each unknown as a polynomial in x, with a row per monomial
  std::map<Monomial, std::size_t, std::greater<>> row_of;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> columns(unknowns.size());
  auto row = [&](const Monomial& m) {
    auto [it, fresh] = row_of.emplace(m, row_of.size());
    return it->second;
  };
  for (std::size_t k = 0; k < unknowns.size(); ++k) {
    Monomial m0;
    for (std::size_t i = 0; i < n; ++i) m0.e[i] = std::uint8_t(per[0][unknowns[k][0]][i]);
    MultiPoly img = MultiPoly::monomial(n, m0);
    for (std::size_t f = 1; f <= r; ++f) {
      const auto& e = per[f][unknowns[k][f]];
      img *= fibers[f - 1].first.pow(unsigned(e[0])) * fibers[f - 1].second.pow(unsigned(e[1]));
    }
    for (const auto& t : img.terms()) columns[k].push_back({row(t.mono), Rational(t.coeff, img.denominator())});
  }
  for (const auto& t : D.terms()) row(t.mono);

  const std::size_t R = row_of.size(), C = unknowns.size();
  std::vector<std::vector<Rational>> a(R, std::vector<Rational>(C + 1, 0));
  for (std::size_t k = 0; k < C; ++k)
    for (auto [i, c] : columns[k]) a[i][k] = c;
  for (const auto& t : D.terms()) a[row_of.at(t.mono)][C] = Rational(t.coeff, D.denominator());

  // reduced row echelon form
  std::vector<std::size_t> pivot_col;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < C && rank < R; ++c) {
    std::size_t piv = rank;
    while (piv < R && a[piv][c] == 0) ++piv;
    if (piv == R) continue;
    std::swap(a[piv], a[rank]);
    const Rational inv = 1 / a[rank][c];
    for (auto& x : a[rank]) x *= inv;
    for (std::size_t i = 0; i < R; ++i) {
      if (i == rank || a[i][c] == 0) continue;
      const Rational f = a[i][c];
      for (std::size_t j = c; j <= C; ++j) a[i][j] -= f * a[rank][j];
    }
    pivot_col.push_back(c);
    ++rank;
  }
  for (std::size_t i = rank; i < R; ++i)
    if (a[i][C] != 0) return std::nullopt;

  std::vector<Term> terms;
  Integer den = 1;
  for (std::size_t i = 0; i < rank; ++i) den = lcm(den, a[i][C].get_den());
  for (std::size_t i = 0; i < rank; ++i) {
    if (a[i][C] == 0) continue;
    const auto& u = unknowns[pivot_col[i]];
    Monomial m;
    for (std::size_t v = 0; v < n; ++v) m.e[v] = std::uint8_t(per[0][u[0]][v]);
    for (std::size_t f = 1; f <= r; ++f) {
      m.e[n + 2 * (f - 1)] = std::uint8_t(per[f][u[f]][0]);
      m.e[n + 2 * (f - 1) + 1] = std::uint8_t(per[f][u[f]][1]);
    }
    terms.push_back({m, Integer(a[i][C] * den)});
  }
  return MultiPoly::from_terms(total, std::move(terms), den);
}

}  // namespace phi4
