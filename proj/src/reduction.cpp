#include "phi4/reduction.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace phi4 {

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::linear: return "linear";
    case StepKind::resultant: return "resultant";
    case StepKind::subspace: return "subspace";
    case StepKind::to_weighted_cover: return "to_weighted_cover";
    case StepKind::complete_square: return "complete_square";
    case StepKind::to_hypersurface: return "to_hypersurface";
    case StepKind::fixture_substitution: return "fixture_substitution";
  }
  return "?";
}

std::string to_string(StepCheck::Status s) {
  switch (s) {
    case StepCheck::Status::passed: return "passed";
    case StepCheck::Status::failed: return "failed";
    case StepCheck::Status::skipped_budget: return "skipped (budget)";
    case StepCheck::Status::skipped_invalid: return "skipped (invalid prime)";
  }
  return "?";
}

int SimilarityChain::composite_sign() const {
  int s = 1;
  for (const auto& st : steps) s *= st.sign_flip;
  return s;
}

void SimilarityChain::append(SimilarityStep step, VarietyModel to) {
  if (models.empty()) throw std::logic_error("chain has no starting model");
  step.input_label = models.back().label;
  step.output_label = to.label;
  steps.push_back(std::move(step));
  models.push_back(std::move(to));
}

int dimension_sign(const VarietyModel& from, const VarietyModel& to) {
  return (to.dimension() - from.dimension()) % 2 ? -1 : 1;
}

std::pair<MultiPoly, SimilarityStep> linear_reduce(const MultiPoly& f, std::size_t v) {
  if (f.degree_in(v) != 1)
    throw DegreeNotOne("variable x" + std::to_string(v) + " has degree " + std::to_string(f.degree_in(v)));
  auto c = coeffs_in_var(f, v);
  SimilarityStep st;
  st.kind = StepKind::linear;
  st.sign_flip = -1;
  st.note = "coefficient of x" + std::to_string(v);
  return {remove_variable(c[1], v), st};
}

std::optional<std::pair<MultiPoly, SimilarityStep>> resultant_reduce(const MultiPoly& f, std::size_t v) {
  if (f.degree_in(v) != 2)
    throw StepNotApplicable("resultant reduction needs degree 2 in x" + std::to_string(v), v, f);
  auto root = poly_sqrt(disc_wrt(f, v));
  if (!root) return std::nullopt;
  SimilarityStep st;
  st.kind = StepKind::resultant;
  st.sign_flip = -1;
  st.note = "square root of the discriminant in x" + std::to_string(v);
  return std::make_pair(remove_variable(*root, v), st);
}

std::pair<MultiPoly, SimilarityChain> denominator_chain(const MultiPoly& f, const std::vector<std::size_t>& order,
                                                        std::vector<std::string> names, const std::string& label) {
  if (names.empty()) names = default_var_names(f.arity());
  if (names.size() != f.arity()) throw std::invalid_argument("names do not match the arity");
  // position of each original variable in the current polynomial
  std::vector<std::ptrdiff_t> pos(f.arity());
  std::iota(pos.begin(), pos.end(), 0);
  std::vector<std::string> live = names;

  SimilarityChain chain;
  MultiPoly cur = f.primitive();
  auto model = [&](const std::string& l) {
    auto m = hypersurface_model(cur, l);
    m.vars = live;
    return m;
  };
  chain.models.push_back(model(label));
  for (std::size_t v : order) {
    if (v >= f.arity() || pos[v] < 0) throw std::invalid_argument("variable eliminated twice or out of range");
    const auto at = std::size_t(pos[v]);
    const int d = cur.degree_in(at);
    SimilarityStep st;
    if (d == 1) {
      auto [g, s] = linear_reduce(cur, at);
      cur = g;
      st = s;
    } else if (d == 2) {
      auto r = resultant_reduce(cur, at);
      if (!r) throw StepNotApplicable("discriminant in " + names[v] + " is not a square", v, cur);
      cur = r->first;
      st = r->second;
    } else {
      throw StepNotApplicable(names[v] + " has degree " + std::to_string(d) + "; neither reduction applies", v, cur);
    }
    if (cur.is_zero()) throw StepNotApplicable("reduction by " + names[v] + " gives zero", v, cur);
    cur = cur.primitive();
    st.note += " (" + names[v] + ")";
    pos[v] = -1;
    for (auto& q : pos)
      if (q > std::ptrdiff_t(at)) --q;
    live.erase(live.begin() + std::ptrdiff_t(at));
    chain.append(st, model("after " + names[v]));
  }
  return {cur, std::move(chain)};
}

std::pair<VarietyModel, SimilarityStep> subspace_reduce(const MultiPoly& f, const std::vector<std::size_t>& vars,
                                                        const std::string& label) {
  const std::size_t n = f.arity();
  const std::size_t k = vars.size();
  if (k == 0 || k >= n) throw MembershipFailure("need between 1 and n chosen variables");
  if (!f.is_homogeneous() || f.is_zero()) throw MembershipFailure("subspace reduction needs a homogeneous form");
  std::vector<int> slot(n, -1);
  for (std::size_t j = 0; j < k; ++j) {
    if (vars[j] >= n || slot[vars[j]] >= 0) throw MembershipFailure("bad variable set");
    slot[vars[j]] = int(j);
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (slot[i] < 0) rest.push_back(i);
  const std::size_t m = rest.size() + k;  // (n-k) + k coordinates
  std::vector<Term> out;
  for (const auto& t : f.terms()) {
    unsigned d = 0;
    for (auto v : vars) d += t.mono.e[v];
    if (d < k)
      throw MembershipFailure("monomial " + to_string(MultiPoly::monomial(n, t.mono)) + " has degree " +
                              std::to_string(d) + " < " + std::to_string(k) + " in the chosen variables");
    if (d != k) continue;
    Monomial mm;
    for (std::size_t r = 0; r < rest.size(); ++r) mm.e[r] = t.mono.e[rest[r]];
    for (std::size_t j = 0; j < k; ++j) mm.e[rest.size() + j] = t.mono.e[vars[j]];
    out.push_back({mm, t.coeff});
  }
  MultiPoly e = MultiPoly::from_terms(m, std::move(out), f.denominator());
  if (e.is_zero()) throw MembershipFailure("f lies in a higher power of the ideal; exceptional equation vanishes");
  bool involves_rest = false;
  for (std::size_t r = 0; r < rest.size(); ++r) involves_rest |= e.involves(r);
  if (!involves_rest && f.total_degree() > int(k))
    throw MembershipFailure("degenerate: exceptional equation only involves the chosen variables");
  auto model = multiproj_model({rest.size() - 1, k - 1}, {e.primitive()}, std::nullopt, label);
  std::vector<std::string> names;
  for (std::size_t r = 0; r < rest.size(); ++r) names.push_back("x" + std::to_string(rest[r]));
  for (std::size_t j = 0; j < k; ++j) names.push_back("y" + std::to_string(j));
  model.vars = names;
  SimilarityStep st;
  st.kind = StepKind::subspace;
  st.sign_flip = -1;
  st.invalid_primes = {2};
  st.note = "exceptional divisor over a codimension-" + std::to_string(k) + " coordinate space";
  return {model, st};
}

std::pair<VarietyModel, SimilarityStep> normal_to_weighted_cover(const MultiPoly& f, std::size_t a, std::size_t b,
                                                                 const std::string& label) {
  const std::size_t n = f.arity();
  if (a >= n || b >= n || a == b) throw MembershipFailure("bad normal-reduction variables");
  if (!f.is_homogeneous() || f.is_zero()) throw MembershipFailure("normal reduction needs a homogeneous form");
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (i != a && i != b) rest.push_back(i);
  std::vector<Term> c[3];
  for (const auto& t : f.terms()) {
    const unsigned ea = t.mono.e[a], eb = t.mono.e[b];
    if (ea + eb < 2) throw MembershipFailure("f is not in (x" + std::to_string(a) + ", x" + std::to_string(b) + ")^2");
    if (ea + eb != 2) continue;
    Monomial mm;
    for (std::size_t r = 0; r < rest.size(); ++r) mm.e[r] = t.mono.e[rest[r]];
    c[eb].push_back({mm, t.coeff});  // eb = 0: c0, 1: c1, 2: c2
  }
  const std::size_t m = rest.size();
  auto c0 = MultiPoly::from_terms(m, c[0], f.denominator());
  auto c1 = MultiPoly::from_terms(m, c[1], f.denominator());
  auto c2 = MultiPoly::from_terms(m, c[2], f.denominator());
  MultiPoly D = c1 * c1 - 4 * c0 * c2;
  if (D.is_zero()) throw MembershipFailure("discriminant vanishes identically; the cover is not reduced");
  auto model = weighted_cover_model(D, label);
  std::vector<std::string> names;
  for (auto r : rest) names.push_back("x" + std::to_string(r));
  model.vars = names;
  SimilarityStep st;
  st.kind = StepKind::to_weighted_cover;
  st.sign_flip = -1;
  st.invalid_primes = {2};
  st.note = "normal reduction along x" + std::to_string(a) + " = x" + std::to_string(b) + " = 0";
  return {model, st};
}

std::pair<VarietyModel, SimilarityStep> to_hypersurface(const VarietyModel& cover, const MultiPoly& g_hint,
                                                        const std::string& label) {
  if (cover.ambient.kind != Ambient::Kind::WeightedProj || !cover.branch)
    throw WrongDegree("to_hypersurface needs a weighted double cover t^2 = D");
  const MultiPoly& D = *cover.branch;
  if (g_hint.arity() != D.arity()) throw ArityMismatch("hint arity differs from the cover base");
  const int want = D.total_degree() / 2 - 1;
  if (!g_hint.is_homogeneous() || g_hint.total_degree() != want)
    throw WrongDegree("hint has degree " + std::to_string(g_hint.total_degree()) + ", need " + std::to_string(want));
  MultiPoly h;
  try {
    h = exact_div(D, g_hint);
  } catch (const NotDivisible&) {
    throw HintDoesNotDivide("hint does not divide the branch function");
  }
  const std::size_t n = D.arity();
  std::vector<std::size_t> shift(n);
  std::iota(shift.begin(), shift.end(), 1);
  MultiPoly v0 = MultiPoly::variable(n + 1, 0);
  MultiPoly H = v0 * v0 * rename_variables(g_hint, shift, n + 1) - rename_variables(h, shift, n + 1);
  auto model = hypersurface_model(H.primitive(), label);
  std::vector<std::string> names = {"v0"};
  auto base = cover.vars.size() == n ? cover.vars : default_var_names(n);
  names.insert(names.end(), base.begin(), base.end());
  model.vars = names;
  SimilarityStep st;
  st.kind = StepKind::to_hypersurface;
  st.sign_flip = 1;
  st.invalid_primes = {2};
  st.note = "v0^2 g - h with g of degree " + std::to_string(want);
  return {model, st};
}

std::pair<VarietyModel, SimilarityStep> complete_square(const MultiPoly& f, std::size_t v, const std::string& label) {
  if (f.degree_in(v) != 2) throw WrongDegree("complete_square needs degree 2 in the chosen variable");
  MultiPoly D = remove_variable(disc_wrt(f, v), v);
  // the exact discriminant is kept: scaling by a non-square changes counts
  auto model = weighted_cover_model(D, label);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < f.arity(); ++i)
    if (i != v) names.push_back("x" + std::to_string(i));
  model.vars = names;
  SimilarityStep st;
  st.kind = StepKind::complete_square;
  st.sign_flip = 1;
  st.invalid_primes = {2};
  st.note = "discriminant in x" + std::to_string(v);
  return {model, st};
}

SimilarityStep fixture_step(const VarietyModel& from, const VarietyModel& to, int sign, std::string note) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
  SimilarityStep st;
  st.kind = StepKind::fixture_substitution;
  st.sign_flip = sign;
  st.input_label = from.label;
  st.output_label = to.label;
  st.note = std::move(note);
  return st;
}

std::vector<MultiPoly> linear_factors(const MultiPoly& D, int bound) {
  std::vector<MultiPoly> out;
  if (D.is_zero() || D.is_constant()) return out;
  const std::size_t n = D.arity();
  std::vector<std::size_t> occ;
  for (std::size_t i = 0; i < n; ++i)
    if (D.involves(i)) occ.push_back(i);
  const std::uint32_t P = 2147483629u;  // prime below 2^31
  const auto R = reduce_mod_p(D, P);
  std::mt19937_64 rng(12345);
  auto inv = [&](std::uint64_t a) {
    std::uint64_t r = 1, e = P - 2;
    a %= P;
    while (e) {
      if (e & 1) r = r * a % P;
      a = a * a % P;
      e >>= 1;
    }
    return r;
  };
  // candidate coefficient vectors ordered by height, then lexicographically
  std::vector<std::vector<int>> cands;
  std::vector<int> c(occ.size(), -bound);
  for (;;) {
    int g = 0, first = 0;
    for (int x : c) {
      g = std::gcd(g, std::abs(x));
      if (!first && x) first = x;
    }
    if (g == 1 && first > 0) cands.push_back(c);
    std::size_t k = 0;
    while (k < c.size() && ++c[k] > bound) c[k++] = -bound;
    if (k == c.size()) break;
  }
  auto height = [](const std::vector<int>& v) {
    int h = 0;
    for (int x : v) h = std::max(h, std::abs(x));
    return h;
  };
  std::stable_sort(cands.begin(), cands.end(), [&](const auto& a, const auto& b) {
    int ha = height(a), hb = height(b);
    if (ha != hb) return ha < hb;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  });
  MultiPoly rest = D;
  std::vector<std::uint32_t> pt(n, 0);
  for (const auto& cv : cands) {
    // D must vanish on the hyperplane: test random points mod P
    std::size_t piv = 0;
    while (cv[piv] == 0) ++piv;
    bool vanish = true;
    for (int trial = 0; trial < 3 && vanish; ++trial) {
      std::fill(pt.begin(), pt.end(), 0);
      std::uint64_t s = 0;
      for (std::size_t j = 0; j < occ.size(); ++j) {
        if (j == piv) continue;
        pt[occ[j]] = std::uint32_t(rng() % P);
        s = (s + std::uint64_t((cv[j] % int(P) + int(P)) % int(P)) * pt[occ[j]]) % P;
      }
      const std::uint64_t a = std::uint64_t((cv[piv] % int(P) + int(P)) % int(P));
      pt[occ[piv]] = std::uint32_t((P - s) % P * inv(a) % P);
      vanish = R.evaluate(pt) == 0;
    }
    if (!vanish) continue;
    MultiPoly ell(n);
    for (std::size_t j = 0; j < occ.size(); ++j)
      if (cv[j]) ell += MultiPoly::variable(n, occ[j]) * Rational(cv[j]);
    while (divides(ell, rest)) {
      out.push_back(ell);
      rest = exact_div(rest, ell);
    }
  }
  return out;
}

std::optional<MultiPoly> auto_split_search(const MultiPoly& D, int target_degree, int bound) {
  if (!D.is_homogeneous()) throw std::invalid_argument("auto_split_search needs a homogeneous polynomial");
  if (target_degree < 0) return std::nullopt;
  if (target_degree == 0) return MultiPoly::constant(D.arity(), 1);
  auto all = linear_factors(D, bound);
  std::vector<MultiPoly> distinct;
  std::vector<int> mult;
  for (const auto& l : all) {
    auto it = std::find(distinct.begin(), distinct.end(), l);
    if (it == distinct.end()) {
      distinct.push_back(l);
      mult.push_back(1);
    } else {
      ++mult[std::size_t(it - distinct.begin())];
    }
  }
  const int r = int(distinct.size());
  if (r == 0) return std::nullopt;
  int maxm = *std::max_element(mult.begin(), mult.end());
  for (int cap = 1; cap <= maxm; ++cap) {
    // multisets i1 <= i2 <= ... <= i_t in lexicographic order
    std::vector<int> idx(std::size_t(target_degree), 0);
    for (;;) {
      std::vector<int> used(std::size_t(r), 0);
      bool ok = true;
      for (int i : idx)
        if (++used[std::size_t(i)] > std::min(cap, mult[std::size_t(i)])) ok = false;
      if (ok) {
        MultiPoly g = MultiPoly::constant(D.arity(), 1);
        for (int i : idx) g *= distinct[std::size_t(i)];
        return g;
      }
      int k = target_degree - 1;
      while (k >= 0 && idx[std::size_t(k)] == r - 1) --k;
      if (k < 0) break;
      ++idx[std::size_t(k)];
      for (int j = k + 1; j < target_degree; ++j) idx[std::size_t(j)] = idx[std::size_t(k)];
    }
  }
  return std::nullopt;
}

std::optional<PolyMatch> match_up_to_symmetry(const MultiPoly& f, const MultiPoly& g,
                                              const std::vector<Rational>& scales) {
  if (f.arity() != g.arity() || f.size() != g.size() || f.is_zero()) return std::nullopt;
  const std::size_t n = f.arity();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Monomial> fs;
  for (const auto& t : f.terms()) fs.push_back(t.mono);
  do {
    MultiPoly gp = rename_variables(g, perm, n);
    bool same = true;
    for (std::size_t k = 0; k < gp.size() && same; ++k) same = gp.terms()[k].mono == fs[k];
    if (!same) continue;
    std::vector<std::size_t> choice(n, 0);
    for (;;) {
      std::vector<Rational> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = scales[choice[i]];
      std::vector<MultiPoly> images;
      for (std::size_t i = 0; i < n; ++i) images.push_back(MultiPoly::variable(n, i) * s[i]);
      MultiPoly gs = compose(gp, images);
      Rational c = f.leading_coeff() / gs.leading_coeff();
      if (f == gs * c) return PolyMatch{perm, s, c};
      std::size_t k = 0;
      while (k < n && ++choice[k] == scales.size()) choice[k++] = 0;
      if (k == n) break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::nullopt;
}

std::set<std::uint32_t> denominator_primes(const VarietyModel& m) {
  std::set<std::uint32_t> out;
  auto add = [&](const MultiPoly& f) {
    Integer d = f.denominator();
    for (std::uint32_t q = 2; q <= 1000 && d > 1; ++q)
      while (d % q == 0) {
        out.insert(q);
        d /= q;
      }
  };
  for (const auto& f : m.equations) add(f);
  if (m.branch) add(*m.branch);
  return out;
}

bool ChainReport::any_failed() const {
  for (const auto& c : checks)
    if (c.status == StepCheck::Status::failed) return true;
  for (const auto& c : composite)
    if (c.status == StepCheck::Status::failed) return true;
  return false;
}

bool ChainReport::step_verified(std::size_t step) const {
  bool any = false;
  for (const auto& c : checks) {
    if (c.step != step) continue;
    if (c.status == StepCheck::Status::failed || c.status == StepCheck::Status::skipped_budget) return false;
    any |= c.status == StepCheck::Status::passed;
  }
  return any;
}

namespace {

bool signed_congruence(const Integer& v, const Integer& w, int sign, std::uint32_t p) {
  Integer lhs = v - 1, rhs = sign * (w - 1);
  Integer d = lhs - rhs;
  return d % p == 0;
}

}  // namespace

ChainReport verify_chain(SimilarityChain& chain, const std::vector<std::uint32_t>& primes, const VerifyOptions& opt) {
  ChainReport rep;
  const std::size_t S = chain.steps.size();
  // one count per (model, prime), shared by the two steps touching a model
  const std::size_t M = chain.models.size();
  std::vector<std::optional<Integer>> counts(M * primes.size());
  std::vector<std::string> over(M * primes.size());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < primes.size(); ++k) jobs.emplace_back(m, k);
  std::atomic<std::size_t> next{0};
  CountOptions co;
  co.threads = 1;
  co.budget = opt.budget;
  auto invalid_for_model = [&](std::size_t m, std::uint32_t p) { return denominator_primes(chain.models[m]).count(p) > 0; };
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      auto [m, k] = jobs[j];
      const auto& model = chain.models[m];
      const std::uint32_t p = primes[k];
      if (p == 2 || invalid_for_model(m, p)) continue;
      const long double size = enumeration_size(model.ambient.group_sizes(), model.ambient.coordinate_count(), p);
      if (size > (long double)opt.budget && !has_fiber_shape(model)) {
        over[j] = "model '" + model.label + "' needs " + std::to_string((double)size) + " points";
        continue;
      }
      try {
        counts[j] = cached_count(opt.cache, model, p, co);
      } catch (const BudgetExceeded& e) {
        over[j] = e.what();
      }
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  auto check = [&](std::size_t step, std::size_t a, std::size_t b, int sign, const std::set<std::uint32_t>& invalid,
                   std::size_t k) {
    StepCheck c;
    c.step = step;
    c.p = primes[k];
    const std::size_t ja = a * primes.size() + k, jb = b * primes.size() + k;
    if (c.p == 2 || invalid.count(c.p) || invalid_for_model(a, c.p) || invalid_for_model(b, c.p)) {
      c.status = StepCheck::Status::skipped_invalid;
      c.reason = "step or model not defined at p=" + std::to_string(c.p);
    } else if (!counts[ja] || !counts[jb]) {
      c.status = StepCheck::Status::skipped_budget;
      c.reason = !over[ja].empty() ? over[ja] : over[jb];
    } else {
      c.count_in = *counts[ja];
      c.count_out = *counts[jb];
      c.status = signed_congruence(c.count_in, c.count_out, sign, c.p) ? StepCheck::Status::passed
                                                                       : StepCheck::Status::failed;
    }
    return c;
  };
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t k = 0; k < primes.size(); ++k) {
      auto c = check(s, s, s + 1, chain.steps[s].sign_flip, chain.steps[s].invalid_primes, k);
      if (c.status == StepCheck::Status::passed) chain.steps[s].verified_primes.insert(c.p);
      rep.checks.push_back(c);
    }
  if (S > 0) {
    std::set<std::uint32_t> invalid;
    for (const auto& st : chain.steps) invalid.insert(st.invalid_primes.begin(), st.invalid_primes.end());
    for (std::size_t k = 0; k < primes.size(); ++k)
      rep.composite.push_back(check(S, 0, M - 1, chain.composite_sign(), invalid, k));
  }
  return rep;
}

MultiPoly square_normalized(const MultiPoly& f) {
  MultiPoly g = f * Rational(f.denominator() * f.denominator());
  Integer content = 0;
  for (const auto& t : g.terms()) content = gcd(content, t.coeff);
  Integer sq = 1;
  for (Integer q = 2; q * q <= content; ++q)
    while (content % (q * q) == 0) {
      content /= q * q;
      sq *= q;
    }
  return g * Rational(1, sq * sq);
}

}  // namespace phi4
