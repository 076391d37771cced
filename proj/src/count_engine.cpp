#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <thread>

#include "phi4/pointcount.hpp"

namespace phi4 {

namespace {

using u32 = std::uint32_t;
using u64 = std::uint64_t;

// Residue polynomial with monomials packed into one word: variable 0 sits in
// the top bits, so descending key order is the lex order and specializing the
// leading remaining variable splits the terms into sorted runs.
struct Packed {
  std::vector<u64> key;
  std::vector<u32> c;

  bool is_zero() const { return key.empty(); }
  bool is_constant() const { return key.empty() || (key.size() == 1 && key[0] == 0); }
  u32 constant() const { return key.empty() ? 0 : c[0]; }
};

struct Layout {
  std::vector<unsigned> shift;
  std::vector<u64> mask;
};

Layout make_layout(const std::vector<const ResiduePoly*>& polys, std::size_t n) {
  std::vector<unsigned> maxdeg(n, 0);
  for (const auto* f : polys)
    for (const auto& m : f->monos)
      for (std::size_t i = 0; i < n; ++i) maxdeg[i] = std::max<unsigned>(maxdeg[i], m.e[i]);
  Layout L;
  L.shift.assign(n, 0);
  L.mask.assign(n, 0);
  unsigned used = 0;
  for (std::size_t k = n; k-- > 0;) {
    unsigned w = std::bit_width(maxdeg[k]);
    L.shift[k] = used;
    L.mask[k] = w ? ((u64(1) << w) - 1) : 0;
    used += w;
  }
  if (used > 64) throw std::length_error("exponents do not fit the packed counting layout");
  return L;
}

Packed pack(const ResiduePoly& f, const Layout& L, std::size_t n) {
  std::vector<std::pair<u64, u32>> t;
  for (std::size_t k = 0; k < f.monos.size(); ++k) {
    if (f.coeffs[k] == 0) continue;
    u64 key = 0;
    for (std::size_t i = 0; i < n; ++i) key |= u64(f.monos[k].e[i]) << L.shift[i];
    t.emplace_back(key, f.coeffs[k]);
  }
  std::sort(t.begin(), t.end(), [](auto& a, auto& b) { return a.first > b.first; });
  Packed p;
  for (auto& [k, c] : t) {
    if (!p.key.empty() && p.key.back() == k) {
      p.c.back() = u32((u64(p.c.back()) + c) % f.p);
      continue;
    }
    p.key.push_back(k);
    p.c.push_back(c);
  }
  return p;
}

struct Problem {
  u32 p = 0;
  std::size_t n = 0;
  Layout layout;
  std::vector<Packed> eqs;
  std::optional<Packed> cover;
};

class Enumerator {
 public:
  explicit Enumerator(const Problem& pr) : pr_(pr), p_(pr.p), n_(pr.n) {
    unsigned maxe = 0;
    for (auto m : pr.layout.mask) maxe = std::max<unsigned>(maxe, unsigned(m));
    pw_.assign(std::size_t(p_) * (maxe + 1), 0);
    maxe_ = maxe + 1;
    for (u32 a = 0; a < p_; ++a) {
      u64 x = 1;
      for (unsigned e = 0; e <= maxe; ++e) {
        pw_[std::size_t(a) * maxe_ + e] = u32(x);
        x = x * a % p_;
      }
    }
    chi_.assign(p_, -1);
    chi_[0] = 0;
    for (u64 x = 1; x < p_; ++x) chi_[x * x % p_] = 1;
    eqs_.resize(n_ + 1);
    cover_.resize(n_ + 1);
    tmp_.resize(n_ + 1);
  }

  // modes[i] = -1 for a free coordinate, otherwise its fixed value.
  u64 run(const std::vector<int>& modes) {
    modes_ = &modes;
    free_after_.assign(n_ + 1, 0);
    for (std::size_t i = n_; i-- > 0;) free_after_[i] = free_after_[i + 1] + (modes[i] < 0);
    eqs_[0] = pr_.eqs;
    has_cover_ = pr_.cover.has_value();
    if (has_cover_) cover_[0] = *pr_.cover;
    return rec(0, has_cover_);
  }

 private:
  u64 ipow(u64 b, unsigned e) const {
    u64 r = 1;
    while (e--) r *= b;
    return r;
  }

  int chi(u32 v) const { return chi_[v]; }

  void specialize(const Packed& in, std::size_t var, u32 a, Packed& out, Packed& tmp) {
    out.key.clear();
    out.c.clear();
    const unsigned sh = pr_.layout.shift[var];
    const u64 mk = pr_.layout.mask[var];
    const u64 clear = ~(mk << sh);
    const std::size_t m = in.key.size();
    if (a == 0 || mk == 0) {
      for (std::size_t k = 0; k < m; ++k)
        if (((in.key[k] >> sh) & mk) == 0) {
          out.key.push_back(in.key[k]);
          out.c.push_back(in.c[k]);
        }
      return;
    }
    const u32* pw = &pw_[std::size_t(a) * maxe_];
    std::size_t k = 0;
    bool first = true;
    while (k < m) {
      const unsigned e = unsigned((in.key[k] >> sh) & mk);
      std::size_t end = k;
      while (end < m && ((in.key[end] >> sh) & mk) == e) ++end;
      const u64 s = pw[e];
      if (first) {
        for (std::size_t r = k; r < end; ++r) {
          out.key.push_back(in.key[r] & clear);
          out.c.push_back(u32(in.c[r] * s % p_));
        }
        first = false;
      } else {
        tmp.key.clear();
        tmp.c.clear();
        std::size_t i = 0, r = k;
        while (i < out.key.size() || r < end) {
          const u64 kr = r < end ? (in.key[r] & clear) : 0;
          if (r >= end || (i < out.key.size() && out.key[i] > kr)) {
            tmp.key.push_back(out.key[i]);
            tmp.c.push_back(out.c[i]);
            ++i;
          } else if (i >= out.key.size() || out.key[i] < kr) {
            tmp.key.push_back(kr);
            tmp.c.push_back(u32(in.c[r] * s % p_));
            ++r;
          } else {
            const u32 v = u32((out.c[i] + in.c[r] * s) % p_);
            if (v) {
              tmp.key.push_back(kr);
              tmp.c.push_back(v);
            }
            ++i;
            ++r;
          }
        }
        std::swap(out, tmp);
      }
      k = end;
    }
  }

  // Univariate evaluation at the last coordinate.
  u32 eval_last(const Packed& f, u32 a) const {
    const unsigned sh = pr_.layout.shift[n_ - 1];
    const u64 mk = pr_.layout.mask[n_ - 1];
    const u32* pw = &pw_[std::size_t(a) * maxe_];
    u64 s = 0;
    for (std::size_t k = 0; k < f.key.size(); ++k) s += u64(f.c[k]) * pw[(f.key[k] >> sh) & mk];
    return u32(s % p_);
  }

  u64 rec(std::size_t i, bool cover_live) {
    auto& eqs = eqs_[i];
    u64 factor = 1;
    // drop vanished equations, stop on a nonzero constant
    std::size_t w = 0;
    for (std::size_t k = 0; k < eqs.size(); ++k) {
      if (eqs[k].is_zero()) continue;
      if (eqs[k].is_constant()) return 0;
      if (w != k) std::swap(eqs[w], eqs[k]);
      ++w;
    }
    eqs.resize(w);
    if (cover_live && cover_[i].is_constant()) {
      factor = u64(1 + chi(cover_[i].constant()));
      cover_live = false;
    }
    if (factor == 0) return 0;
    if (eqs.empty() && !cover_live) return factor * ipow(p_, free_after_[i]);
    const int mode = (*modes_)[i];
    auto& next = eqs_[i + 1];
    next.resize(eqs.size());
    if (mode >= 0) {
      for (std::size_t k = 0; k < eqs.size(); ++k) specialize(eqs[k], i, u32(mode), next[k], tmp_[i]);
      if (cover_live) specialize(cover_[i], i, u32(mode), cover_[i + 1], tmp_[i]);
      return factor * rec(i + 1, cover_live);
    }
    if (i + 1 == n_) {
      u64 total = 0;
      for (u32 a = 0; a < p_; ++a) {
        bool ok = true;
        for (const auto& f : eqs)
          if (eval_last(f, a)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        total += cover_live ? u64(1 + chi(eval_last(cover_[i], a))) : 1;
      }
      return factor * total;
    }
    u64 total = 0;
    for (u32 a = 0; a < p_; ++a) {
      next.resize(eqs.size());
      for (std::size_t k = 0; k < eqs.size(); ++k) specialize(eqs[k], i, a, next[k], tmp_[i]);
      if (cover_live) specialize(cover_[i], i, a, cover_[i + 1], tmp_[i]);
      total += rec(i + 1, cover_live);
    }
    return factor * total;
  }

  const Problem& pr_;
  u32 p_;
  std::size_t n_;
  unsigned maxe_ = 1;
  std::vector<u32> pw_;
  std::vector<int> chi_;
  std::vector<std::vector<Packed>> eqs_;
  std::vector<Packed> cover_;
  std::vector<Packed> tmp_;
  std::vector<unsigned> free_after_;
  const std::vector<int>* modes_ = nullptr;
  bool has_cover_ = false;
};

void check_prime(u32 p) {
  if (p == 2) throw InvalidPrime("p = 2 is excluded from all counts");
  if (!is_prime(p)) throw InvalidPrime(std::to_string(p) + " is not prime");
  if (p >= (1u << 31)) throw InvalidPrime("prime too large for word-size residues");
}

// Normalized representative patterns: in each group the first nonzero
// coordinate is 1, earlier ones 0, later ones free.
std::vector<std::vector<int>> patterns(const std::vector<std::size_t>& groups, std::size_t n) {
  std::vector<std::vector<int>> out;
  if (groups.empty()) {
    out.emplace_back(n, -1);
    return out;
  }
  std::vector<int> cur(n, -1);
  auto rec = [&](auto&& self, std::size_t g, std::size_t start) -> void {
    if (g == groups.size()) {
      out.push_back(cur);
      return;
    }
    for (std::size_t piv = 0; piv < groups[g]; ++piv) {
      for (std::size_t k = 0; k < groups[g]; ++k) cur[start + k] = k < piv ? 0 : (k == piv ? 1 : -1);
      self(self, g + 1, start + groups[g]);
    }
  };
  rec(rec, 0, 0);
  return out;
}

Integer run_count(std::span<const MultiPoly> eqs, const MultiPoly* cover, const std::vector<std::size_t>& groups,
                  std::size_t n, u32 p, const CountOptions& opt) {
  check_prime(p);
  std::size_t total = 0;
  for (auto g : groups) total += g;
  if (!groups.empty() && total != n) throw ModelError("coordinate groups do not cover the arity");
  for (const auto& f : eqs)
    if (f.arity() != n) throw ArityMismatch("equation arity differs from the ambient");
  if (cover && cover->arity() != n) throw ArityMismatch("branch arity differs from the ambient");
  const long double size = enumeration_size(groups, n, p);
  if (size > (long double)opt.budget)
    throw BudgetExceeded("enumeration of " + std::to_string((double)size) + " points exceeds budget " +
                         std::to_string(opt.budget));

  std::vector<ResiduePoly> res;
  for (const auto& f : eqs) res.push_back(reduce_mod_p(f, p));
  std::optional<ResiduePoly> rcover;
  if (cover) rcover = reduce_mod_p(*cover, p);
  std::vector<const ResiduePoly*> all;
  for (const auto& r : res) all.push_back(&r);
  if (rcover) all.push_back(&*rcover);

  Problem pr;
  pr.p = p;
  pr.n = n;
  pr.layout = make_layout(all, n);
  for (const auto& r : res) pr.eqs.push_back(pack(r, pr.layout, n));
  if (rcover) pr.cover = pack(*rcover, pr.layout, n);

  if (n == 0) {
    for (const auto& e : pr.eqs)
      if (!e.is_zero()) return 0;
    return 1;
  }

  // split on the first free coordinate of every pattern
  std::vector<std::vector<int>> tasks;
  for (auto& pat : patterns(groups, n)) {
    auto it = std::find(pat.begin(), pat.end(), -1);
    if (it == pat.end()) {
      tasks.push_back(pat);
      continue;
    }
    for (u32 a = 0; a < p; ++a) {
      *it = int(a);
      tasks.push_back(pat);
    }
  }
  std::vector<u64> results(tasks.size(), 0);
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, tasks.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    Enumerator en(pr);
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) results[t] = en.run(tasks[t]);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  Integer sum = 0;
  for (u64 r : results) {
    Integer x;
    mpz_import(x.get_mpz_t(), 1, 1, sizeof(u64), 0, 0, &r);
    sum += x;
  }
  return sum;
}

std::size_t common_arity(std::span<const MultiPoly> eqs) {
  if (eqs.empty()) throw std::invalid_argument("arity needed for an empty system");
  return eqs.front().arity();
}

}  // namespace

long double enumeration_size(const std::vector<std::size_t>& groups, std::size_t arity, std::uint32_t p) {
  if (groups.empty()) return std::pow((long double)p, (long double)arity);
  long double s = 1;
  for (auto g : groups) s *= (std::pow((long double)p, (long double)g) - 1) / (p - 1);
  return s;
}

Integer count_affine(std::span<const MultiPoly> eqs, std::size_t arity, std::uint32_t p, const CountOptions& opt) {
  return run_count(eqs, nullptr, {}, arity, p, opt);
}

Integer count_affine(std::span<const MultiPoly> eqs, std::uint32_t p, const CountOptions& opt) {
  return count_affine(eqs, common_arity(eqs), p, opt);
}

Integer count_projective(std::span<const MultiPoly> eqs, std::size_t arity, std::uint32_t p,
                         const CountOptions& opt) {
  if (arity == 0) throw std::invalid_argument("projective space needs a coordinate");
  return run_count(eqs, nullptr, {arity}, arity, p, opt);
}

Integer count_projective(std::span<const MultiPoly> eqs, std::uint32_t p, const CountOptions& opt) {
  return count_projective(eqs, common_arity(eqs), p, opt);
}

Integer count_multiprojective(std::span<const MultiPoly> eqs, const std::vector<std::size_t>& groups,
                              std::uint32_t p, const CountOptions& opt) {
  std::size_t n = 0;
  for (auto g : groups) n += g;
  return run_count(eqs, nullptr, groups, n, p, opt);
}

Integer count_weighted_double_cover(const MultiPoly& F, std::uint32_t p, const CountOptions& opt) {
  if (!F.is_homogeneous() || F.total_degree() % 2) throw ModelError("branch must be homogeneous of even degree");
  return run_count({}, &F, {F.arity()}, F.arity(), p, opt);
}

Integer count_double_cover_affine(const MultiPoly& F, std::uint32_t p, const CountOptions& opt) {
  const std::size_t n = F.arity();
  std::vector<std::size_t> shift(n);
  for (std::size_t i = 0; i < n; ++i) shift[i] = i + 1;
  auto eq = MultiPoly::variable(n + 1, 0).pow(2) - rename_variables(F, shift, n + 1);
  MultiPoly one[] = {eq};
  Integer affine = count_affine(one, n + 1, p, opt);
  Integer r = (affine - 1);
  if (r % (p - 1) != 0) throw DivisibilityFailure("nonzero affine solutions not divisible by p-1");
  return r / (p - 1);
}

Integer count_model(const VarietyModel& m, std::uint32_t p, const CountOptions& opt) {
  m.validate();
  const MultiPoly* cover = m.branch ? &*m.branch : nullptr;
  const auto n = m.ambient.coordinate_count();
  return run_count(m.equations, cover, m.ambient.group_sizes(), n, p, opt);
}

C2Value c2_bruteforce(const Graph& g, std::uint32_t p, const CountOptions& opt) {
  if (g.vertex_count() < 3) throw GraphError("c2 needs at least 3 vertices");
  MultiPoly psi[] = {kirchhoff_polynomial(g)};
  C2Value v;
  v.graph = g.name;
  v.p = p;
  v.affine_count = count_affine(psi, g.edge_count(), p, opt);
  const Integer p2 = Integer(p) * p;
  if (v.affine_count % p2 != 0)
    throw DivisibilityFailure("affine count of " + g.name + " not divisible by p^2 at p=" + std::to_string(p));
  Integer q = v.affine_count / p2;
  Integer r = q % p;
  if (r < 0) r += p;
  v.value = u32(r.get_ui());
  return v;
}

}  // namespace phi4
