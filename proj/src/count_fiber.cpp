#include "phi4/pointcount.hpp"

namespace phi4 {

namespace {

using u32 = std::uint32_t;

struct LinearInFactor {
  std::size_t factor;  // index of the P^1 factor (1-based in the ambient)
  ResiduePoly a, b;    // equation = a(x) u0 + b(x) u1
};

}  // namespace

bool has_fiber_shape(const VarietyModel& m) {
  if (m.ambient.kind != Ambient::Kind::MultiProj || m.ambient.dims.size() < 2) return false;
  for (std::size_t k = 1; k < m.ambient.dims.size(); ++k)
    if (m.ambient.dims[k] != 1) return false;
  for (const auto& d : m.degrees) {
    int ones = 0;
    for (std::size_t k = 1; k < d.size(); ++k) {
      if (d[k] > 1) return false;
      ones += d[k];
    }
    if (ones != 1) return false;
  }
  return true;
}

Integer count_multiprojective_fibered(const VarietyModel& m, std::uint32_t p) {
  if (!has_fiber_shape(m)) throw ModelError("model is not of the P^n x (P^1)^r fiber shape");
  if (p == 2 || !is_prime(p)) throw InvalidPrime("fiber count needs an odd prime");
  const std::size_t n = m.ambient.dims[0] + 1;
  const std::size_t r = m.ambient.dims.size() - 1;
  const std::size_t total = m.ambient.coordinate_count();

  std::vector<LinearInFactor> lin;
  for (std::size_t k = 0; k < m.equations.size(); ++k) {
    std::size_t f = 1;
    while (m.degrees[k][f] == 0) ++f;
    const std::size_t u0 = n + 2 * (f - 1);
    auto c0 = coeffs_in_var(m.equations[k], u0);
    auto c1 = coeffs_in_var(m.equations[k], u0 + 1);
    // a = coefficient of u0, b = coefficient of u1; both only involve x
    MultiPoly a = c0.size() > 1 ? c0[1] : MultiPoly(total);
    MultiPoly b = c1.size() > 1 ? c1[1] : MultiPoly(total);
    lin.push_back({f, reduce_mod_p(a, p), reduce_mod_p(b, p)});
  }
  std::optional<ResiduePoly> branch;
  std::vector<int> chi;
  if (m.branch) {
    branch = reduce_mod_p(*m.branch, p);
    chi.assign(p, -1);
    chi[0] = 0;
    for (std::uint64_t x = 1; x < p; ++x) chi[x * x % p] = 1;
  }

  std::vector<u32> pt(total, 0);
  std::vector<std::vector<std::array<u32, 2>>> fiber(r + 1);
  const std::uint64_t full = std::uint64_t(p) + 1;
  Integer sum = 0;
  std::uint64_t acc = 0;

  auto visit = [&] {
    std::uint64_t product = 1;
    for (std::size_t f = 1; f <= r; ++f) {
      fiber[f].clear();
      bool constrained = false, empty = false;
      std::array<u32, 2> u{};
      for (const auto& e : lin) {
        if (e.factor != f) continue;
        const u32 a = e.a.evaluate(pt), b = e.b.evaluate(pt);
        if (a == 0 && b == 0) continue;
        // a u0 + b u1 = 0 normalized: (1 : -a/b) if b != 0, else (0 : 1)
        std::array<u32, 2> v{};
        if (b != 0) {
          std::uint64_t inv = 1, base = b, ex = p - 2;
          while (ex) {
            if (ex & 1) inv = inv * base % p;
            base = base * base % p;
            ex >>= 1;
          }
          v = {1, u32((p - a) % p * inv % p)};
        } else {
          v = {0, 1};
        }
        if (!constrained) {
          u = v;
          constrained = true;
        } else if (u != v) {
          empty = true;
        }
      }
      if (empty) return;
      if (constrained) {
        fiber[f].push_back(u);
      } else if (!branch) {
        product *= full;
        continue;
      } else {
        fiber[f].push_back({0, 1});
        for (u32 t = 0; t < p; ++t) fiber[f].push_back({1, t});
      }
    }
    if (!branch) {
      acc += product;
      return;
    }
    // enumerate the product of fibers and sum the branch character
    std::vector<std::size_t> idx(r + 1, 0);
    for (;;) {
      for (std::size_t f = 1; f <= r; ++f) {
        pt[n + 2 * (f - 1)] = fiber[f][idx[f]][0];
        pt[n + 2 * (f - 1) + 1] = fiber[f][idx[f]][1];
      }
      acc += std::uint64_t(1 + chi[branch->evaluate(pt)]);
      std::size_t f = r;
      while (f >= 1 && ++idx[f] == fiber[f].size()) idx[f--] = 0;
      if (f == 0) break;
    }
  };

  for (std::size_t piv = 0; piv < n; ++piv) {
    for (std::size_t k = 0; k < n; ++k) pt[k] = k == piv ? 1 : 0;
    for (;;) {
      visit();
      if (acc > (1ULL << 62)) {
        sum += Integer(std::to_string(acc));
        acc = 0;
      }
      bool done = true;
      for (std::size_t k = n; k > piv + 1;) {
        --k;
        if (++pt[k] < p) {
          done = false;
          break;
        }
        pt[k] = 0;
      }
      if (done) break;
    }
  }
  sum += Integer(std::to_string(acc));
  return sum;
}

}  // namespace phi4
