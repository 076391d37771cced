#include "phi4/pointcount.hpp"

namespace phi4 {

namespace {

using u64 = std::uint64_t;

u64 mulmod(u64 a, u64 b, u64 m) { return u64((unsigned __int128)a * b % m); }

u64 powmod(u64 b, u64 e, u64 m) {
  u64 r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = mulmod(r, b, m);
    b = mulmod(b, b, m);
    e >>= 1;
  }
  return r;
}

u64 residue(const Integer& a, std::uint32_t p) {
  Integer r = a % p;
  if (r < 0) r += p;
  return r.get_ui();
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (u64 d : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % d == 0) return n == d;
  }
  // deterministic Miller-Rabin for 64-bit inputs
  u64 d = n - 1;
  int s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  for (u64 a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::vector<std::uint32_t> primes_in(std::uint32_t lo, std::uint32_t hi) {
  std::vector<std::uint32_t> out;
  for (std::uint64_t n = lo; n <= hi; ++n)
    if (is_prime(n)) out.push_back(std::uint32_t(n));
  return out;
}

int legendre(const Integer& a, std::uint32_t p) {
  if (p == 2 || !is_prime(p)) throw InvalidPrime("legendre symbol needs an odd prime");
  u64 r = residue(a, p);
  if (r == 0) return 0;
  return powmod(r, (p - 1) / 2, p) == 1 ? 1 : -1;
}

std::optional<std::uint32_t> sqrt_mod(const Integer& a, std::uint32_t p) {
  if (p == 2 || !is_prime(p)) throw InvalidPrime("sqrt_mod needs an odd prime");
  const u64 n = residue(a, p);
  if (n == 0) return 0u;
  if (powmod(n, (p - 1) / 2, p) != 1) return std::nullopt;
  // Tonelli-Shanks
  u64 q = p - 1;
  int s = 0;
  while (q % 2 == 0) {
    q /= 2;
    ++s;
  }
  u64 z = 2;
  while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
  u64 m = s, c = powmod(z, q, p), t = powmod(n, q, p), r = powmod(n, (q + 1) / 2, p);
  while (t != 1) {
    u64 i = 0, tt = t;
    while (tt != 1) {
      tt = mulmod(tt, tt, p);
      ++i;
    }
    u64 b = c;
    for (u64 k = 0; k + i + 1 < m; ++k) b = mulmod(b, b, p);
    m = i;
    c = mulmod(b, b, p);
    t = mulmod(t, c, p);
    r = mulmod(r, b, p);
  }
  return std::uint32_t(std::min<u64>(r, p - r));
}

int alpha_8(std::uint32_t p) { return p % 8 == 1 ? 1 : 0; }

int alpha_390(std::uint32_t p) {
  if (p <= 3) throw InvalidPrime("alpha_390 needs p > 3");
  if (legendre(3, p) == -1 || legendre(-3, p) == -1) return 0;
  const Integer s = *sqrt_mod(3, p);
  const int plus = legendre(6 + 4 * s, p);
  const int minus = legendre(6 - 4 * s, p);
  if (plus != minus) throw std::logic_error("conjugate residue tests disagree at p=" + std::to_string(p));
  return 2 * plus;
}

std::string to_string(FrobeniusClass c) {
  switch (c) {
    case FrobeniusClass::split3: return "split3";
    case FrobeniusClass::partial: return "partial";
    case FrobeniusClass::inert3: return "inert3";
  }
  return "?";
}

Integer cubic_discriminant(const std::array<Integer, 4>& c) {
  const Integer &d = c[0], &cc = c[1], &b = c[2], &a = c[3];
  return b * b * cc * cc - 4 * a * cc * cc * cc - 4 * b * b * b * d - 27 * a * a * d * d + 18 * a * b * cc * d;
}

FrobeniusClass cubic_frobenius(const std::array<Integer, 4>& c, std::uint32_t p) {
  if (p == 2 || !is_prime(p)) throw InvalidPrime("cubic_frobenius needs an odd prime");
  if (residue(c[3], p) == 0) throw RamifiedPrime("leading coefficient vanishes mod p");
  if (residue(cubic_discriminant(c), p) == 0)
    throw RamifiedPrime("p=" + std::to_string(p) + " divides the discriminant");
  u64 k[4];
  for (int i = 0; i < 4; ++i) k[i] = residue(c[i], p);
  int roots = 0;
  for (u64 x = 0; x < p; ++x) {
    u64 v = ((k[3] * x % p + k[2]) % p * x % p + k[1]) % p * x % p + k[0];
    if (v % p == 0) ++roots;
  }
  if (roots == 3) return FrobeniusClass::split3;
  if (roots == 1) return FrobeniusClass::partial;
  return FrobeniusClass::inert3;
}

}  // namespace phi4
