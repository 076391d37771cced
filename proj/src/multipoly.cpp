#include "phi4/multipoly.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace phi4 {

// ---------------------------------------------------------------- monomials

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    unsigned s = unsigned(e[i]) + o.e[i];
    if (s > kMaxExponent) throw std::overflow_error("monomial exponent exceeds 255");
    r.e[i] = std::uint8_t(s);
  }
  return r;
}

bool Monomial::divisible_by(const Monomial& o) const {
  for (std::size_t i = 0; i < kMaxVars; ++i)
    if (e[i] < o.e[i]) return false;
  return true;
}

Monomial Monomial::operator/(const Monomial& o) const {
  Monomial r;
  for (std::size_t i = 0; i < kMaxVars; ++i) r.e[i] = std::uint8_t(e[i] - o.e[i]);
  return r;
}

std::size_t MonomialHash::operator()(const Monomial& m) const noexcept {
  std::uint64_t w[4];
  std::memcpy(w, m.e.data(), sizeof w);
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto x : w) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
  }
  return std::size_t(h ^ (h >> 33));
}

namespace {

bool desc(const Term& a, const Term& b) { return a.mono > b.mono; }

void check_arity(const MultiPoly& a, const MultiPoly& b) {
  if (a.arity() != b.arity())
    throw ArityMismatch("arity mismatch: " + std::to_string(a.arity()) + " vs " +
                        std::to_string(b.arity()));
}

void check_var(const MultiPoly& f, std::size_t v) {
  if (v >= f.arity()) throw std::out_of_range("variable index out of range");
}

}  // namespace

// --------------------------------------------------------------- MultiPoly

MultiPoly::MultiPoly(std::size_t arity) : arity_(arity) {
  if (arity > kMaxVars) throw std::invalid_argument("arity exceeds 32");
}

MultiPoly MultiPoly::constant(std::size_t arity, const Rational& c) {
  return monomial(arity, Monomial{}, c);
}

MultiPoly MultiPoly::variable(std::size_t arity, std::size_t v) {
  if (v >= arity) throw std::out_of_range("variable index out of range");
  Monomial m;
  m.e[v] = 1;
  return monomial(arity, m);
}

MultiPoly MultiPoly::monomial(std::size_t arity, const Monomial& m, const Rational& c) {
  MultiPoly r(arity);
  Rational q = c;
  q.canonicalize();
  if (q != 0) {
    r.terms_.push_back({m, q.get_num()});
    r.den_ = q.get_den();
  }
  return r;
}

MultiPoly MultiPoly::from_terms(std::size_t arity, std::vector<Term> terms,
                                const Integer& denominator) {
  if (denominator == 0) throw std::invalid_argument("zero denominator");
  MultiPoly r(arity);
  for (auto& t : terms)
    for (std::size_t i = arity; i < kMaxVars; ++i)
      if (t.mono.e[i] != 0) throw std::invalid_argument("exponent beyond arity");
  r.terms_ = std::move(terms);
  r.den_ = denominator;
  if (r.den_ < 0) {
    r.den_ = -r.den_;
    for (auto& t : r.terms_) t.coeff = -t.coeff;
  }
  r.normalize();
  return r;
}

void MultiPoly::normalize() {
  std::sort(terms_.begin(), terms_.end(), desc);
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms_.size();) {
    std::size_t j = i + 1;
    Integer c = terms_[i].coeff;
    while (j < terms_.size() && terms_[j].mono == terms_[i].mono) c += terms_[j++].coeff;
    if (c != 0) {
      terms_[out].mono = terms_[i].mono;
      terms_[out].coeff = std::move(c);
      ++out;
    }
    i = j;
  }
  terms_.resize(out);
  if (terms_.empty()) {
    den_ = 1;
    return;
  }
  if (den_ == 1) return;
  Integer g = den_;
  for (const auto& t : terms_) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.coeff.get_mpz_t());
    if (g == 1) return;
  }
  for (auto& t : terms_) mpz_divexact(t.coeff.get_mpz_t(), t.coeff.get_mpz_t(), g.get_mpz_t());
  mpz_divexact(den_.get_mpz_t(), den_.get_mpz_t(), g.get_mpz_t());
}

bool MultiPoly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.degree() == 0);
}

Rational MultiPoly::coeff(const Monomial& m) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                             [](const Term& t, const Monomial& k) { return t.mono > k; });
  if (it == terms_.end() || !(it->mono == m)) return 0;
  Rational r(it->coeff, den_);
  r.canonicalize();
  return r;
}

Rational MultiPoly::leading_coeff() const {
  if (terms_.empty()) return 0;
  Rational r(terms_[0].coeff, den_);
  r.canonicalize();
  return r;
}

int MultiPoly::degree_in(std::size_t v) const {
  check_var(*this, v);
  int d = -1;
  for (const auto& t : terms_) d = std::max<int>(d, t.mono.e[v]);
  return d;
}

int MultiPoly::total_degree() const {
  int d = -1;
  for (const auto& t : terms_) d = std::max<int>(d, int(t.mono.degree()));
  return d;
}

int MultiPoly::min_total_degree() const {
  if (terms_.empty()) return -1;
  int d = 1 << 30;
  for (const auto& t : terms_) d = std::min<int>(d, int(t.mono.degree()));
  return d;
}

bool MultiPoly::is_homogeneous() const {
  return terms_.empty() || total_degree() == min_total_degree();
}

bool MultiPoly::is_multihomogeneous(std::span<const std::size_t> group_sizes,
                                    std::span<const int> degrees) const {
  if (group_sizes.size() != degrees.size()) return false;
  std::size_t total = 0;
  for (auto s : group_sizes) total += s;
  if (total > arity_) return false;
  for (const auto& t : terms_) {
    std::size_t at = 0;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
      int d = 0;
      for (std::size_t k = 0; k < group_sizes[g]; ++k) d += t.mono.e[at + k];
      if (d != degrees[g]) return false;
      at += group_sizes[g];
    }
    for (std::size_t k = at; k < arity_; ++k)
      if (t.mono.e[k] != 0) return false;
  }
  return true;
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

MultiPoly MultiPoly::add_scaled(const MultiPoly& a, const MultiPoly& b, int sign) {
  check_arity(a, b);
  MultiPoly r(a.arity_);
  Integer ma = 1, mb = 1;
  if (a.den_ != b.den_) {
    Integer g;
    mpz_gcd(g.get_mpz_t(), a.den_.get_mpz_t(), b.den_.get_mpz_t());
    ma = b.den_ / g;
    mb = a.den_ / g;
    r.den_ = a.den_ * ma;
  } else {
    r.den_ = a.den_;
  }
  r.terms_.reserve(a.terms_.size() + b.terms_.size());
  std::size_t i = 0, j = 0;
  auto push_b = [&](const Term& t) {
    Integer c = t.coeff * mb;
    if (sign < 0) c = -c;
    r.terms_.push_back({t.mono, std::move(c)});
  };
  while (i < a.terms_.size() || j < b.terms_.size()) {
    if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].mono > b.terms_[j].mono)) {
      r.terms_.push_back({a.terms_[i].mono, a.terms_[i].coeff * ma});
      ++i;
    } else if (i == a.terms_.size() || b.terms_[j].mono > a.terms_[i].mono) {
      push_b(b.terms_[j]);
      ++j;
    } else {
      Integer c = a.terms_[i].coeff * ma;
      if (sign < 0)
        mpz_submul(c.get_mpz_t(), b.terms_[j].coeff.get_mpz_t(), mb.get_mpz_t());
      else
        mpz_addmul(c.get_mpz_t(), b.terms_[j].coeff.get_mpz_t(), mb.get_mpz_t());
      if (c != 0) r.terms_.push_back({a.terms_[i].mono, std::move(c)});
      ++i;
      ++j;
    }
  }
  // already sorted and merged; only the content/denominator gcd may be off
  r.normalize();
  return r;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) { return *this = add_scaled(*this, o, +1); }
MultiPoly& MultiPoly::operator-=(const MultiPoly& o) { return *this = add_scaled(*this, o, -1); }

namespace {

// Exponent vectors packed into one 64-bit key, x0 in the top bits, so that
// key order is lex order and monomial product is key addition.
struct Packing {
  std::array<unsigned, kMaxVars> shift{};
  std::array<unsigned, kMaxVars> bits{};
  std::size_t arity = 0;

  bool init(const std::array<unsigned, kMaxVars>& maxdeg, std::size_t n) {
    arity = n;
    unsigned total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      unsigned b = 0;
      while ((1u << b) <= maxdeg[i]) ++b;
      bits[i] = b;
      total += b;
    }
    if (total > 64) return false;
    unsigned at = total;
    for (std::size_t i = 0; i < n; ++i) {
      at -= bits[i];
      shift[i] = at;
    }
    return true;
  }
  std::uint64_t pack(const Monomial& m) const {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < arity; ++i) k |= std::uint64_t(m.e[i]) << shift[i];
    return k;
  }
  Monomial unpack(std::uint64_t k) const {
    Monomial m;
    for (std::size_t i = 0; i < arity; ++i)
      m.e[i] = bits[i] ? std::uint8_t((k >> shift[i]) & ((std::uint64_t(1) << bits[i]) - 1)) : 0;
    return m;
  }
};

// Open-addressing accumulator keyed by packed monomials.
class KeyTable {
 public:
  explicit KeyTable(std::size_t hint) {
    std::size_t cap = 1024;
    while (cap < 2 * hint) cap <<= 1;
    resize(cap);
  }
  __int128& at(std::uint64_t key) {
    if (2 * (count_ + 1) > keys_.size()) grow();
    std::size_t mask = keys_.size() - 1, i = mix(key) & mask;
    while (used_[i] && keys_[i] != key) i = (i + 1) & mask;
    if (!used_[i]) {
      used_[i] = 1;
      keys_[i] = key;
      vals_[i] = 0;
      ++count_;
    }
    return vals_[i];
  }
  template <class F>
  void each(F&& f) const {
    for (std::size_t i = 0; i < keys_.size(); ++i)
      if (used_[i]) f(keys_[i], vals_[i]);
  }
  std::size_t size() const { return count_; }

 private:
  static std::size_t mix(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    return std::size_t(k);
  }
  void resize(std::size_t cap) {
    keys_.assign(cap, 0);
    vals_.assign(cap, 0);
    used_.assign(cap, 0);
    count_ = 0;
  }
  void grow() {
    auto keys = std::move(keys_);
    auto vals = std::move(vals_);
    auto used = std::move(used_);
    resize(keys.size() * 2);
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (used[i]) at(keys[i]) = vals[i];
  }
  std::vector<std::uint64_t> keys_;
  std::vector<__int128> vals_;
  std::vector<std::uint8_t> used_;
  std::size_t count_ = 0;
};

Integer from_i128(__int128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
  Integer r = Integer(static_cast<unsigned long>(std::uint64_t(u >> 64)));
  r <<= 64;
  r += Integer(static_cast<unsigned long>(std::uint64_t(u)));
  return neg ? Integer(-r) : r;
}

// Fast product when monomials pack into 64 bits and every partial sum fits
// in 127 bits. Returns false if not applicable.
bool packed_product(const std::vector<Term>& a, const std::vector<Term>& b, std::size_t arity,
                    std::vector<Term>& out) {
  std::array<unsigned, kMaxVars> da{}, db{}, dsum{};
  std::size_t abits = 0, bbits = 0;
  for (const auto& t : a) {
    for (std::size_t i = 0; i < arity; ++i) da[i] = std::max<unsigned>(da[i], t.mono.e[i]);
    if (!t.coeff.fits_slong_p()) return false;
    abits = std::max(abits, mpz_sizeinbase(t.coeff.get_mpz_t(), 2));
  }
  for (const auto& t : b) {
    for (std::size_t i = 0; i < arity; ++i) db[i] = std::max<unsigned>(db[i], t.mono.e[i]);
    if (!t.coeff.fits_slong_p()) return false;
    bbits = std::max(bbits, mpz_sizeinbase(t.coeff.get_mpz_t(), 2));
  }
  std::size_t nbits = 0;
  while ((std::size_t(1) << nbits) <= std::min(a.size(), b.size())) ++nbits;
  if (abits + bbits + nbits > 125) return false;
  for (std::size_t i = 0; i < arity; ++i) {
    dsum[i] = da[i] + db[i];
    if (dsum[i] > kMaxExponent) throw std::overflow_error("monomial exponent exceeds 255");
  }
  Packing pk;
  if (!pk.init(dsum, arity)) return false;

  std::vector<std::uint64_t> kb(b.size());
  std::vector<std::int64_t> cb(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    kb[j] = pk.pack(b[j].mono);
    cb[j] = b[j].coeff.get_si();
  }
  KeyTable acc(std::max(a.size(), b.size()) * 4);
  for (const auto& s : a) {
    std::uint64_t ka = pk.pack(s.mono);
    __int128 ca = s.coeff.get_si();
    for (std::size_t j = 0; j < b.size(); ++j) acc.at(ka + kb[j]) += ca * cb[j];
  }
  std::vector<std::pair<std::uint64_t, __int128>> flat;
  flat.reserve(acc.size());
  acc.each([&](std::uint64_t k, __int128 v) {
    if (v != 0) flat.emplace_back(k, v);
  });
  std::sort(flat.begin(), flat.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  out.clear();
  out.reserve(flat.size());
  for (const auto& [k, v] : flat) out.push_back({pk.unpack(k), from_i128(v)});
  return true;
}

}  // namespace

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  check_arity(a, b);
  MultiPoly r(a.arity_);
  if (a.terms_.empty() || b.terms_.empty()) return r;
  if (a.terms_.size() == 1 || b.terms_.size() == 1) {
    const auto& one = a.terms_.size() == 1 ? a.terms_[0] : b.terms_[0];
    const auto& many = a.terms_.size() == 1 ? b : a;
    r.terms_.reserve(many.terms_.size());
    for (const auto& t : many.terms_) r.terms_.push_back({t.mono * one.mono, t.coeff * one.coeff});
  } else if (!packed_product(a.terms_, b.terms_, a.arity_, r.terms_)) {
    std::unordered_map<Monomial, Integer, MonomialHash> acc;
    acc.reserve(std::min<std::size_t>(a.terms_.size() * b.terms_.size(), 1u << 22));
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_)
        mpz_addmul(acc[s.mono * t.mono].get_mpz_t(), s.coeff.get_mpz_t(), t.coeff.get_mpz_t());
    r.terms_.reserve(acc.size());
    for (auto& [m, c] : acc)
      if (c != 0) r.terms_.push_back({m, std::move(c)});
  }
  r.den_ = a.den_ * b.den_;
  r.normalize();
  return r;
}

MultiPoly& MultiPoly::operator*=(const MultiPoly& o) { return *this = *this * o; }

MultiPoly& MultiPoly::operator*=(const Rational& c) {
  Rational q = c;
  q.canonicalize();
  if (q == 0) {
    terms_.clear();
    den_ = 1;
    return *this;
  }
  for (auto& t : terms_) t.coeff *= q.get_num();
  den_ *= q.get_den();
  if (den_ < 0) {
    den_ = -den_;
    for (auto& t : terms_) t.coeff = -t.coeff;
  }
  normalize();
  return *this;
}

bool operator==(const MultiPoly& a, const MultiPoly& b) {
  if (a.arity_ != b.arity_ || a.den_ != b.den_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i)
    if (!(a.terms_[i].mono == b.terms_[i].mono) || a.terms_[i].coeff != b.terms_[i].coeff)
      return false;
  return true;
}

MultiPoly MultiPoly::pow(unsigned k) const {
  MultiPoly r = constant(arity_, 1), base = *this;
  while (k) {
    if (k & 1) r *= base;
    k >>= 1;
    if (k) base *= base;
  }
  return r;
}

MultiPoly MultiPoly::primitive() const {
  MultiPoly r(arity_);
  if (terms_.empty()) return r;
  Integer g = 0;
  for (const auto& t : terms_) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.coeff.get_mpz_t());
  if (terms_[0].coeff < 0) g = -g;
  r.terms_ = terms_;
  for (auto& t : r.terms_) mpz_divexact(t.coeff.get_mpz_t(), t.coeff.get_mpz_t(), g.get_mpz_t());
  return r;
}

Rational MultiPoly::evaluate(std::span<const Rational> point) const {
  if (point.size() != arity_) throw ArityMismatch("evaluation point has wrong length");
  Rational sum = 0;
  for (const auto& t : terms_) {
    Rational v = t.coeff;
    for (std::size_t i = 0; i < arity_; ++i)
      for (unsigned k = 0; k < t.mono.e[i]; ++k) v *= point[i];
    sum += v;
  }
  sum /= den_;
  return sum;
}

// --------------------------------------------------------- division, roots

namespace {

using DescMap = std::map<Monomial, Rational, std::greater<Monomial>>;

}  // namespace

MultiPoly exact_div(const MultiPoly& f, const MultiPoly& g) {
  check_arity(f, g);
  if (g.is_zero()) throw std::domain_error("division by zero polynomial");
  if (f.is_zero()) return MultiPoly(f.arity());
  if (g.size() == 1) {
    const auto& lt = g.terms()[0];
    std::vector<Term> out;
    out.reserve(f.size());
    for (const auto& t : f.terms()) {
      if (!t.mono.divisible_by(lt.mono)) throw NotDivisible("not divisible");
      out.push_back({t.mono / lt.mono, t.coeff * g.denominator()});
    }
    return MultiPoly::from_terms(f.arity(), std::move(out), f.denominator() * lt.coeff);
  }
  // Lex long division on integer numerators, quotient over Q.
  DescMap rem;
  for (const auto& t : f.terms()) rem.emplace(t.mono, Rational(t.coeff));
  const auto& gl = g.terms()[0];
  DescMap quot;
  while (!rem.empty()) {
    auto it = rem.begin();
    if (!it->first.divisible_by(gl.mono)) throw NotDivisible("not divisible");
    Monomial m = it->first / gl.mono;
    Rational c = it->second / Rational(gl.coeff);
    quot.emplace(m, c);
    for (const auto& t : g.terms()) {
      Monomial mm = t.mono * m;
      auto [pos, inserted] = rem.try_emplace(mm, 0);
      pos->second -= c * t.coeff;
      if (pos->second == 0) rem.erase(pos);
    }
  }
  // quotient of numerators; restore denominators: (F/df)/(G/dg) = (F/G)*dg/df
  Integer den = 1;
  for (auto& [m, c] : quot) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den_mpz_t());
  std::vector<Term> out;
  out.reserve(quot.size());
  for (auto& [m, c] : quot) out.push_back({m, c.get_num() * (den / c.get_den()) * g.denominator()});
  return MultiPoly::from_terms(f.arity(), std::move(out), den * f.denominator());
}

bool divides(const MultiPoly& g, const MultiPoly& f) {
  try {
    exact_div(f, g);
    return true;
  } catch (const NotDivisible&) {
    return false;
  }
}

std::optional<MultiPoly> poly_sqrt(const MultiPoly& f) {
  const std::size_t n = f.arity();
  if (f.is_zero()) return MultiPoly(n);
  // sqrt(F/d) = sqrt(F*d)/d and a rational square root of an integer
  // polynomial has integer coefficients.
  const Integer& d = f.denominator();
  std::array<int, kMaxVars> bound{};
  for (const auto& t : f.terms())
    for (std::size_t i = 0; i < n; ++i) bound[i] = std::max<int>(bound[i], t.mono.e[i]);
  for (std::size_t i = 0; i < n; ++i) bound[i] /= 2;

  using IMap = std::map<Monomial, Integer, std::greater<Monomial>>;
  IMap rem;
  for (const auto& t : f.terms()) rem.emplace(t.mono, t.coeff * d);

  const auto& lead = rem.begin();
  Monomial m0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lead->first.e[i] % 2) return std::nullopt;
    m0.e[i] = lead->first.e[i] / 2;
  }
  if (lead->second < 0 || !mpz_perfect_square_p(lead->second.get_mpz_t())) return std::nullopt;
  Integer c0 = sqrt(lead->second);
  Integer two_c0 = 2 * c0;

  std::vector<Term> s;
  auto subtract = [&](const Monomial& m, const Integer& c) {
    auto [pos, inserted] = rem.try_emplace(m, 0);
    pos->second -= c;
    if (pos->second == 0) rem.erase(pos);
  };
  // remove s0^2
  subtract(m0 * m0, c0 * c0);
  s.push_back({m0, c0});
  while (!rem.empty()) {
    auto it = rem.begin();
    if (!it->first.divisible_by(m0)) return std::nullopt;
    Monomial m = it->first / m0;
    for (std::size_t i = 0; i < n; ++i)
      if (m.e[i] > bound[i]) return std::nullopt;
    if (!(m < m0)) return std::nullopt;
    if (!mpz_divisible_p(it->second.get_mpz_t(), two_c0.get_mpz_t())) return std::nullopt;
    Integer c = it->second / two_c0;
    // rem -= 2*s*t + t^2
    Integer two_c = 2 * c;
    for (const auto& st : s) subtract(st.mono * m, st.coeff * two_c);
    subtract(m * m, c * c);
    s.push_back({m, std::move(c)});
  }
  return MultiPoly::from_terms(n, std::move(s), d);
}

std::vector<MultiPoly> coeffs_in_var(const MultiPoly& f, std::size_t v) {
  check_var(f, v);
  int deg = std::max(0, f.degree_in(v));
  std::vector<std::vector<Term>> parts(deg + 1);
  for (const auto& t : f.terms()) {
    Monomial m = t.mono;
    unsigned k = m.e[v];
    m.e[v] = 0;
    parts[k].push_back({m, t.coeff});
  }
  std::vector<MultiPoly> out;
  out.reserve(parts.size());
  for (auto& p : parts) out.push_back(MultiPoly::from_terms(f.arity(), std::move(p), f.denominator()));
  return out;
}

MultiPoly disc_wrt(const MultiPoly& f, std::size_t v) {
  if (f.degree_in(v) > 2) throw std::domain_error("degree in variable exceeds 2");
  auto c = coeffs_in_var(f, v);
  c.resize(3, MultiPoly(f.arity()));
  return c[1] * c[1] - c[2] * c[0] * Rational(4);
}

MultiPoly substitute_zero(const MultiPoly& f, std::span<const std::size_t> vars) {
  std::vector<Term> out;
  for (const auto& t : f.terms()) {
    bool keep = true;
    for (auto v : vars)
      if (t.mono.e[v]) keep = false;
    if (keep) out.push_back(t);
  }
  return MultiPoly::from_terms(f.arity(), std::move(out), f.denominator());
}

MultiPoly remove_variable(const MultiPoly& f, std::size_t v) {
  check_var(f, v);
  if (f.involves(v)) throw std::invalid_argument("cannot remove a variable that occurs");
  std::vector<std::size_t> map(f.arity());
  for (std::size_t i = 0; i < f.arity(); ++i) map[i] = i < v ? i : (i == v ? 0 : i - 1);
  return rename_variables(f, map, f.arity() - 1);
}

MultiPoly rename_variables(const MultiPoly& f, std::span<const std::size_t> map,
                           std::size_t new_arity) {
  if (map.size() != f.arity()) throw ArityMismatch("variable map has wrong length");
  std::vector<Term> out;
  out.reserve(f.size());
  for (const auto& t : f.terms()) {
    Monomial m;
    for (std::size_t i = 0; i < f.arity(); ++i) {
      if (!t.mono.e[i]) continue;
      if (map[i] >= new_arity) throw std::out_of_range("variable map target out of range");
      unsigned s = unsigned(m.e[map[i]]) + t.mono.e[i];
      if (s > kMaxExponent) throw std::overflow_error("monomial exponent exceeds 255");
      m.e[map[i]] = std::uint8_t(s);
    }
    out.push_back({m, t.coeff});
  }
  return MultiPoly::from_terms(new_arity, std::move(out), f.denominator());
}

MultiPoly compose(const MultiPoly& f, std::span<const MultiPoly> images) {
  if (images.size() != f.arity()) throw ArityMismatch("wrong number of substitution images");
  std::size_t n = images.empty() ? 0 : images[0].arity();
  for (const auto& g : images) check_arity(images[0], g);
  // cache powers per variable
  std::vector<std::vector<MultiPoly>> powers(f.arity());
  for (std::size_t i = 0; i < f.arity(); ++i) {
    int d = std::max(0, f.degree_in(i));
    powers[i].push_back(MultiPoly::constant(n, 1));
    for (int k = 1; k <= d; ++k) powers[i].push_back(powers[i].back() * images[i]);
  }
  MultiPoly sum(n);
  for (const auto& t : f.terms()) {
    MultiPoly term = MultiPoly::constant(n, Rational(t.coeff));
    for (std::size_t i = 0; i < f.arity(); ++i)
      if (t.mono.e[i]) term *= powers[i][t.mono.e[i]];
    sum += term;
  }
  return sum * Rational(1, f.denominator());
}

// ----------------------------------------------------------------- mod p

std::uint32_t ResiduePoly::evaluate(std::span<const std::uint32_t> point) const {
  std::uint64_t acc = 0;
  for (std::size_t k = 0; k < monos.size(); ++k) {
    std::uint64_t v = coeffs[k];
    for (std::size_t i = 0; i < arity && v; ++i)
      for (unsigned e = 0; e < monos[k].e[i]; ++e) v = v * point[i] % p;
    acc = (acc + v) % p;
  }
  return std::uint32_t(acc);
}

int ResiduePoly::degree_in(std::size_t v) const {
  int d = -1;
  for (const auto& m : monos) d = std::max<int>(d, m.e[v]);
  return d;
}

int ResiduePoly::total_degree() const {
  int d = -1;
  for (const auto& m : monos) d = std::max<int>(d, int(m.degree()));
  return d;
}

ResiduePoly reduce_mod_p(const MultiPoly& f, std::uint32_t p) {
  if (p < 2) throw std::invalid_argument("modulus must be a prime");
  Integer P = p;
  Integer inv;
  if (!mpz_invert(inv.get_mpz_t(), f.denominator().get_mpz_t(), P.get_mpz_t()))
    throw DenominatorNotInvertible(p, "denominator " + f.denominator().get_str() +
                                          " not invertible mod " + std::to_string(p));
  ResiduePoly r;
  r.p = p;
  r.arity = f.arity();
  for (const auto& t : f.terms()) {
    Integer c = t.coeff * inv;
    mpz_fdiv_r(c.get_mpz_t(), c.get_mpz_t(), P.get_mpz_t());
    if (c == 0) continue;
    r.monos.push_back(t.mono);
    r.coeffs.push_back(std::uint32_t(c.get_ui()));
  }
  return r;
}

// ------------------------------------------------------------ text format

std::vector<std::string> default_var_names(std::size_t arity, const std::string& stem) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < arity; ++i) v.push_back(stem + std::to_string(i));
  return v;
}

std::string to_string(const MultiPoly& f, std::span<const std::string> names) {
  if (names.size() < f.arity()) throw ArityMismatch("too few variable names");
  if (f.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& t : f.terms()) {
    Rational c(t.coeff, f.denominator());
    c.canonicalize();
    bool neg = c < 0;
    if (neg) c = -c;
    os << (first ? (neg ? "-" : "") : (neg ? " - " : " + "));
    first = false;
    bool unit = c.get_num() == 1;
    bool constant = t.mono.degree() == 0;
    if (!unit || constant) {
      os << c.get_num().get_str();
      if (c.get_den() != 1 && constant) os << "/" << c.get_den().get_str();
    }
    bool wrote = !unit || constant;
    for (std::size_t i = 0; i < f.arity(); ++i) {
      if (!t.mono.e[i]) continue;
      if (wrote) os << "*";
      os << names[i];
      if (t.mono.e[i] > 1) os << "^" << unsigned(t.mono.e[i]);
      wrote = true;
    }
    if (c.get_den() != 1 && !constant) os << "/" << c.get_den().get_str();
  }
  return os.str();
}

std::string to_string(const MultiPoly& f) {
  auto names = default_var_names(f.arity());
  return to_string(f, names);
}

namespace {

std::string canonical_name(const std::string& s) {
  std::string r;
  for (char c : s)
    if (c != '_' && c != '{' && c != '}') r += c;
  return r;
}

class Parser {
 public:
  Parser(const std::string& text, std::span<const std::string> names)
      : s_(text), arity_(names.size()) {
    for (std::size_t i = 0; i < names.size(); ++i) index_[canonical_name(names[i])] = i;
  }

  MultiPoly parse() {
    MultiPoly r = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("polynomial parse error at offset " + std::to_string(pos_) +
                                ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_.compare(pos_, 5, "\\cdot") == 0) {
        // treated as blank: juxtaposition already multiplies
        pos_ += 5;
      } else if (s_.compare(pos_, 6, "\\left(") == 0 || s_.compare(pos_, 7, "\\right)") == 0) {
        // strip the \left / \right prefix, keep the bracket
        pos_ += s_[pos_ + 1] == 'l' ? 5 : 6;
        return;
      } else {
        return;
      }
    }
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  bool starts_primary(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || std::isalpha(static_cast<unsigned char>(c)) ||
           c == '(' || c == '{';
  }

  MultiPoly expr() {
    MultiPoly r(arity_);
    bool first = true;
    for (;;) {
      char c = peek();
      int sign = 1;
      if (c == '+' || c == '-') {
        sign = c == '-' ? -1 : 1;
        ++pos_;
      } else if (!first) {
        break;
      }
      MultiPoly t = term();
      if (sign < 0) r -= t;
      else r += t;
      first = false;
    }
    return r;
  }

  MultiPoly term() {
    MultiPoly r = factor();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        r *= factor();
      } else if (c == '/') {
        ++pos_;
        Integer d = integer();
        if (d == 0) fail("division by zero");
        r *= Rational(1, d);
      } else if (starts_primary(c)) {
        r *= factor();
      } else {
        break;
      }
    }
    return r;
  }

  MultiPoly factor() {
    MultiPoly b = primary();
    if (peek() == '^') {
      ++pos_;
      bool brace = peek() == '{';
      if (brace) ++pos_;
      Integer e = integer();
      if (brace) {
        if (peek() != '}') fail("expected }");
        ++pos_;
      }
      if (e < 0 || e > 255) fail("bad exponent");
      b = b.pow(unsigned(e.get_ui()));
    }
    return b;
  }

  Integer integer() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    return Integer(s_.substr(start, pos_ - start));
  }

  MultiPoly primary() {
    char c = peek();
    if (c == '(' || c == '{') {
      char close = c == '(' ? ')' : '}';
      ++pos_;
      MultiPoly r = expr();
      if (peek() != close) fail(std::string("expected ") + close);
      ++pos_;
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return MultiPoly::constant(arity_, Rational(integer()));
    if (std::isalpha(static_cast<unsigned char>(c))) {
      // a name is one letter, optionally "_", then a digit run or {digits}
      std::string name(1, c);
      ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '_') ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '{') {
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '}') name += s_[pos_++];
        if (pos_ == s_.size()) fail("unterminated subscript");
        ++pos_;
      } else {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) name += s_[pos_++];
      }
      auto it = index_.find(name);
      if (it == index_.end()) fail("unknown variable '" + name + "'");
      return MultiPoly::variable(arity_, it->second);
    }
    fail("expected a term");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t arity_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

MultiPoly parse_poly(const std::string& text, std::span<const std::string> names) {
  return Parser(text, names).parse();
}

}  // namespace phi4
