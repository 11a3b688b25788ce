#pragma once
// Exact algebra of multi-qubit Pauli strings and weighted sums of them:
// products, commutators, Hermiticity tests, and nested-commutator pools.
//
// Representation: a string is i^phase_power * (tensor of letters), where the
// letter on site j is picked by the bit pair (x_bits[j], z_bits[j]):
//   (0,0)=I  (1,0)=X  (1,1)=Y  (0,1)=Z
// The letter tensor itself is Hermitian; phase_power in {0,2} keeps the whole
// string Hermitian, {1,3} makes it anti-Hermitian. Site j lives at bit j, so
// at most 64 sites.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace cdfqa {

using complexd = std::complex<double>;

inline int popcount64(std::uint64_t v) { return std::popcount(v); }

struct PauliString {
  int n_sites = 0;
  std::uint64_t x_bits = 0;
  std::uint64_t z_bits = 0;
  int phase_power = 0;  // exponent of i, mod 4

  bool operator==(const PauliString&) const = default;

  bool is_identity_letters() const { return x_bits == 0 && z_bits == 0; }

  char letter_at(int site) const {
    const bool x = (x_bits >> site) & 1, z = (z_bits >> site) & 1;
    return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
  }

  std::uint64_t support() const { return x_bits | z_bits; }
};

inline PauliString make_string(int n_sites, std::uint64_t x, std::uint64_t z,
                               int phase = 0) {
  if (n_sites < 1 || n_sites > 64)
    throw std::invalid_argument("PauliString: n_sites must be in [1, 64]");
  return {n_sites, x, z, ((phase % 4) + 4) % 4};
}

// Single-site letter at `site`, e.g. pauli_site('Y', 3, n).
inline PauliString pauli_site(char letter, int site, int n_sites) {
  std::uint64_t x = 0, z = 0;
  const std::uint64_t m = std::uint64_t{1} << site;
  switch (letter) {
    case 'I': break;
    case 'X': x = m; break;
    case 'Y': x = m; z = m; break;
    case 'Z': z = m; break;
    default: throw std::invalid_argument("pauli_site: unknown letter");
  }
  return make_string(n_sites, x, z);
}

// Word such as "YZ" anchored at `site`, later letters on successive sites
// modulo the chain length.
inline PauliString pauli_word(const std::string& word, int site, int n_sites) {
  PauliString s = make_string(n_sites, 0, 0);
  for (std::size_t k = 0; k < word.size(); ++k) {
    const int j = static_cast<int>((site + k) % static_cast<std::size_t>(n_sites));
    const PauliString p = pauli_site(word[k], j, n_sites);
    if (s.support() & p.support())
      throw std::invalid_argument("pauli_word: word wraps onto itself");
    s.x_bits |= p.x_bits;
    s.z_bits |= p.z_bits;
  }
  return s;
}

inline void check_same_sites(int a, int b, const char* who) {
  if (a != b) throw std::invalid_argument(std::string(who) + ": size mismatch");
}

// Group product with exact i-phase accumulation. Letter tensors are expanded
// into the X^x Z^z normal form (each Y contributing a factor i), multiplied
// with (-1) per Z-past-X transposition, and folded back.
inline PauliString multiply(const PauliString& a, const PauliString& b) {
  check_same_sites(a.n_sites, b.n_sites, "multiply");
  PauliString r;
  r.n_sites = a.n_sites;
  r.x_bits = a.x_bits ^ b.x_bits;
  r.z_bits = a.z_bits ^ b.z_bits;
  int p = a.phase_power + b.phase_power;
  p += popcount64(a.x_bits & a.z_bits);      // a's Y letters -> i * XZ
  p += popcount64(b.x_bits & b.z_bits);      // b's Y letters
  p += 2 * popcount64(a.z_bits & b.x_bits);  // commute a's Z past b's X
  p -= popcount64(r.x_bits & r.z_bits);      // fold XZ pairs back into Y
  r.phase_power = ((p % 4) + 4) % 4;
  return r;
}

// True iff the strings commute: the number of sites carrying distinct
// non-identity letters must be even.
inline bool commutes(const PauliString& a, const PauliString& b) {
  check_same_sites(a.n_sites, b.n_sites, "commutes");
  const int anti = popcount64(a.x_bits & b.z_bits) ^ popcount64(a.z_bits & b.x_bits);
  return (anti & 1) == 0;
}

// Weighted sum of phase-0 (letter-tensor) strings; the universal carrier for
// Hamiltonians and observables. Coefficients with |c| < 1e-14 are pruned.
class PauliSum {
 public:
  using Key = std::pair<std::uint64_t, std::uint64_t>;  // (x_bits, z_bits)
  static constexpr double kPrune = 1e-14;

  explicit PauliSum(int n_sites = 1) : n_(n_sites) {
    if (n_sites < 1 || n_sites > 64)
      throw std::invalid_argument("PauliSum: n_sites must be in [1, 64]");
  }

  int n_sites() const { return n_; }
  const std::map<Key, complexd>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // Adds coeff * string; the string's phase is folded into the coefficient.
  void add(const PauliString& s, complexd coeff) {
    check_same_sites(n_, s.n_sites, "PauliSum::add");
    static const complexd iu[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    coeff *= iu[s.phase_power];
    const Key k{s.x_bits, s.z_bits};
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      if (std::abs(coeff) >= kPrune) terms_.emplace(k, coeff);
    } else {
      it->second += coeff;
      if (std::abs(it->second) < kPrune) terms_.erase(it);
    }
  }

  void add_word(const std::string& word, int site, complexd coeff) {
    add(pauli_word(word, site, n_), coeff);
  }

  PauliString string_for(const Key& k) const {
    return make_string(n_, k.first, k.second);
  }

  complexd coefficient(const PauliString& s) const {
    auto it = terms_.find({s.x_bits, s.z_bits});
    if (it == terms_.end()) return {0, 0};
    static const complexd iu[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    // stored coeff refers to the phase-0 string; undo the query's phase
    return it->second * iu[(4 - s.phase_power) % 4];
  }

  PauliSum& operator+=(const PauliSum& o) {
    check_same_sites(n_, o.n_, "PauliSum::operator+=");
    for (const auto& [k, c] : o.terms_) add(make_string(n_, k.first, k.second), c);
    return *this;
  }

  PauliSum& operator*=(complexd scale) {
    if (scale == complexd{0, 0}) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= scale;
    return *this;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator*(complexd s, PauliSum a) { return a *= s; }

  bool is_hermitian(double tol = 1e-12) const {
    for (const auto& [k, c] : terms_)
      if (std::abs(c.imag()) > tol) return false;
    return true;
  }

  bool is_anti_hermitian(double tol = 1e-12) const {
    for (const auto& [k, c] : terms_)
      if (std::abs(c.real()) > tol) return false;
    return true;
  }

  std::vector<PauliString> strings() const {
    std::vector<PauliString> out;
    out.reserve(terms_.size());
    for (const auto& [k, c] : terms_) out.push_back(string_for(k));
    return out;
  }

 private:
  int n_;
  std::map<Key, complexd> terms_;
};

// [a, b] = ab - ba. Commuting string pairs are skipped; anticommuting pairs
// contribute 2 * cA * cB * (a_string * b_string).
inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  check_same_sites(a.n_sites(), b.n_sites(), "commutator");
  PauliSum out(a.n_sites());
  for (const auto& [ka, ca] : a.terms()) {
    const PauliString pa = a.string_for(ka);
    for (const auto& [kb, cb] : b.terms()) {
      const PauliString pb = b.string_for(kb);
      if (commutes(pa, pb)) continue;
      out.add(multiply(pa, pb), 2.0 * ca * cb);
    }
  }
  return out;
}

// Odd nested commutators [h,[h,...[h, h1]]] with 2k-1 applications of h,
// k = 1...order. Inputs must be Hermitian; every output is anti-Hermitian.
inline std::vector<PauliSum> nested_commutator_pool(const PauliSum& h,
                                                    const PauliSum& h1,
                                                    int order) {
  if (order < 1) throw std::invalid_argument("nested_commutator_pool: order >= 1");
  if (!h.is_hermitian() || !h1.is_hermitian())
    throw std::invalid_argument("nested_commutator_pool: inputs must be Hermitian");
  std::vector<PauliSum> out;
  PauliSum cur = h1;
  for (int k = 1; k <= order; ++k) {
    const int steps = (k == 1) ? 1 : 2;  // from 2k-3 to 2k-1 applications
    for (int s = 0; s < steps; ++s) cur = commutator(h, cur);
    out.push_back(cur);
  }
  return out;
}

// Minimal-width translation pattern of a string on its ring: the letter word
// read from the anchor that minimizes (width, then word). "ZXX" anchored over
// the boundary still canonicalizes to "ZXX". Identity maps to "I" at anchor 0.
struct AnchoredPattern {
  std::string word = "I";
  int anchor = 0;
};

inline AnchoredPattern anchored_pattern(const PauliString& s) {
  if (s.is_identity_letters()) return {};
  const int n = s.n_sites;
  std::vector<int> sites;
  for (int i = 0; i < n; ++i)
    if ((s.support() >> i) & 1) sites.push_back(i);
  std::tuple<int, std::string, int> best{65, "", 0};
  for (int a : sites) {
    int width = 0;
    for (int i : sites) width = std::max(width, (i - a + n) % n + 1);
    if (width > std::get<0>(best)) continue;
    std::string word(width, 'I');
    for (int i : sites) word[(i - a + n) % n] = s.letter_at(i);
    if (std::tuple{width, word, a} < best) best = {width, word, a};
  }
  return {std::get<1>(best), std::get<2>(best)};
}

inline std::string translation_pattern(const PauliString& s) {
  return anchored_pattern(s).word;
}

// Distinct translation patterns across a pool entry, with three-or-more-body
// patterns filtered out by default (the pool is restricted to local and
// two-body sums); pass max_body = 64 to see everything.
inline std::vector<std::string> pool_patterns(const std::vector<PauliSum>& pool,
                                              int max_body = 2) {
  std::vector<std::string> out;
  for (const PauliSum& sum : pool)
    for (const PauliString& s : sum.strings()) {
      if (popcount64(s.support()) > max_body) continue;
      std::string pat = translation_pattern(s);
      bool seen = false;
      for (const std::string& p : out) seen = seen || p == pat;
      if (!seen) out.push_back(pat);
    }
  return out;
}

inline std::string format_coeff(complexd c) {
  std::ostringstream os;
  if (std::abs(c.imag()) < 1e-12) {
    os << c.real();
  } else if (std::abs(c.real()) < 1e-12) {
    os << c.imag() << "i";
  } else {
    os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag())
       << "i)";
  }
  return os.str();
}

// Compact rendering: translation families with a uniform coefficient render
// as one "c*WORD" item (e.g. "-1*ZZ - 0.4*Z"); anything else falls back to
// per-string items like "0.5*YZ@3".
inline std::string to_shorthand(const PauliSum& sum) {
  if (sum.empty()) return "0";
  std::map<std::string, std::vector<std::pair<int, complexd>>> fam;
  for (const auto& [k, c] : sum.terms()) {
    const PauliString s = sum.string_for(k);
    const std::string pat = translation_pattern(s);
    int anchor = 0;
    if (pat != "I")
      for (int i = 0; i < sum.n_sites(); ++i)
        if (s == pauli_word(pat, i, sum.n_sites())) {
          anchor = i;
          break;
        }
    fam[pat].push_back({anchor, c});
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [pat, members] : fam) {
    bool uniform = true;
    for (const auto& [site, c] : members)
      uniform = uniform && std::abs(c - members[0].second) < 1e-12;
    const auto emit = [&](complexd c, const std::string& label) {
      if (!first) os << " + ";
      first = false;
      os << format_coeff(c) << "*" << label;
    };
    if (uniform && members.size() > 1) {
      emit(members[0].second, pat);
    } else {
      for (const auto& [site, c] : members)
        emit(c, pat + "@" + std::to_string(site));
    }
  }
  return os.str();
}

}  // namespace cdfqa
