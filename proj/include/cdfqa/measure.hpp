#pragma once
// Measurement planning and finite-shot simulation.
//
// Counting works on translation patterns: every observable string is reduced
// to its minimal-width letter word; contained words (recoverable from a
// larger word's marginals) are absorbed; each remaining word founds a family
// unless it fits another family's periodic site settings, and a family with
// period p needs p interleaved measurement settings. The per-layer parallel
// count is the sum of family periods, independent of chain length by
// construction.
//
// Realized plans assign the concrete strings of a finite ring to groups with
// per-site basis settings (qubit-wise agreement), which also guarantees full
// pairwise commutation inside each group. When the ring length is not a
// multiple of a family period the wrap conflicts spill into extra overflow
// groups, so a realized plan can exceed the pattern count; it coincides with
// it whenever every family period divides the chain length.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cdfqa/engine.hpp"
#include "cdfqa/model.hpp"
#include "cdfqa/pauli.hpp"
#include "cdfqa/protocol.hpp"

namespace cdfqa {

// ---------- translation-pattern bookkeeping (infinite-chain reasoning) ----

namespace plan_detail {

// Letters of q, shifted by d, never clash with letters of p ('I' is free).
inline bool words_compatible_at(const std::string& p, const std::string& q,
                                int d) {
  for (int o = 0; o < static_cast<int>(q.size()); ++o) {
    const int s = o + d;
    if (s < 0 || s >= static_cast<int>(p.size())) continue;
    if (p[s] != 'I' && q[o] != 'I' && p[s] != q[o]) return false;
  }
  return true;
}

// Smallest spacing at which copies of the word can repeat without clashing.
inline int word_period(const std::string& p) {
  const int w = static_cast<int>(p.size());
  for (int per = 1; per <= w; ++per) {
    bool ok = true;
    for (int d = per; d < w; d += per) ok = ok && words_compatible_at(p, p, d);
    if (ok) return per;
  }
  return w;
}

// q's letters appear verbatim inside p at some offset: measuring p's word
// reproduces q from marginals.
inline bool word_contained(const std::string& q, const std::string& p) {
  if (q.size() > p.size()) return false;
  for (int d = 0; d + q.size() <= p.size(); ++d) {
    bool ok = true;
    for (int o = 0; o < static_cast<int>(q.size()); ++o)
      ok = ok && (q[o] == 'I' || q[o] == p[d + o]);
    if (ok) return true;
  }
  return false;
}

// q sits inside some periodic tiling of the family word.
inline bool fits_family(const std::string& q, const std::string& fam,
                        int period) {
  constexpr int kWindow = 64;
  for (int r = 0; r < period; ++r) {
    std::string setting(kWindow, 'I');
    for (int a = r; a + fam.size() <= kWindow; a += period)
      for (int o = 0; o < static_cast<int>(fam.size()); ++o)
        if (fam[o] != 'I') setting[a + o] = fam[o];
    bool ok = true;
    const int base = kWindow / 2;
    for (int o = 0; o < static_cast<int>(q.size()); ++o)
      ok = ok && (q[o] == 'I' || setting[base + o] == q[o]);
    if (ok) return true;
  }
  return false;
}

}  // namespace plan_detail

struct MeasurementFamily {
  std::string word;
  int period = 1;
};

struct ParallelCountDetail {
  int count = 0;
  std::vector<MeasurementFamily> families;
  std::vector<std::string> patterns;  // all distinct observable words
};

// Distinct strings of i[H_P, H_1] and i[H_P, H_CD]: everything the feedback
// rule needs measured each layer.
inline std::vector<PauliString> layer_observables(const OperatorTag& h_cd_tag,
                                                  const SpinChainSpec& chain,
                                                  const OperatorTag& h1_tag) {
  const PauliSum h_p = build_ising(chain);
  std::set<PauliSum::Key> keys;
  const auto collect = [&](const OperatorTag& tag) {
    if (tag.is_identity()) return;
    const PauliSum comm = commutator(h_p, build_operator(tag, chain));
    for (const auto& [k, c] : comm.terms())
      if (k.first | k.second) keys.insert(k);
  };
  collect(h1_tag);
  collect(h_cd_tag);
  std::vector<PauliString> out;
  for (const auto& k : keys)
    out.push_back(make_string(chain.n_sites, k.first, k.second));
  return out;
}

inline ParallelCountDetail parallel_count_detail(
    const std::vector<PauliString>& strings) {
  using namespace plan_detail;
  ParallelCountDetail out;
  std::set<std::string> words;
  for (const PauliString& s : strings) words.insert(translation_pattern(s));
  out.patterns.assign(words.begin(), words.end());
  std::sort(out.patterns.begin(), out.patterns.end(),
            [](const std::string& a, const std::string& b) {
              return std::pair{a.size(), a} < std::pair{b.size(), b};
            });
  for (const std::string& p : out.patterns) {
    bool absorbed = false;
    for (const std::string& q : out.patterns)
      absorbed = absorbed || (q != p && word_contained(p, q));
    for (const MeasurementFamily& f : out.families)
      absorbed = absorbed || fits_family(p, f.word, f.period);
    if (!absorbed) out.families.push_back({p, word_period(p)});
  }
  for (const MeasurementFamily& f : out.families) out.count += f.period;
  return out;
}

// Per-layer number of simultaneous measurement settings for a protocol;
// pattern-based, hence independent of the chain length.
inline int parallel_count(const OperatorTag& h_cd_tag, const SpinChainSpec& chain,
                          const OperatorTag& h1_tag = parse_tag("X")) {
  return parallel_count_detail(layer_observables(h_cd_tag, chain, h1_tag)).count;
}

// ---------- realized grouping on the finite ring --------------------------

struct MeasurementGroup {
  std::vector<PauliString> members;
  std::string setting;  // per-site letter, 'I' = unconstrained

  bool admits(const PauliString& s) const {
    for (int i = 0; i < static_cast<int>(setting.size()); ++i) {
      const char l = s.letter_at(i);
      if (l != 'I' && setting[i] != 'I' && setting[i] != l) return false;
    }
    return true;
  }

  void insert(const PauliString& s) {
    members.push_back(s);
    for (int i = 0; i < static_cast<int>(setting.size()); ++i)
      if (s.letter_at(i) != 'I') setting[i] = s.letter_at(i);
  }
};

struct MeasurementPlan {
  int n_sites = 0;
  std::vector<MeasurementGroup> groups;

  int parallel_count() const { return static_cast<int>(groups.size()); }

  // Invariants: disjoint exact cover, pairwise commutation inside groups.
  void validate(const std::vector<PauliString>& strings) const {
    std::size_t total = 0;
    for (const MeasurementGroup& g : groups) {
      total += g.members.size();
      for (std::size_t i = 0; i < g.members.size(); ++i)
        for (std::size_t j = i + 1; j < g.members.size(); ++j)
          if (!commutes(g.members[i], g.members[j]))
            throw std::logic_error("measurement plan: non-commuting group");
    }
    if (total != strings.size())
      throw std::logic_error("measurement plan: cover mismatch");
    for (const PauliString& s : strings) {
      int hits = 0;
      for (const MeasurementGroup& g : groups)
        for (const PauliString& m : g.members) hits += (m == s);
      if (hits != 1) throw std::logic_error("measurement plan: string not covered once");
    }
  }
};

// Groups the strings of a layer into simultaneous-measurement settings:
// family words are laid out per rotation class first, then absorbed strings
// join the first group whose settings agree with them; anything that fits
// nowhere (wrap conflicts on rings the family periods do not divide) opens a
// fresh overflow group.
inline MeasurementPlan plan_measurements(const std::vector<PauliString>& strings,
                                         int n_sites) {
  using namespace plan_detail;
  for (const PauliString& s : strings)
    check_same_sites(s.n_sites, n_sites, "plan_measurements");
  const ParallelCountDetail detail = parallel_count_detail(strings);

  struct Placed {
    int family;  // index into detail.families, -1 = absorbed word
    std::string word;
    int anchor;
    PauliString s;
  };
  std::vector<Placed> placed;
  for (const PauliString& s : strings) {
    const AnchoredPattern ap = anchored_pattern(s);
    int fam = -1;
    for (std::size_t f = 0; f < detail.families.size(); ++f)
      if (detail.families[f].word == ap.word) fam = static_cast<int>(f);
    placed.push_back({fam, ap.word, ap.anchor, s});
  }
  std::sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    const int fa = a.family < 0 ? 1 : 0, fb = b.family < 0 ? 1 : 0;
    return std::tie(fa, a.family, a.anchor, a.word) <
           std::tie(fb, b.family, b.anchor, b.word);
  });

  MeasurementPlan plan;
  plan.n_sites = n_sites;
  std::vector<int> group_family;  // family whose pass opened the group
  for (const Placed& p : placed) {
    bool done = false;
    for (std::size_t g = 0; g < plan.groups.size() && !done; ++g) {
      // family strings only join their own family's groups, keeping the
      // rotation classes clean; absorbed strings go anywhere they fit
      if (p.family >= 0 && group_family[g] != p.family) continue;
      if (plan.groups[g].admits(p.s)) {
        plan.groups[g].insert(p.s);
        done = true;
      }
    }
    if (!done) {
      MeasurementGroup g;
      g.setting.assign(n_sites, 'I');
      g.insert(p.s);
      plan.groups.push_back(std::move(g));
      group_family.push_back(p.family);
    }
  }
  return plan;
}

// ---------- finite-shot sampling ------------------------------------------

// Documented RNG stream splitting: the run seed is mixed through splitmix64
// with the layer index and then the group index; each stream seeds one
// mt19937_64. Identical (seed, layer, group) always reproduces identical
// draws, independent of evaluation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t layer,
                                 std::uint64_t group) {
  return splitmix64(splitmix64(splitmix64(seed) ^ layer) ^ (group << 20));
}

inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

struct ShotEstimate {
  PauliString target;
  int shots_m = 0;
  double estimate = 0;
  double standard_error = 0;
  std::uint64_t seed = 0;
};

namespace sample_detail {

// Rotation into the measurement basis of a per-site letter word: X and Y
// sites get their 2x2 basis change, Z and free sites read out directly.
inline VectorXcd rotate_to_setting(const StateVector& psi,
                                   const std::string& setting) {
  VectorXcd v = psi.amplitudes;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < static_cast<int>(setting.size()); ++j) {
    const char l = setting[j];
    if (l == 'I' || l == 'Z') continue;
    const std::int64_t bit = std::int64_t{1} << j;
    for (std::int64_t b = 0; b < v.size(); ++b) {
      if (b & bit) continue;
      const complexd lo = v[b], hi = v[b | bit];
      if (l == 'X') {
        v[b] = inv_sqrt2 * (lo + hi);
        v[b | bit] = inv_sqrt2 * (lo - hi);
      } else {  // 'Y': +i eigenstate maps to outcome 0
        v[b] = inv_sqrt2 * (lo - complexd{0, 1} * hi);
        v[b | bit] = inv_sqrt2 * (lo + complexd{0, 1} * hi);
      }
    }
  }
  return v;
}

inline std::string setting_of_group(const std::vector<PauliString>& group,
                                    int n_sites) {
  std::string setting(n_sites, 'I');
  for (const PauliString& s : group)
    for (int j = 0; j < n_sites; ++j) {
      const char l = s.letter_at(j);
      if (l == 'I') continue;
      if (setting[j] != 'I' && setting[j] != l) return {};
      setting[j] = l;
    }
  return setting;
}

inline std::vector<std::uint32_t> draw_counts(const VectorXcd& rotated,
                                              int shots,
                                              std::mt19937_64& gen) {
  std::vector<double> cum(rotated.size());
  double acc = 0;
  for (std::int64_t b = 0; b < rotated.size(); ++b) {
    acc += std::norm(rotated[b]);
    cum[b] = acc;
  }
  std::vector<std::uint32_t> counts(rotated.size(), 0);
  for (int t = 0; t < shots; ++t) {
    const double u = uniform01(gen) * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t idx =
        std::min<std::size_t>(it - cum.begin(), counts.size() - 1);
    ++counts[idx];
  }
  return counts;
}

}  // namespace sample_detail

// Simultaneously measures a pairwise-commuting group shots_m times and
// returns per-string empirical means. Qubit-wise groups (everything the
// planner produces) measure in a per-site product basis; general commuting
// groups fall back to a dense joint eigenbasis.
inline std::vector<ShotEstimate> sample_expectation(
    const StateVector& state, const std::vector<PauliString>& group,
    int shots_m, std::uint64_t seed) {
  if (shots_m < 1) throw std::invalid_argument("sample_expectation: shots >= 1");
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = i + 1; j < group.size(); ++j)
      if (!commutes(group[i], group[j]))
        throw std::invalid_argument("sample_expectation: group must commute");
  std::mt19937_64 gen(seed);
  std::vector<ShotEstimate> out;
  const std::string setting =
      sample_detail::setting_of_group(group, state.n_sites);

  if (!setting.empty()) {
    const VectorXcd rotated = sample_detail::rotate_to_setting(state, setting);
    const auto counts = sample_detail::draw_counts(rotated, shots_m, gen);
    for (const PauliString& s : group) {
      double mean = 0;
      for (std::size_t b = 0; b < counts.size(); ++b)
        if (counts[b])
          mean += counts[b] * (popcount64(b & s.support()) % 2 ? -1.0 : 1.0);
      mean /= shots_m;
      out.push_back({s, shots_m, mean,
                     std::sqrt(std::max(0.0, 1.0 - mean * mean) / shots_m),
                     seed});
    }
    return out;
  }

  // dense joint eigenbasis for commuting-but-not-qubit-wise groups
  if (group.size() > 24)
    throw std::invalid_argument("sample_expectation: dense path caps at 24 strings");
  PauliSum weighted(state.n_sites);
  double w = 1.0;
  for (const PauliString& s : group) {
    weighted.add(s, w);
    w *= 3.0;
  }
  const Spectrum sp = diagonalize(weighted);
  const std::int64_t dim = sp.eigenvectors.rows();
  std::vector<std::vector<double>> signs(group.size(),
                                         std::vector<double>(dim));
  for (std::size_t gi = 0; gi < group.size(); ++gi)
    for (std::int64_t c = 0; c < dim; ++c) {
      const VectorXcd col = sp.eigenvectors.col(c);
      const complexd v = col.dot(apply_string(group[gi], col));
      if (std::abs(std::abs(v.real()) - 1.0) > 1e-8)
        throw std::logic_error("joint eigenbasis degeneracy leak");
      signs[gi][c] = v.real() > 0 ? 1.0 : -1.0;
    }
  const VectorXcd w_amp = sp.eigenvectors.adjoint() * state.amplitudes;
  const auto counts = sample_detail::draw_counts(w_amp, shots_m, gen);
  for (std::size_t gi = 0; gi < group.size(); ++gi) {
    double mean = 0;
    for (std::int64_t c = 0; c < dim; ++c)
      if (counts[c]) mean += counts[c] * signs[gi][c];
    mean /= shots_m;
    out.push_back({group[gi], shots_m, mean,
                   std::sqrt(std::max(0.0, 1.0 - mean * mean) / shots_m),
                   seed});
  }
  return out;
}

// Feedback loop with sampled control fields: each layer measures every plan
// group shots_m times and assembles beta and gamma from the per-string
// estimates; the recorded energy is the exact expectation of the state the
// sampled fields actually produced. shots_m = 0 is the infinite-shot
// sentinel and reproduces the exact run.
inline ProtocolTrace run_protocol_sampled(const ProtocolSpec& spec, int shots_m,
                                          std::uint64_t seed,
                                          const TraceOptions& opts = {}) {
  if (shots_m == 0) return run_protocol(spec, opts);
  if (shots_m < 0) throw std::invalid_argument("run_protocol_sampled: shots >= 0");
  validate_protocol(spec);
  if (spec.mode != EvolutionMode::exact)
    throw domain_error("sampled runs use exact evolution");
  const int n = spec.chain.n_sites;
  const double dt = spec.delta_t;

  const PauliSum h_p = build_ising(spec.chain);
  const PauliSum h_1 = build_operator(spec.h1, spec.chain);
  const PauliSum h_cd = build_operator(spec.h_cd, spec.chain);
  const PauliSum f_1 = detail::field_operator(h_p, h_1);
  const PauliSum f_cd = h_cd.empty() ? PauliSum(n)
                                     : detail::field_operator(h_p, h_cd);

  const std::vector<PauliString> observables =
      layer_observables(spec.h_cd, spec.chain, spec.h1);
  const MeasurementPlan plan = plan_measurements(observables, n);

  const EvolutionOp op_p(h_p);
  const EvolutionOp op_1(h_1);
  std::optional<EvolutionOp> op_cd;
  if (!h_cd.empty()) op_cd.emplace(h_cd);

  StateVector psi = initial_state(h1_letter(spec.h1), n);
  const double e0 = op_p.spectrum().ground_energy();

  ProtocolTrace trace;
  trace.ground_energy = e0;
  trace.n_sites = n;
  const auto record = [&](int k, double beta, double gamma) {
    LayerRecord row{k, beta, gamma, real_expectation(psi, h_p), 0.0, {}};
    row.e_p = (row.energy - e0) / n;
    if (opts.record_bins)
      row.bin_weights = energy_bins(psi, op_p.spectrum(), opts.n_bins,
                                    2.0 * spec.chain.coupling_j);
    if (!std::isfinite(row.beta_k) || !std::isfinite(row.gamma_k) ||
        !std::isfinite(row.energy))
      throw domain_error("non-finite trace value at layer " + std::to_string(k));
    trace.rows.push_back(std::move(row));
  };
  record(0, 0.0, 0.0);

  const auto field_from = [&](const PauliSum& field,
                              const std::map<PauliSum::Key, double>& est) {
    double acc = 0;
    for (const auto& [k, c] : field.terms()) acc += c.real() * est.at(k);
    return (spec.alpha / n) * acc;
  };

  for (int k = 1; k <= spec.n_layers; ++k) {
    std::map<PauliSum::Key, double> est;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
      const auto shots = sample_expectation(psi, plan.groups[g].members,
                                            shots_m, stream_seed(seed, k, g));
      for (const ShotEstimate& e : shots)
        est[{e.target.x_bits, e.target.z_bits}] = e.estimate;
    }
    const double beta = field_from(f_1, est);
    const double gamma = f_cd.empty() ? 0.0 : field_from(f_cd, est);

    op_p.apply_in_place(psi, dt);
    op_1.apply_in_place(psi, beta * dt);
    if (op_cd) op_cd->apply_in_place(psi, gamma * dt);
    record(k, beta, gamma);
  }
  return trace;
}

// Per-layer energy deviations of a sampled run from its exact counterpart,
// over layers [layer_lo, layer_hi] inclusive (layer_hi < 0: through the end).
inline std::vector<double> energy_deviations(const ProtocolTrace& exact,
                                             const ProtocolTrace& sampled,
                                             int layer_lo = 1,
                                             int layer_hi = -1) {
  if (exact.rows.size() != sampled.rows.size())
    throw std::invalid_argument("energy_deviations: trace lengths differ");
  const int last = layer_hi < 0 ? static_cast<int>(exact.rows.size()) - 1
                                : layer_hi;
  std::vector<double> out;
  for (int k = layer_lo; k <= last; ++k)
    out.push_back(sampled.rows[k].energy - exact.rows[k].energy);
  return out;
}

inline double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2)
    throw std::invalid_argument("sample_stddev needs >= 2 values");
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Least-squares fit of sigma = c / sqrt(M) through the origin, with the
// coefficient of determination measured against the mean-sigma baseline.
struct InverseSqrtFit {
  double coefficient = 0;
  double r_squared = 0;
};

inline InverseSqrtFit fit_inverse_sqrt(const std::vector<double>& shots,
                                       const std::vector<double>& sigmas) {
  if (shots.size() != sigmas.size() || shots.size() < 2)
    throw std::invalid_argument("fit_inverse_sqrt needs >= 2 points");
  double sxx = 0, sxy = 0, mean_y = 0;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const double x = 1.0 / std::sqrt(shots[i]);
    sxx += x * x;
    sxy += x * sigmas[i];
    mean_y += sigmas[i];
  }
  mean_y /= static_cast<double>(sigmas.size());
  InverseSqrtFit fit;
  fit.coefficient = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const double pred = fit.coefficient / std::sqrt(shots[i]);
    ss_res += (sigmas[i] - pred) * (sigmas[i] - pred);
    ss_tot += (sigmas[i] - mean_y) * (sigmas[i] - mean_y);
  }
  fit.r_squared = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

}  // namespace cdfqa
