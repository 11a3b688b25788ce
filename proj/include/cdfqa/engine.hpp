#pragma once
// Dense statevector machinery: initial states, exact evolution through cached
// eigendecompositions, first-order Trotter product evolution, expectation
// values, spectra, and energy-bin weights.
//
// Basis convention (used everywhere): basis index b encodes site j in bit j,
// with bit value 0 = spin up (Z eigenvalue +1). Index 0 is |up...up>.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "cdfqa/model.hpp"
#include "cdfqa/pauli.hpp"

namespace cdfqa {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct StateVector {
  int n_sites = 0;
  VectorXcd amplitudes;

  std::int64_t dim() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }
};

// Ground state of -H1: uniform |+> tensor power for X, all-up basis state
// for Z.
inline StateVector initial_state(char h1_letter, int n_sites) {
  if (n_sites < 1 || n_sites > 12)
    throw domain_error("initial_state: dense scale is 1..12 sites");
  const std::int64_t dim = std::int64_t{1} << n_sites;
  StateVector psi{n_sites, VectorXcd::Zero(dim)};
  if (h1_letter == 'X') {
    psi.amplitudes.setConstant(complexd{std::pow(2.0, -n_sites / 2.0), 0});
  } else if (h1_letter == 'Z') {
    psi.amplitudes[0] = 1.0;
  } else {
    throw domain_error("initial_state: first control must be X or Z");
  }
  return psi;
}

// Per-basis action of a phase-0 letter-tensor string: flips the x-mask bits
// and scales by i^(#Y letters) * (-1)^(z-mask overlap with the basis bits).
inline complexd string_basis_factor(const PauliString& s, std::uint64_t basis) {
  static const complexd iu[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  int p = popcount64(s.x_bits & s.z_bits) + 2 * popcount64(s.z_bits & basis);
  return iu[(p + s.phase_power) % 4];
}

inline VectorXcd apply_string(const PauliString& s, const VectorXcd& v) {
  VectorXcd out(v.size());
  for (std::int64_t b = 0; b < v.size(); ++b)
    out[b ^ s.x_bits] = string_basis_factor(s, b) * v[b];
  return out;
}

inline MatrixXcd to_dense(const PauliSum& h) {
  const std::int64_t dim = std::int64_t{1} << h.n_sites();
  MatrixXcd m = MatrixXcd::Zero(dim, dim);
  for (const auto& [k, c] : h.terms()) {
    const PauliString s = h.string_for(k);
    for (std::int64_t b = 0; b < dim; ++b)
      m(b ^ s.x_bits, b) += c * string_basis_factor(s, b);
  }
  return m;
}

inline complexd expectation(const StateVector& psi, const PauliSum& h) {
  check_same_sites(psi.n_sites, h.n_sites(), "expectation");
  complexd acc{0, 0};
  for (const auto& [k, c] : h.terms()) {
    const PauliString s = h.string_for(k);
    complexd term{0, 0};
    for (std::int64_t b = 0; b < psi.dim(); ++b)
      term += std::conj(psi.amplitudes[b ^ s.x_bits]) *
              string_basis_factor(s, b) * psi.amplitudes[b];
    acc += c * term;
  }
  return acc;
}

inline double real_expectation(const StateVector& psi, const PauliSum& h,
                               double tol = 1e-10) {
  const complexd v = expectation(psi, h);
  if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v.real())))
    throw domain_error("expectation of a Hermitian operator came out complex");
  return v.real();
}

struct Spectrum {
  VectorXd eigenvalues;   // ascending
  MatrixXcd eigenvectors; // columns, orthonormal

  double ground_energy() const { return eigenvalues[0]; }
};

// Full Hermitian eigendecomposition (divide and conquer).
inline Spectrum diagonalize_dense(MatrixXcd m) {
  const lapack_int dim = static_cast<lapack_int>(m.rows());
  VectorXd evals(dim);
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', dim,
                                         m.data(), dim, evals.data());
  if (info != 0)
    throw std::runtime_error("eigensolver failed, info=" + std::to_string(info));
  return {std::move(evals), std::move(m)};
}

inline Spectrum diagonalize(const PauliSum& h) {
  if (h.n_sites() > 12)
    throw domain_error("diagonalize: dense scale is capped at 12 sites");
  if (!h.is_hermitian())
    throw std::invalid_argument("diagonalize: operator must be Hermitian");
  return diagonalize_dense(to_dense(h));
}

// exp(-i * scale * H) applied through one cached eigendecomposition of H;
// scale varies per call (feedback fields change every layer, operators do
// not).
class EvolutionOp {
 public:
  explicit EvolutionOp(const PauliSum& source)
      : n_(source.n_sites()), sp_(diagonalize(source)) {}
  EvolutionOp(int n_sites, Spectrum sp) : n_(n_sites), sp_(std::move(sp)) {}

  const Spectrum& spectrum() const { return sp_; }
  int n_sites() const { return n_; }

  void apply_in_place(StateVector& psi, double scale) const {
    check_same_sites(psi.n_sites, n_, "EvolutionOp::apply");
    if (scale == 0.0) return;
    VectorXcd w = sp_.eigenvectors.adjoint() * psi.amplitudes;
    w.array() *=
        (complexd{0, -scale} * sp_.eigenvalues.array().cast<complexd>()).exp();
    psi.amplitudes.noalias() = sp_.eigenvectors * w;
  }

  StateVector apply(StateVector psi, double scale) const {
    apply_in_place(psi, scale);
    return psi;
  }

  // Dense matrix exp(-i * scale * H); used by the density-matrix runner.
  MatrixXcd matrix(double scale) const {
    VectorXcd phases =
        (complexd{0, -scale} * sp_.eigenvalues.array().cast<complexd>()).exp();
    return sp_.eigenvectors * phases.asDiagonal() * sp_.eigenvectors.adjoint();
  }

 private:
  int n_;
  Spectrum sp_;
};

inline StateVector evolve_exact(const StateVector& psi, const EvolutionOp& op,
                                double scale) {
  return op.apply(psi, scale);
}

// Deterministic Trotter term order: two-site terms ascending by anchor bond,
// then Z terms by site, then X, then Y; anything else trails by bit masks.
inline std::vector<PauliSum::Key> trotter_order(const PauliSum& h) {
  struct Item {
    int cls;
    int pos;
    PauliSum::Key key;
  };
  std::vector<Item> items;
  for (const auto& [k, c] : h.terms()) {
    const PauliString s = h.string_for(k);
    const AnchoredPattern ap = anchored_pattern(s);
    const int body = popcount64(s.support());
    int cls = 5, pos = 0;
    if (body == 2) {
      cls = 0;
      pos = ap.anchor;
    } else if (body == 1) {
      pos = ap.anchor;
      cls = ap.word == "Z" ? 1 : ap.word == "X" ? 2 : 3;
    }
    items.push_back({cls, pos, k});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.cls, a.pos, a.key) < std::tie(b.cls, b.pos, b.key);
  });
  std::vector<PauliSum::Key> out;
  out.reserve(items.size());
  for (const Item& i : items) out.push_back(i.key);
  return out;
}

// One first-order product pass: exp(-i * scale * c_j * P_j) per term in the
// given order, each as the closed-form rotation cos(t) - i sin(t) P.
inline void evolve_trotter1_in_place(StateVector& psi, const PauliSum& h,
                                     double scale,
                                     const std::vector<PauliSum::Key>& order) {
  check_same_sites(psi.n_sites, h.n_sites(), "evolve_trotter1");
  if (scale == 0.0) return;
  for (const PauliSum::Key& k : order) {
    const auto it = h.terms().find(k);
    if (it == h.terms().end())
      throw std::invalid_argument("evolve_trotter1: order references a missing term");
    if (std::abs(it->second.imag()) > 1e-12)
      throw std::invalid_argument("evolve_trotter1: Hamiltonian must be Hermitian");
    const double theta = scale * it->second.real();
    const PauliString s = h.string_for(k);
    const complexd cos_t{std::cos(theta), 0}, misin_t{0, -std::sin(theta)};
    psi.amplitudes = cos_t * psi.amplitudes +
                     misin_t * apply_string(s, psi.amplitudes);
  }
}

inline StateVector evolve_trotter1(StateVector psi, const PauliSum& h,
                                   double scale,
                                   const std::vector<PauliSum::Key>& order) {
  evolve_trotter1_in_place(psi, h, scale, order);
  return psi;
}

// Bin weights from per-eigenstate probabilities over windows
// [E0 + i*w, E0 + (i+1)*w); eigenvalues tied within 1e-9 share a bin,
// overflow goes to the last bin.
inline std::vector<double> bins_from_probabilities(
    const std::vector<double>& probs, const VectorXd& eigenvalues, int n_bins,
    double bin_width) {
  if (n_bins < 1) throw std::invalid_argument("energy_bins: n_bins >= 1");
  if (bin_width <= 0) throw std::invalid_argument("energy_bins: width > 0");
  std::vector<double> bins(n_bins, 0.0);
  const double e0 = eigenvalues[0];
  int prev_bin = 0;
  double prev_eval = e0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = eigenvalues[static_cast<std::int64_t>(i)];
    int b;
    if (i > 0 && std::abs(e - prev_eval) <= 1e-9) {
      b = prev_bin;
    } else {
      b = static_cast<int>(std::floor((e - e0) / bin_width));
      b = std::clamp(b, 0, n_bins - 1);
    }
    bins[b] += probs[i];
    prev_bin = b;
    prev_eval = e;
  }
  return bins;
}

// Weight of the state inside each energy window of the spectrum.
inline std::vector<double> energy_bins(const StateVector& psi,
                                       const Spectrum& sp, int n_bins,
                                       double bin_width) {
  const VectorXcd w = sp.eigenvectors.adjoint() * psi.amplitudes;
  std::vector<double> probs(w.size());
  for (std::int64_t i = 0; i < w.size(); ++i) probs[i] = std::norm(w[i]);
  return bins_from_probabilities(probs, sp.eigenvalues, n_bins, bin_width);
}

}  // namespace cdfqa
