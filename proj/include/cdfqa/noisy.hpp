#pragma once
// Density-matrix simulation of the feedback loop under a per-layer global
// depolarizing channel, plus circuit folding and zero-noise extrapolation.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cdfqa/engine.hpp"
#include "cdfqa/model.hpp"
#include "cdfqa/protocol.hpp"

namespace cdfqa {

struct DensityMatrix {
  int n_sites = 0;
  MatrixXcd rho;
};

struct NoiseSpec {
  double per_layer_error = 0.0;           // depolarizing probability per layer
  std::vector<int> fold_factors = {1, 3}; // odd, ascending
};

inline void validate_noise(const NoiseSpec& noise) {
  if (noise.per_layer_error < 0 || noise.per_layer_error > 1)
    throw domain_error("per-layer error must be in [0, 1]");
  int prev = 0;
  for (int f : noise.fold_factors) {
    if (f % 2 == 0 || f <= prev)
      throw domain_error("fold factors must be odd and ascending");
    prev = f;
  }
}

inline DensityMatrix pure_density(const StateVector& psi) {
  return {psi.n_sites, psi.amplitudes * psi.amplitudes.adjoint()};
}

// rho <- (1-p) rho + p tr(rho) I / dim. Contracts every non-identity Pauli
// expectation by exactly (1-p).
inline void depolarize(DensityMatrix& dm, double p) {
  if (p == 0) return;
  const double fill = p * dm.rho.trace().real() / dm.rho.rows();
  dm.rho *= (1.0 - p);
  dm.rho.diagonal().array() += fill;
}

inline complexd trace_pauli(const DensityMatrix& dm, const PauliString& s) {
  complexd acc{0, 0};
  for (std::int64_t b = 0; b < dm.rho.rows(); ++b)
    acc += string_basis_factor(s, b) * dm.rho(b, b ^ s.x_bits);
  return acc;
}

inline complexd expectation(const DensityMatrix& dm, const PauliSum& h) {
  check_same_sites(dm.n_sites, h.n_sites(), "expectation");
  complexd acc{0, 0};
  for (const auto& [k, c] : h.terms()) acc += c * trace_pauli(dm, h.string_for(k));
  return acc;
}

inline double real_expectation(const DensityMatrix& dm, const PauliSum& h,
                               double tol = 1e-9) {
  const complexd v = expectation(dm, h);
  if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v.real())))
    throw domain_error("density-matrix expectation came out complex");
  return v.real();
}

namespace noisy_detail {

struct NoisyRun {
  ProtocolTrace trace;
  DensityMatrix final_state;
};

// Shared core: evolves the density matrix with feedback fields computed from
// the noisy state itself. fold_factor = 2n+1 applies each layer's unitary
// block as block (block^dagger block)^n with the channel after every physical
// block, so the effective noise per layer scales with the factor.
inline NoisyRun run(const ProtocolSpec& spec, const NoiseSpec& noise,
                    int fold_factor, const TraceOptions& opts) {
  validate_protocol(spec);
  validate_noise(noise);
  if (fold_factor < 1 || fold_factor % 2 == 0)
    throw domain_error("fold factor must be odd and positive");
  if (spec.chain.n_sites > 5)
    throw domain_error("density-matrix runs are capped at 5 sites");
  if (spec.mode != EvolutionMode::exact)
    throw domain_error("density-matrix runs use exact evolution");
  const int n = spec.chain.n_sites;
  const double dt = spec.delta_t;
  const double p = noise.per_layer_error;

  const PauliSum h_p = build_ising(spec.chain);
  const PauliSum h_1 = build_operator(spec.h1, spec.chain);
  const PauliSum h_cd = build_operator(spec.h_cd, spec.chain);
  const PauliSum f_1 = detail::field_operator(h_p, h_1);
  const PauliSum f_cd = h_cd.empty() ? PauliSum(n)
                                     : detail::field_operator(h_p, h_cd);

  const EvolutionOp op_p(h_p);
  const EvolutionOp op_1(h_1);
  std::optional<EvolutionOp> op_cd;
  if (!h_cd.empty()) op_cd.emplace(h_cd);
  const MatrixXcd u_p = op_p.matrix(dt);

  DensityMatrix dm = pure_density(initial_state(h1_letter(spec.h1), n));
  const double e0 = op_p.spectrum().ground_energy();

  ProtocolTrace trace;
  trace.ground_energy = e0;
  trace.n_sites = n;
  const auto record = [&](int k, double beta, double gamma) {
    LayerRecord row{k, beta, gamma, real_expectation(dm, h_p), 0.0, {}};
    row.e_p = (row.energy - e0) / n;
    if (opts.record_bins) {
      const MatrixXcd& v = op_p.spectrum().eigenvectors;
      const VectorXd diag = (v.adjoint() * dm.rho * v).diagonal().real();
      std::vector<double> probs(diag.data(), diag.data() + diag.size());
      row.bin_weights =
          bins_from_probabilities(probs, op_p.spectrum().eigenvalues,
                                  opts.n_bins, 2.0 * spec.chain.coupling_j);
    }
    if (!std::isfinite(row.beta_k) || !std::isfinite(row.gamma_k) ||
        !std::isfinite(row.energy))
      throw domain_error("non-finite noisy trace value at layer " +
                         std::to_string(k));
    trace.rows.push_back(std::move(row));
  };
  record(0, 0.0, 0.0);

  const int extra_pairs = (fold_factor - 1) / 2;
  for (int k = 1; k <= spec.n_layers; ++k) {
    const double beta =
        f_1.empty() ? 0.0 : (spec.alpha / n) * real_expectation(dm, f_1);
    const double gamma =
        f_cd.empty() ? 0.0 : (spec.alpha / n) * real_expectation(dm, f_cd);

    MatrixXcd block = op_1.matrix(beta * dt) *
                      (spec.h_add_enabled
                           ? EvolutionOp(h_p + additional_term(k, spec.chain))
                                 .matrix(dt)
                           : u_p);
    if (op_cd) block = op_cd->matrix(gamma * dt) * block;

    const auto apply_block = [&](const MatrixXcd& u) {
      dm.rho = u * dm.rho * u.adjoint();
      depolarize(dm, p);
    };
    apply_block(block);
    for (int r = 0; r < extra_pairs; ++r) {
      apply_block(block.adjoint());
      apply_block(block);
    }
    record(k, beta, gamma);
  }
  return {std::move(trace), std::move(dm)};
}

}  // namespace noisy_detail

inline ProtocolTrace run_noisy(const ProtocolSpec& spec, const NoiseSpec& noise,
                               const TraceOptions& opts = {}) {
  return noisy_detail::run(spec, noise, 1, opts).trace;
}

inline ProtocolTrace run_noisy_folded(const ProtocolSpec& spec,
                                      const NoiseSpec& noise, int fold_factor,
                                      const TraceOptions& opts = {}) {
  return noisy_detail::run(spec, noise, fold_factor, opts).trace;
}

// Polynomial (Richardson) extrapolation to x = 0 through all given points:
// the Lagrange interpolant of degree size-1 evaluated at zero.
inline double extrapolate_to_zero(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("extrapolation needs >= 2 points");
  double acc = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double weight = 1;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      weight *= (0.0 - xs[j]) / (xs[i] - xs[j]);
    }
    acc += ys[i] * weight;
  }
  return acc;
}

// Runs the protocol once per fold factor under noise and extrapolates the
// observable's final expectation to the zero-noise limit.
inline double fold_and_extrapolate(const ProtocolSpec& spec,
                                   const NoiseSpec& noise,
                                   const PauliSum& observable,
                                   const TraceOptions& opts = {}) {
  if (noise.fold_factors.size() < 2)
    throw domain_error("fold-and-extrapolate needs at least 2 fold factors");
  std::vector<double> xs, ys;
  for (int f : noise.fold_factors) {
    const auto run = noisy_detail::run(spec, noise, f, opts);
    xs.push_back(static_cast<double>(f));
    ys.push_back(real_expectation(run.final_state, observable));
  }
  return extrapolate_to_zero(xs, ys);
}

// Layer-resolved mitigation: runs per fold factor and extrapolates every
// layer's energy; beta/gamma columns report the unfolded (factor 1) run.
inline ProtocolTrace zne_trace(const ProtocolSpec& spec, const NoiseSpec& noise,
                               const TraceOptions& opts = {}) {
  if (noise.fold_factors.size() < 2)
    throw domain_error("zero-noise extrapolation needs at least 2 fold factors");
  std::vector<ProtocolTrace> traces;
  for (int f : noise.fold_factors)
    traces.push_back(run_noisy_folded(spec, noise, f, opts));
  ProtocolTrace out = traces[0];
  std::vector<double> xs(noise.fold_factors.begin(), noise.fold_factors.end());
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    std::vector<double> ys;
    for (const ProtocolTrace& t : traces) ys.push_back(t.rows[r].energy);
    out.rows[r].energy = extrapolate_to_zero(xs, ys);
    out.rows[r].e_p = (out.rows[r].energy - out.ground_energy) / out.n_sites;
  }
  return out;
}

}  // namespace cdfqa
