#pragma once
// The feedback loop: each layer applies the problem unitary, then the first
// control unitary, then the second-control unitary, with both control fields
// set from commutator expectations of the state entering the layer.

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cdfqa/engine.hpp"
#include "cdfqa/model.hpp"
#include "cdfqa/pauli.hpp"

namespace cdfqa {

enum class EvolutionMode { exact, trotter1 };

struct ProtocolSpec {
  SpinChainSpec chain;
  OperatorTag h1 = parse_tag("X");
  OperatorTag h_cd = parse_tag("I");
  double alpha = 6.0;
  double delta_t = 0.01;
  int n_layers = 200;
  bool h_add_enabled = false;
  EvolutionMode mode = EvolutionMode::exact;
};

struct LayerRecord {
  int layer_k = 0;
  double beta_k = 0;
  double gamma_k = 0;
  double energy = 0;
  double e_p = 0;                  // (energy - ground) / N
  std::vector<double> bin_weights; // populated when requested
};

struct ProtocolTrace {
  std::vector<LayerRecord> rows;
  double ground_energy = 0;
  int n_sites = 0;
};

struct TraceOptions {
  bool record_bins = false;
  int n_bins = 8;
  std::function<void(const std::string&)> warn = [](const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
  };
};

inline char h1_letter(const OperatorTag& h1) {
  if (h1.parts.size() != 1 || h1.parts[0].second != 1.0 ||
      (h1.parts[0].first != "X" && h1.parts[0].first != "Z"))
    throw domain_error("first control Hamiltonian must be X or Z");
  return h1.parts[0].first[0];
}

inline void validate_protocol(const ProtocolSpec& spec) {
  validate_chain(spec.chain);
  h1_letter(spec.h1);
  if (spec.alpha <= 0) throw domain_error("alpha must be positive");
  if (spec.delta_t <= 0) throw domain_error("delta_t must be positive");
  if (spec.n_layers < 1) throw domain_error("need at least one layer");
}

// Control field (alpha/N) * i * <[h_p, h_m]>; the expectation of the
// anti-Hermitian commutator is purely imaginary, so the field is real.
inline double control_fields(const StateVector& state, const PauliSum& h_p,
                             const PauliSum& h_m, double alpha, int n_sites) {
  const complexd c = expectation(state, commutator(h_p, h_m));
  if (std::abs(c.real()) > 1e-10 * std::max(1.0, std::abs(c.imag())))
    throw domain_error("control field came out complex: commutator algebra bug");
  return (alpha / n_sites) * (complexd{0, 1} * c).real();
}

namespace detail {

// i * [h_p, h_m] as a Hermitian sum, precomputed once per run.
inline PauliSum field_operator(const PauliSum& h_p, const PauliSum& h_m) {
  PauliSum f = commutator(h_p, h_m);
  f *= complexd{0, 1};
  if (!f.is_hermitian())
    throw domain_error("i*[h_p, h_m] is not Hermitian: commutator algebra bug");
  return f;
}

inline double real_field(const StateVector& psi, const PauliSum& field,
                         double alpha, int n) {
  return field.empty() ? 0.0 : (alpha / n) * real_expectation(psi, field);
}

}  // namespace detail

// Runs the feedback protocol and records one row per layer plus a layer-0 row
// holding the initial energy. When the additional drive is enabled it is
// folded into the problem unitary only; the control fields keep being
// computed against the bare problem Hamiltonian.
inline ProtocolTrace run_protocol(const ProtocolSpec& spec,
                                  const TraceOptions& opts = {}) {
  validate_protocol(spec);
  const int n = spec.chain.n_sites;
  const double dt = spec.delta_t;
  if (spec.alpha * dt > 0.1 && opts.warn) {
    std::ostringstream os;
    os << "alpha*delta_t = " << spec.alpha * dt
       << " exceeds 0.1: monotone descent is not guaranteed";
    opts.warn(os.str());
  }

  const PauliSum h_p = build_ising(spec.chain);
  const PauliSum h_1 = build_operator(spec.h1, spec.chain);
  const PauliSum h_cd = build_operator(spec.h_cd, spec.chain);
  const PauliSum f_1 = detail::field_operator(h_p, h_1);
  const PauliSum f_cd = h_cd.empty() ? PauliSum(n)
                                     : detail::field_operator(h_p, h_cd);

  const bool exact = spec.mode == EvolutionMode::exact;
  const EvolutionOp op_p(h_p);
  std::optional<EvolutionOp> op_1, op_cd;
  std::vector<PauliSum::Key> order_p, order_1, order_cd;
  if (exact) {
    op_1.emplace(h_1);
    if (!h_cd.empty()) op_cd.emplace(h_cd);
  } else {
    order_p = trotter_order(h_p);
    order_1 = trotter_order(h_1);
    order_cd = trotter_order(h_cd);
  }

  StateVector psi = initial_state(h1_letter(spec.h1), n);
  const double e0 = op_p.spectrum().ground_energy();

  ProtocolTrace trace;
  trace.ground_energy = e0;
  trace.n_sites = n;
  const auto record = [&](int k, double beta, double gamma) {
    LayerRecord row;
    row.layer_k = k;
    row.beta_k = beta;
    row.gamma_k = gamma;
    row.energy = real_expectation(psi, h_p);
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

  for (int k = 1; k <= spec.n_layers; ++k) {
    const double beta = detail::real_field(psi, f_1, spec.alpha, n);
    const double gamma = detail::real_field(psi, f_cd, spec.alpha, n);

    if (!spec.h_add_enabled) {
      if (exact)
        op_p.apply_in_place(psi, dt);
      else
        evolve_trotter1_in_place(psi, h_p, dt, order_p);
    } else {
      const PauliSum h_layer = h_p + additional_term(k, spec.chain);
      if (exact)
        EvolutionOp(h_layer).apply_in_place(psi, dt);
      else
        evolve_trotter1_in_place(psi, h_layer, dt, trotter_order(h_layer));
    }
    if (exact) {
      op_1->apply_in_place(psi, beta * dt);
      if (op_cd) op_cd->apply_in_place(psi, gamma * dt);
    } else {
      evolve_trotter1_in_place(psi, h_1, beta * dt, order_1);
      if (!h_cd.empty()) evolve_trotter1_in_place(psi, h_cd, gamma * dt, order_cd);
    }

    if (std::abs(psi.norm() - 1.0) > 1e-6)
      throw domain_error("state norm drifted at layer " + std::to_string(k));
    record(k, beta, gamma);
  }
  return trace;
}

inline ProtocolTrace run_with_additional_term(const ProtocolSpec& spec,
                                              const TraceOptions& opts = {}) {
  if (!spec.h_add_enabled)
    throw std::invalid_argument("run_with_additional_term: enable h_add first");
  return run_protocol(spec, opts);
}

}  // namespace cdfqa
