// Feedback-loop checks: pinned first-layer fields, layer-0 conventions,
// monotone descent, reflection symmetry, size independence of the fields,
// additional-drive wiring, Trotter agreement, and warnings.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "cdfqa/engine.hpp"
#include "cdfqa/model.hpp"
#include "cdfqa/protocol.hpp"

using namespace cdfqa;

namespace {

ProtocolSpec lfi_spec(const std::string& pool, int layers) {
  ProtocolSpec spec;
  spec.chain = {6, 1.0, 0.4, 0.0, Boundary::periodic};
  spec.h_cd = parse_tag(pool);
  spec.alpha = 6.0;
  spec.delta_t = 0.01;
  spec.n_layers = layers;
  return spec;
}

ProtocolSpec mfi_spec(const std::string& pool, int layers) {
  ProtocolSpec spec = lfi_spec(pool, layers);
  spec.chain.field_hx = 0.4;
  return spec;
}

TraceOptions quiet() {
  TraceOptions opts;
  opts.warn = nullptr;
  return opts;
}

}  // namespace

TEST_CASE("first feedback layer reproduces the pinned closed-form fields") {
  const ProtocolTrace trace = run_protocol(lfi_spec("Y", 1));
  REQUIRE(trace.rows.size() == 2);
  // On the uniform start the sum-of-X field vanishes and the sum-of-Y field
  // is alpha * (2 h_z) * (-1) at h_z = 0.4, independent of size.
  REQUIRE(trace.rows[1].beta_k == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(trace.rows[1].gamma_k == Catch::Approx(-4.8).margin(1e-12));
}

TEST_CASE("layer zero is a conventional row with the initial energy") {
  const ProtocolTrace trace = run_protocol(lfi_spec("Y", 3));
  const LayerRecord& first = trace.rows[0];
  REQUIRE(first.layer_k == 0);
  REQUIRE(first.beta_k == 0.0);
  REQUIRE(first.gamma_k == 0.0);
  REQUIRE(first.energy == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(trace.ground_energy == Catch::Approx(-8.4).margin(1e-9));
  REQUIRE(first.e_p == Catch::Approx(1.4).margin(1e-12));
  for (std::size_t k = 0; k < trace.rows.size(); ++k)
    REQUIRE(trace.rows[k].layer_k == static_cast<int>(k));
}

TEST_CASE("protocol validation rejects degenerate parameters") {
  ProtocolSpec spec = lfi_spec("Y", 10);
  SECTION("alpha") {
    spec.alpha = 0.0;
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
  }
  SECTION("delta_t") {
    spec.delta_t = -0.01;
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
  }
  SECTION("layers") {
    spec.n_layers = 0;
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
  }
  SECTION("first control must be a plain X or Z") {
    spec.h1 = parse_tag("Y");
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
    spec.h1 = parse_tag("X+0.5*Y");
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
  }
  SECTION("chain limits propagate") {
    spec.chain.n_sites = 13;
    REQUIRE_THROWS_AS(validate_protocol(spec), domain_error);
  }
}

TEST_CASE("identity pool degenerates to the plain feedback protocol") {
  const ProtocolTrace trace = run_protocol(mfi_spec("I", 30));
  bool beta_moved = false;
  for (const LayerRecord& row : trace.rows) {
    REQUIRE(row.gamma_k == 0.0);
    if (std::abs(row.beta_k) > 1e-6) beta_moved = true;
  }
  REQUIRE(beta_moved);
  REQUIRE(trace.rows.back().energy < trace.rows.front().energy);
}

TEST_CASE("energy descends monotonically in the small-step regime") {
  const ProtocolTrace trace = run_protocol(mfi_spec("Y", 50));
  for (std::size_t k = 1; k < trace.rows.size(); ++k)
    REQUIRE(trace.rows[k].energy <= trace.rows[k - 1].energy + 1e-9);
  REQUIRE(trace.rows.back().e_p < trace.rows.front().e_p);
}

TEST_CASE("mirror-image pools produce identical traces") {
  const TraceOptions opts = quiet();
  SECTION("YZ against ZY") {
    const ProtocolTrace a = run_protocol(mfi_spec("YZ", 30), opts);
    const ProtocolTrace b = run_protocol(mfi_spec("ZY", 30), opts);
    // Energies are variationally robust; the fields amplify roundoff through
    // the feedback loop, so they only get a loose bound.
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      REQUIRE(a.rows[k].energy == Catch::Approx(b.rows[k].energy).margin(1e-9));
      REQUIRE(a.rows[k].beta_k == Catch::Approx(b.rows[k].beta_k).margin(1e-6));
      REQUIRE(a.rows[k].gamma_k ==
              Catch::Approx(b.rows[k].gamma_k).margin(1e-6));
    }
  }
  SECTION("YX against XY") {
    const ProtocolTrace a = run_protocol(mfi_spec("YX", 30), opts);
    const ProtocolTrace b = run_protocol(mfi_spec("XY", 30), opts);
    for (std::size_t k = 0; k < a.rows.size(); ++k)
      REQUIRE(a.rows[k].energy == Catch::Approx(b.rows[k].energy).margin(1e-9));
  }
}

TEST_CASE("control_fields matches the first recorded feedback row") {
  const ProtocolSpec spec = mfi_spec("YZ", 1);
  const ProtocolTrace trace = run_protocol(spec);
  const PauliSum h_p = build_ising(spec.chain);
  const PauliSum h_1 = build_operator(spec.h1, spec.chain);
  const PauliSum h_cd = build_operator(spec.h_cd, spec.chain);
  const StateVector psi = initial_state('X', spec.chain.n_sites);
  const double beta =
      control_fields(psi, h_p, h_1, spec.alpha, spec.chain.n_sites);
  const double gamma =
      control_fields(psi, h_p, h_cd, spec.alpha, spec.chain.n_sites);
  REQUIRE(beta == Catch::Approx(trace.rows[1].beta_k).margin(1e-12));
  REQUIRE(gamma == Catch::Approx(trace.rows[1].gamma_k).margin(1e-12));
}

TEST_CASE("per-site field normalization removes the size dependence") {
  std::vector<double> gammas;
  for (int n : {4, 6, 8}) {
    ProtocolSpec spec = lfi_spec("Y", 1);
    spec.chain.n_sites = n;
    gammas.push_back(run_protocol(spec).rows[1].gamma_k);
  }
  REQUIRE(gammas[0] == Catch::Approx(-4.8).margin(1e-12));
  REQUIRE(gammas[1] == Catch::Approx(gammas[0]).margin(1e-12));
  REQUIRE(gammas[2] == Catch::Approx(gammas[0]).margin(1e-12));
}

TEST_CASE("additional drive changes the dynamics only when enabled") {
  ProtocolSpec base;
  base.chain = {6, 1.0, 0.4, 0.0, Boundary::periodic};  // transverse-free
  base.h_cd = parse_tag("YZ");
  base.alpha = 6.0;
  base.delta_t = 0.01;
  base.n_layers = 50;

  const ProtocolTrace plain = run_protocol(base);
  REQUIRE_THROWS_AS(run_with_additional_term(base), std::invalid_argument);

  ProtocolSpec driven = base;
  driven.h_add_enabled = true;
  const ProtocolTrace with_drive = run_with_additional_term(driven);
  double max_diff = 0.0;
  for (std::size_t k = 0; k < plain.rows.size(); ++k)
    max_diff = std::max(max_diff, std::abs(plain.rows[k].energy -
                                           with_drive.rows[k].energy));
  REQUIRE(max_diff > 1e-6);
}

TEST_CASE("first-order product mode is exact when every block commutes") {
  ProtocolSpec spec = lfi_spec("Y", 30);
  const ProtocolTrace exact = run_protocol(spec);
  spec.mode = EvolutionMode::trotter1;
  const ProtocolTrace split = run_protocol(spec);
  for (std::size_t k = 0; k < exact.rows.size(); ++k) {
    REQUIRE(split.rows[k].energy ==
            Catch::Approx(exact.rows[k].energy).margin(1e-10));
    REQUIRE(split.rows[k].gamma_k ==
            Catch::Approx(exact.rows[k].gamma_k).margin(1e-10));
  }
}

TEST_CASE("large alpha*delta_t products raise a warning") {
  std::vector<std::string> notes;
  TraceOptions opts;
  opts.warn = [&notes](const std::string& msg) { notes.push_back(msg); };

  ProtocolSpec spec = mfi_spec("Y", 1);
  spec.delta_t = 0.04;  // alpha * dt = 0.24
  run_protocol(spec, opts);
  REQUIRE(notes.size() == 1);
  REQUIRE(notes[0].find("0.1") != std::string::npos);

  notes.clear();
  run_protocol(mfi_spec("Y", 1), opts);  // alpha * dt = 0.06
  REQUIRE(notes.empty());
}

TEST_CASE("bin weights appear only on request and sum to one") {
  ProtocolSpec spec = mfi_spec("Y", 5);
  const ProtocolTrace bare = run_protocol(spec);
  REQUIRE(bare.rows[0].bin_weights.empty());

  TraceOptions opts;
  opts.record_bins = true;
  opts.n_bins = 8;
  const ProtocolTrace binned = run_protocol(spec, opts);
  for (const LayerRecord& row : binned.rows) {
    REQUIRE(row.bin_weights.size() == 8);
    double total = 0;
    for (double w : row.bin_weights) total += w;
    REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
  }
}
