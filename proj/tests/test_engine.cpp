// Dense engine checks against an independent Eigen-based oracle: initial
// states, exact and Trotterized evolution, spectra, expectations, bin weights.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cdfqa/engine.hpp"
#include "cdfqa/model.hpp"
#include "cdfqa/pauli.hpp"
#include "dense_oracle.hpp"

using namespace cdfqa;

namespace {

Eigen::MatrixXcd dense_of(const PauliString& s) {
  static const std::complex<double> iu[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::string letters;
  for (int j = 0; j < s.n_sites; ++j) letters.push_back(s.letter_at(j));
  return iu[s.phase_power] * oracle::letters_op(letters);
}

StateVector random_state(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  StateVector psi{n, Eigen::VectorXcd(std::int64_t{1} << n)};
  for (std::int64_t b = 0; b < psi.dim(); ++b)
    psi.amplitudes[b] = {g(rng), g(rng)};
  psi.amplitudes /= psi.amplitudes.norm();
  return psi;
}

SpinChainSpec chain_lfi() { return {6, 1.0, 0.4, 0.0, Boundary::periodic}; }
SpinChainSpec chain_mfi() { return {6, 1.0, 0.4, 0.4, Boundary::periodic}; }

}  // namespace

TEST_CASE("initial states match their defining rotations") {
  SECTION("Z start is the all-up basis state") {
    const StateVector psi = initial_state('Z', 4);
    REQUIRE(psi.amplitudes[0] == std::complex<double>{1.0, 0.0});
    REQUIRE(psi.amplitudes.tail(15).norm() == 0.0);
  }
  SECTION("X start equals a quarter-turn sum-of-Y rotation of all-up") {
    const int n = 5;
    SpinChainSpec spec{n, 1.0, 0.0, 0.0, Boundary::periodic};
    const PauliSum sum_y = translation_sum("Y", spec);
    const EvolutionOp rot(sum_y);
    const StateVector rotated =
        rot.apply(initial_state('Z', n), std::acos(-1.0) / 4.0);
    const StateVector plus = initial_state('X', n);
    REQUIRE((rotated.amplitudes - plus.amplitudes).norm() < 1e-10);
  }
  SECTION("only X and Z are recognized") {
    REQUIRE_THROWS_AS(initial_state('Y', 3), domain_error);
    REQUIRE_THROWS_AS(initial_state('X', 0), domain_error);
    REQUIRE_THROWS_AS(initial_state('X', 13), domain_error);
  }
}

TEST_CASE("apply_string and expectation agree with dense matrices") {
  const int n = 3;
  const StateVector psi = random_state(n, 11);
  const std::vector<PauliString> strings = {
      pauli_word("Y", 1, n),
      pauli_word("XZ", 2, n),       // wraps the seam
      pauli_word("ZYX", 0, n),
      make_string(n, 0b101, 0b011, 3),
  };
  for (const PauliString& s : strings) {
    const Eigen::VectorXcd via_bits = apply_string(s, psi.amplitudes);
    const Eigen::VectorXcd via_dense = dense_of(s) * psi.amplitudes;
    REQUIRE((via_bits - via_dense).norm() < 1e-13);
  }

  PauliSum h(n);
  h.add_word("ZZ", 0, -1.3);
  h.add_word("Y", 2, 0.7);
  h.add_word("XZ", 1, 0.25);
  Eigen::MatrixXcd hd = Eigen::MatrixXcd::Zero(8, 8);
  hd += -1.3 * dense_of(pauli_word("ZZ", 0, n));
  hd += 0.7 * dense_of(pauli_word("Y", 2, n));
  hd += 0.25 * dense_of(pauli_word("XZ", 1, n));
  const std::complex<double> want =
      (psi.amplitudes.adjoint() * hd * psi.amplitudes)(0);
  REQUIRE(std::abs(expectation(psi, h) - want) < 1e-13);
  REQUIRE(real_expectation(psi, h) == Catch::Approx(want.real()).margin(1e-13));
  REQUIRE((to_dense(h) - hd).norm() < 1e-13);
}

TEST_CASE("real_expectation rejects a complex-valued result") {
  const StateVector plus = initial_state('X', 2);
  PauliSum skew(2);
  skew.add(pauli_word("X", 0, 2), {0.0, 1.0});  // i*X has expectation i here
  REQUIRE_THROWS_AS(real_expectation(plus, skew), domain_error);
}

TEST_CASE("ground energies reproduce pinned values and the dense oracle") {
  SECTION("longitudinal chain is exactly -8.4 at six sites") {
    const Spectrum sp = diagonalize(build_ising(chain_lfi()));
    REQUIRE(sp.ground_energy() == Catch::Approx(-8.4).margin(1e-9));
    const double want =
        oracle::ground_energy(oracle::ising(6, 1.0, 0.4, 0.0, true));
    REQUIRE(sp.ground_energy() == Catch::Approx(want).margin(1e-10));
  }
  SECTION("mixed-field chain matches the frozen eigenvalue") {
    const Spectrum sp = diagonalize(build_ising(chain_mfi()));
    REQUIRE(sp.ground_energy() ==
            Catch::Approx(-8.600589212539).margin(1e-9));
    REQUIRE(sp.eigenvalues[1] - sp.eigenvalues[0] ==
            Catch::Approx(4.357461).margin(1e-5));
    const double want =
        oracle::ground_energy(oracle::ising(6, 1.0, 0.4, 0.4, true));
    REQUIRE(sp.ground_energy() == Catch::Approx(want).margin(1e-10));
  }
  SECTION("uniform superposition sees only the transverse field") {
    const StateVector plus = initial_state('X', 6);
    REQUIRE(real_expectation(plus, build_ising(chain_mfi())) ==
            Catch::Approx(-2.4).margin(1e-12));
  }
}

TEST_CASE("diagonalize guards its inputs") {
  PauliSum skew(2);
  skew.add(pauli_word("Z", 0, 2), {0.0, 1.0});
  REQUIRE_THROWS_AS(diagonalize(skew), std::invalid_argument);
}

TEST_CASE("exact evolution is unitary and stationary on eigenstates") {
  const PauliSum h = build_ising(chain_mfi());
  const EvolutionOp op(h);

  SECTION("eigenstates only pick up a phase") {
    StateVector gs{6, op.spectrum().eigenvectors.col(0)};
    const double e_before = real_expectation(gs, h);
    const StateVector moved = op.apply(gs, 0.37);
    const std::complex<double> overlap =
        (gs.amplitudes.adjoint() * moved.amplitudes)(0);
    REQUIRE(std::abs(std::abs(overlap) - 1.0) < 1e-12);
    REQUIRE(real_expectation(moved, h) ==
            Catch::Approx(e_before).margin(1e-10));
  }
  SECTION("forward then backward is the identity") {
    const StateVector psi = random_state(6, 23);
    const StateVector back = op.apply(op.apply(psi, 0.81), -0.81);
    REQUIRE((back.amplitudes - psi.amplitudes).norm() < 1e-10);
  }
  SECTION("zero scale is a no-op") {
    const StateVector psi = random_state(6, 29);
    const StateVector same = op.apply(psi, 0.0);
    REQUIRE((same.amplitudes - psi.amplitudes).norm() == 0.0);
  }
  SECTION("matrix form agrees with the dense oracle exponential") {
    const Eigen::MatrixXcd want =
        oracle::expm_herm(oracle::ising(6, 1.0, 0.4, 0.4, true), 0.21);
    REQUIRE((op.matrix(0.21) - want).norm() < 1e-10);
  }
}

TEST_CASE("norm survives long alternating evolution chains") {
  const EvolutionOp u_p(build_ising(chain_mfi()));
  SpinChainSpec spec = chain_mfi();
  const EvolutionOp u_1(translation_sum("X", spec));
  const EvolutionOp u_cd(translation_sum("Y", spec));
  StateVector psi = initial_state('X', 6);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  for (int k = 0; k < 40; ++k) {
    u_p.apply_in_place(psi, 0.01);
    u_1.apply_in_place(psi, amp(rng) * 0.01);
    u_cd.apply_in_place(psi, amp(rng) * 0.01);
    REQUIRE(std::abs(psi.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("first-order product evolution") {
  SECTION("single term equals its dense exponential") {
    const int n = 3;
    const StateVector psi = random_state(n, 41);
    for (const char* word : {"Z", "ZZ", "YX"}) {
      PauliSum h(n);
      h.add_word(word, 1, -0.6);
      const auto order = trotter_order(h);
      const StateVector stepped = evolve_trotter1(psi, h, 0.33, order);
      const Eigen::MatrixXcd u = oracle::expm_herm(
          -0.6 * dense_of(pauli_word(word, 1, n)), 0.33);
      REQUIRE((stepped.amplitudes - u * psi.amplitudes).norm() < 1e-12);
    }
  }
  SECTION("commuting terms make the product exact") {
    const PauliSum h = build_ising(chain_lfi());  // diagonal: ZZ and Z only
    const EvolutionOp exact(h);
    const auto order = trotter_order(h);
    const StateVector psi = random_state(6, 43);
    const StateVector a = exact.apply(psi, 0.17);
    const StateVector b = evolve_trotter1(psi, h, 0.17, order);
    REQUIRE((a.amplitudes - b.amplitudes).norm() < 1e-12);
  }
  SECTION("product of the ordered term exponentials is reproduced") {
    const PauliSum h = build_ising(chain_mfi());
    const auto order = trotter_order(h);
    const StateVector psi = random_state(6, 47);
    Eigen::VectorXcd v = psi.amplitudes;
    for (const auto& key : order) {
      const PauliString s = h.string_for(key);
      const double c = h.terms().at(key).real();
      v = oracle::expm_herm(c * dense_of(s), 0.05) * v;
    }
    const StateVector got = evolve_trotter1(psi, h, 0.05, order);
    REQUIRE((got.amplitudes - v).norm() < 1e-11);
  }
  SECTION("term order is bonds, then Z fields, then X fields") {
    SpinChainSpec spec{5, 1.0, 0.4, 0.4, Boundary::periodic};
    const PauliSum h = build_ising(spec);
    const auto order = trotter_order(h);
    REQUIRE(order.size() == 15);
    std::vector<std::string> words;
    std::vector<int> anchors;
    for (const auto& k : order) {
      const AnchoredPattern ap = anchored_pattern(h.string_for(k));
      words.push_back(ap.word);
      anchors.push_back(ap.anchor);
    }
    for (int i = 0; i < 5; ++i) {
      REQUIRE(words[i] == "ZZ");
      REQUIRE(anchors[i] == i);
      REQUIRE(words[5 + i] == "Z");
      REQUIRE(anchors[5 + i] == i);
      REQUIRE(words[10 + i] == "X");
      REQUIRE(anchors[10 + i] == i);
    }
  }
  SECTION("missing keys and non-Hermitian coefficients are rejected") {
    PauliSum h(2);
    h.add_word("Z", 0, 1.0);
    PauliSum other(2);
    other.add_word("X", 0, 1.0);
    StateVector psi = initial_state('X', 2);
    REQUIRE_THROWS_AS(
        evolve_trotter1_in_place(psi, h, 0.1, trotter_order(other)),
        std::invalid_argument);
    PauliSum skew(2);
    skew.add(pauli_word("Z", 0, 2), {0.5, 0.5});
    REQUIRE_THROWS_AS(
        evolve_trotter1_in_place(psi, skew, 0.1, trotter_order(skew)),
        std::invalid_argument);
  }
}

TEST_CASE("bin weights partition spectral probability") {
  SECTION("all weight on the ground state lands in the first bin") {
    const Spectrum sp = diagonalize(build_ising(chain_mfi()));
    const StateVector gs{6, sp.eigenvectors.col(0)};
    const std::vector<double> bins = energy_bins(gs, sp, 8, 2.0);
    REQUIRE(bins.size() == 8);
    REQUIRE(bins[0] == Catch::Approx(1.0).margin(1e-12));
    double total = 0;
    for (double b : bins) total += b;
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("near-degenerate levels share a bin and overflow clamps") {
    Eigen::VectorXd evals(4);
    evals << 0.0, 1e-10, 2.5, 100.0;
    const std::vector<double> probs = {0.25, 0.25, 0.25, 0.25};
    const std::vector<double> bins =
        bins_from_probabilities(probs, evals, 3, 1.0);
    REQUIRE(bins[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(bins[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(bins[2] == Catch::Approx(0.5).margin(1e-12));
  }
  SECTION("window sum is conserved for a generic state") {
    const Spectrum sp = diagonalize(build_ising(chain_mfi()));
    const StateVector psi = random_state(6, 53);
    const std::vector<double> bins = energy_bins(psi, sp, 8, 2.0);
    double total = 0;
    for (double b : bins) total += b;
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("degenerate inputs are rejected") {
    Eigen::VectorXd evals(2);
    evals << 0.0, 1.0;
    REQUIRE_THROWS_AS(bins_from_probabilities({0.5, 0.5}, evals, 0, 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(bins_from_probabilities({0.5, 0.5}, evals, 4, 0.0),
                      std::invalid_argument);
  }
}
