#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qfuse/qmath.hpp"
#include "qfuse/rng.hpp"
#include "test_util.hpp"

using namespace qfuse;
using qfuse::testing::random_observable;
using qfuse::testing::random_state;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE("qmath") {

TEST_CASE("angle wrapping lands in [0, 2pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_angle(7.0 * kPi) == doctest::Approx(kPi));
  SplitMix64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(rng.uniform(-100.0, 100.0));
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
  }
}

TEST_CASE("state_from_angles hits the poles and the equator") {
  const Ket2 plus = state_from_angles(BlochState(0.0, 1.3));
  CHECK(plus.plus.real() == doctest::Approx(1.0));
  CHECK(std::abs(plus.minus) == doctest::Approx(0.0));

  const Ket2 minus = state_from_angles(BlochState(kPi, 0.0));
  CHECK(std::abs(minus.plus) == doctest::Approx(0.0));
  CHECK(minus.minus.real() == doctest::Approx(1.0));

  const Ket2 eq = state_from_angles(BlochState(kPi / 2.0, kPi / 2.0));
  CHECK(eq.plus.real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(eq.minus.real() == doctest::Approx(0.0));
  CHECK(eq.minus.imag() == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("states are unit norm for any angles") {
  SplitMix64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Ket2 psi = state_from_angles(random_state(rng));
    CHECK(psi.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("inner products of basis and self") {
  const Ket2 plus = state_from_angles(BlochState(0.0, 0.0));
  const Ket2 minus = state_from_angles(BlochState(kPi, 0.0));
  CHECK(inner_product(plus, plus).real() == doctest::Approx(1.0));
  CHECK(std::abs(inner_product(plus, minus)) == doctest::Approx(0.0));

  SplitMix64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Ket2 psi = state_from_angles(random_state(rng));
    CHECK(inner_product(psi, psi).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inner_product(psi, psi).imag()) < 1e-12);
  }
}

TEST_CASE("born probabilities") {
  const Ket2 plus = state_from_angles(BlochState(0.0, 0.0));
  CHECK(born_probability(state_from_angles(BlochState(kPi / 2.0, 0.0)), plus) ==
        doctest::Approx(0.5));
  CHECK(born_probability(plus, plus) == doctest::Approx(1.0));
  // The relative phase drops out against a basis vector.
  CHECK(born_probability(state_from_angles(BlochState(2.0 * kPi / 3.0, 0.7)), plus) ==
        doctest::Approx(0.25));
}

TEST_CASE("eigenstates are orthonormal and match the stated form") {
  const EigenPair e0 = eigenstates(Observable{BlochState(0.0, 0.0)});
  CHECK(e0.plus.plus.real() == doctest::Approx(1.0));
  CHECK(e0.minus.minus.real() == doctest::Approx(-1.0));  // global phase of the minus state

  const EigenPair ex = eigenstates(Observable{BlochState(kPi / 2.0, 0.0)});
  CHECK(ex.plus.plus.real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(ex.plus.minus.real() == doctest::Approx(1.0 / std::sqrt(2.0)));

  SplitMix64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const EigenPair e = eigenstates(random_observable(rng));
    CHECK(std::abs(inner_product(e.plus, e.minus)) < 1e-12);
    CHECK(e.plus.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.minus.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("observable matrices are Hermitian, traceless, and square to I") {
  const Mat2 z = observable_matrix(Observable{BlochState(0.0, 0.0)});
  CHECK(z.m[0].real() == doctest::Approx(1.0));
  CHECK(z.m[3].real() == doctest::Approx(-1.0));
  CHECK(std::abs(z.m[1]) < 1e-12);

  const Mat2 x = observable_matrix(Observable{BlochState(kPi / 2.0, 0.0)});
  CHECK(x.m[1].real() == doctest::Approx(1.0));
  CHECK(x.m[2].real() == doctest::Approx(1.0));
  CHECK(std::abs(x.m[0]) < 1e-12);

  SplitMix64 rng(15);
  for (int i = 0; i < 500; ++i) {
    const Mat2 m = observable_matrix(random_observable(rng));
    CHECK(std::abs(m.trace()) < 1e-12);
    CHECK(std::abs(m.m[1] - std::conj(m.m[2])) < 1e-12);
    // m^2 = I because the eigenvalues are +1/-1.
    Mat2 sq;
    sq.m[0] = m.m[0] * m.m[0] + m.m[1] * m.m[2];
    sq.m[1] = m.m[0] * m.m[1] + m.m[1] * m.m[3];
    sq.m[2] = m.m[2] * m.m[0] + m.m[3] * m.m[2];
    sq.m[3] = m.m[2] * m.m[1] + m.m[3] * m.m[3];
    CHECK(max_abs_entry(sq - Mat2::identity()) < 1e-12);
    const auto eig = hermitian_eigenvalues(m);
    CHECK(eig[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(eig[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("povm effects: completeness, positivity, and the eta extremes") {
  SplitMix64 rng(16);
  for (int i = 0; i < 1000; ++i) {
    const Observable obs = random_observable(rng);
    const double eta = rng.next_double();
    const PovmPair pair = povm_effects(obs, eta);
    CHECK(max_abs_entry(pair.e_plus + pair.e_minus - Mat2::identity()) < 1e-12);
    CHECK(hermitian_eigenvalues(pair.e_plus)[0] >= -1e-12);
    CHECK(hermitian_eigenvalues(pair.e_minus)[0] >= -1e-12);
    CHECK((pair.e_plus.trace() + pair.e_minus.trace()).real() == doctest::Approx(2.0));
  }

  // eta = 0: plain projectors onto the eigenstates.
  const Observable obs{BlochState(1.1, 2.2)};
  const PovmPair sharp = povm_effects(obs, 0.0);
  const EigenPair e = eigenstates(obs);
  CHECK(max_abs_entry(sharp.e_plus - Mat2::outer(e.plus, e.plus)) < 1e-12);

  // eta = 1: both effects collapse to I/2.
  const PovmPair noisy = povm_effects(obs, 1.0);
  CHECK(max_abs_entry(noisy.e_plus - Mat2::identity() * 0.5) < 1e-15);

  CHECK_THROWS_AS(povm_effects(obs, -0.1), std::domain_error);
  CHECK_THROWS_AS(povm_effects(obs, 1.1), std::domain_error);
}

TEST_CASE("povm probabilities") {
  const Observable z{BlochState(0.0, 0.0)};
  const Ket2 plus = state_from_angles(BlochState(0.0, 0.0));

  CHECK(povm_probability(plus, povm_effects(z, 1.0).e_plus) == doctest::Approx(0.5));
  CHECK(povm_probability(plus, povm_effects(z, 0.0).e_plus) == doctest::Approx(1.0));
  // eta = 0.4 on the aligned state: 0.2 + 0.6 * 1.
  CHECK(povm_probability(plus, povm_effects(z, 0.4).e_plus) == doctest::Approx(0.8));

  SplitMix64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Observable obs = random_observable(rng);
    const Ket2 psi = state_from_angles(random_state(rng));
    const PovmPair pair = povm_effects(obs, rng.next_double());
    const double p_plus = povm_probability(psi, pair.e_plus);
    const double p_minus = povm_probability(psi, pair.e_minus);
    CHECK(p_plus == doctest::Approx(p_plus));  // finite
    CHECK(p_plus >= -1e-12);
    CHECK(p_plus <= 1.0 + 1e-12);
    CHECK(p_plus + p_minus == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("projective povm matches the Born rule") {
  SplitMix64 rng(18);
  for (int i = 0; i < 1000; ++i) {
    const Observable obs = random_observable(rng);
    const Ket2 psi = state_from_angles(random_state(rng));
    const double via_povm = povm_probability(psi, povm_effects(obs, 0.0).e_plus);
    const double via_born = born_probability(psi, eigenstates(obs).plus);
    CHECK(std::abs(via_povm - via_born) < 1e-14);
  }
}

TEST_CASE("closed-form overlap probability equals the inner-product route") {
  // Collapses to cos^2(theta_m / 2) when the state sits at the pole.
  CHECK(overlap_probability(1.1, 0.4, 0.0, 0.0) ==
        doctest::Approx(std::cos(0.55) * std::cos(0.55)));
  // The state is the observable's own eigenstate.
  CHECK(overlap_probability(1.1, 0.4, 1.1, 0.4) == doctest::Approx(1.0));

  SplitMix64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const Observable obs = random_observable(rng);
    const BlochState s = random_state(rng);
    const double closed = unimodal_positive_prob_closed_form(obs, s);
    const double direct = born_probability(state_from_angles(s), eigenstates(obs).plus);
    CHECK(std::abs(closed - direct) < 1e-12);
  }
}

TEST_CASE("correlation endpoints") {
  SplitMix64 rng(20);
  for (int i = 0; i < 200; ++i) {
    const Observable a = random_observable(rng);
    CHECK(std::abs(quantum_correlation(a, a) - 1.0) < 1e-12);
    const Observable antipode{BlochState(a.angles.theta + kPi, a.angles.phi)};
    CHECK(std::abs(quantum_correlation(a, antipode) + 1.0) < 1e-12);
  }
  // Equatorial axes a quarter phase apart are uncorrelated.
  const Observable e1{BlochState(kPi / 2.0, 0.0)};
  const Observable e2{BlochState(kPi / 2.0, kPi / 2.0)};
  CHECK(std::abs(quantum_correlation(e1, e2)) < 1e-12);
}

TEST_CASE("three correlation routes agree") {
  SplitMix64 rng(21);
  for (int i = 0; i < 1000; ++i) {
    const Observable a = random_observable(rng);
    const Observable b = random_observable(rng);
    const double overlap_route = quantum_correlation(a, b);
    const double closed_route = quantum_correlation_closed_form(a, b);
    const double sequential_route = quantum_correlation_via_luders(a, b);
    CHECK(std::abs(overlap_route - closed_route) < 1e-10);
    CHECK(std::abs(overlap_route - sequential_route) < 1e-10);
    CHECK(overlap_route >= -1.0 - 1e-12);
    CHECK(overlap_route <= 1.0 + 1e-12);
  }
}

TEST_CASE("sequential measurement probabilities") {
  const Observable a{BlochState(0.7, 1.9)};
  CHECK(luders_sequential_prob(a, +1, a, +1) == doctest::Approx(1.0));
  CHECK(luders_sequential_prob(a, +1, a, -1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(luders_sequential_prob(a, 0, a, 1), std::invalid_argument);

  SplitMix64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const Observable first = random_observable(rng);
    const Observable second = random_observable(rng);
    for (int outcome : {+1, -1}) {
      const double total = luders_sequential_prob(first, outcome, second, +1) +
                           luders_sequential_prob(first, outcome, second, -1);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

}  // TEST_SUITE
