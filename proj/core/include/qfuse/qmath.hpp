#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace qfuse {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to the canonical range [0, 2*pi).
double wrap_angle(double radians);

/// (theta, phi) spherical parameterization of a two-level pure state.
/// Construction wraps both angles into [0, 2*pi).
struct BlochState {
  double theta = 0.0;
  double phi = 0.0;

  BlochState() = default;
  BlochState(double theta_rad, double phi_rad)
      : theta(wrap_angle(theta_rad)), phi(wrap_angle(phi_rad)) {}
};

/// Amplitudes over the {|+>, |->} sentiment basis.
struct Ket2 {
  Complex plus{};
  Complex minus{};

  double norm_sq() const { return std::norm(plus) + std::norm(minus); }
};

/// Dense 2x2 complex matrix, row-major.
struct Mat2 {
  std::array<Complex, 4> m{};

  static Mat2 identity();
  /// |u><v|
  static Mat2 outer(const Ket2& u, const Ket2& v);

  Complex trace() const { return m[0] + m[3]; }

  Mat2 operator+(const Mat2& o) const;
  Mat2 operator-(const Mat2& o) const;
  Mat2 operator*(double s) const;
};

Mat2 operator*(double s, const Mat2& m);

/// Largest entry magnitude; handy for matrix identity checks.
double max_abs_entry(const Mat2& m);

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
std::array<double, 2> hermitian_eigenvalues(const Mat2& m);

/// Two-outcome measurement with eigenvalues +1/-1. `angles` locate the +1
/// eigenstate on the Bloch sphere; the -1 eigenstate is antipodal to it.
struct Observable {
  BlochState angles;
};

/// Unsharp two-outcome measurement,
///   e_pm = (eta/2) I + (1 - eta) |M,pm><M,pm|.
/// eta = 0 is the sharp projective measurement, eta = 1 a fair coin.
struct PovmPair {
  Mat2 e_plus;
  Mat2 e_minus;
  double eta = 0.0;
};

struct EigenPair {
  Ket2 plus;
  Ket2 minus;
};

/// |psi> = cos(theta/2)|+> + e^{i phi} sin(theta/2)|->; always unit norm.
Ket2 state_from_angles(const BlochState& angles);

/// <bra|ket>
Complex inner_product(const Ket2& bra, const Ket2& ket);

/// |<basis|state>|^2
double born_probability(const Ket2& state, const Ket2& basis_state);

/// Orthonormal eigenstates:
///   plus  = (cos(t/2),  e^{i p} sin(t/2))
///   minus = (sin(t/2), -e^{i p} cos(t/2))
EigenPair eigenstates(const Observable& obs);

/// (+1)|M,+><M,+| + (-1)|M,-><M,-|; Hermitian, traceless, squares to I.
Mat2 observable_matrix(const Observable& obs);

/// Throws std::domain_error unless eta is in [0, 1].
PovmPair povm_effects(const Observable& obs, double eta);

/// <psi|E|psi> for a Hermitian effect E.
double povm_probability(const Ket2& state, const Mat2& effect);

/// P(+) of the measurement whose +1 eigenstate sits at (theta_m, phi_m),
/// applied to the pure state (theta_s, phi_s), in closed form:
///   cos^2(tm/2) cos^2(ts/2) + sin^2(tm/2) sin^2(ts/2)
///     + (1/2) sin(tm) sin(ts) cos(pm - ps)
double overlap_probability(double theta_m, double phi_m, double theta_s, double phi_s);

/// overlap_probability on typed arguments.
double unimodal_positive_prob_closed_form(const Observable& obs, const BlochState& state);

/// Correlation of two +1/-1 observables from eigenstate overlaps:
///   (|<1+|2+>|^2 + |<1-|2->|^2 - |<1+|2->|^2 - |<1-|2+>|^2) / 2
/// Always in [-1, 1]; 1 for identical eigenbases, -1 for antipodal ones.
double quantum_correlation(const Observable& a, const Observable& b);

/// The same correlation in Bloch-angle closed form:
///   cos t1 cos t2 + sin t1 sin t2 cos(p1 - p2)
double correlation_closed_form(double theta_1, double phi_1, double theta_2, double phi_2);
double quantum_correlation_closed_form(const Observable& a, const Observable& b);

/// Probability of outcome j on `second` immediately after outcome i on
/// `first`. For pure pre-measurement states this is state-independent and
/// equals |<second,j|first,i>|^2. i and j must be +1 or -1.
double luders_sequential_prob(const Observable& first, int i, const Observable& second, int j);

/// Correlation assembled from sequential-measurement probabilities:
///   (1/2) sum_{i,j in {+1,-1}} i * j * P(i, j)
/// Agrees with quantum_correlation for every observable pair.
double quantum_correlation_via_luders(const Observable& a, const Observable& b);

}  // namespace qfuse
