#include "qfuse/qmath.hpp"

#include <stdexcept>

namespace qfuse {

double wrap_angle(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod can round up to the period itself
  return r;
}

Mat2 Mat2::identity() {
  Mat2 out;
  out.m[0] = Complex(1.0, 0.0);
  out.m[3] = Complex(1.0, 0.0);
  return out;
}

Mat2 Mat2::outer(const Ket2& u, const Ket2& v) {
  Mat2 out;
  out.m[0] = u.plus * std::conj(v.plus);
  out.m[1] = u.plus * std::conj(v.minus);
  out.m[2] = u.minus * std::conj(v.plus);
  out.m[3] = u.minus * std::conj(v.minus);
  return out;
}

Mat2 Mat2::operator+(const Mat2& o) const {
  Mat2 out;
  for (int i = 0; i < 4; ++i) out.m[i] = m[i] + o.m[i];
  return out;
}

Mat2 Mat2::operator-(const Mat2& o) const {
  Mat2 out;
  for (int i = 0; i < 4; ++i) out.m[i] = m[i] - o.m[i];
  return out;
}

Mat2 Mat2::operator*(double s) const {
  Mat2 out;
  for (int i = 0; i < 4; ++i) out.m[i] = m[i] * s;
  return out;
}

Mat2 operator*(double s, const Mat2& m) { return m * s; }

double max_abs_entry(const Mat2& m) {
  double best = 0.0;
  for (const Complex& z : m.m) best = std::max(best, std::abs(z));
  return best;
}

std::array<double, 2> hermitian_eigenvalues(const Mat2& m) {
  const double a = m.m[0].real();
  const double d = m.m[3].real();
  const double off = std::norm(m.m[1]);
  const double mid = 0.5 * (a + d);
  const double rad = std::sqrt(0.25 * (a - d) * (a - d) + off);
  return {mid - rad, mid + rad};
}

Ket2 state_from_angles(const BlochState& angles) {
  const double half = 0.5 * angles.theta;
  const Complex phase = std::polar(1.0, angles.phi);
  return {Complex(std::cos(half), 0.0), phase * std::sin(half)};
}

Complex inner_product(const Ket2& bra, const Ket2& ket) {
  return std::conj(bra.plus) * ket.plus + std::conj(bra.minus) * ket.minus;
}

double born_probability(const Ket2& state, const Ket2& basis_state) {
  return std::norm(inner_product(basis_state, state));
}

EigenPair eigenstates(const Observable& obs) {
  const double half = 0.5 * obs.angles.theta;
  const double c = std::cos(half);
  const double s = std::sin(half);
  const Complex phase = std::polar(1.0, obs.angles.phi);
  return {Ket2{Complex(c, 0.0), phase * s}, Ket2{Complex(s, 0.0), -phase * c}};
}

Mat2 observable_matrix(const Observable& obs) {
  const EigenPair e = eigenstates(obs);
  return Mat2::outer(e.plus, e.plus) - Mat2::outer(e.minus, e.minus);
}

PovmPair povm_effects(const Observable& obs, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::domain_error("povm_effects: eta must lie in [0, 1]");
  }
  const EigenPair e = eigenstates(obs);
  const Mat2 noise = Mat2::identity() * (0.5 * eta);
  PovmPair out;
  out.e_plus = noise + Mat2::outer(e.plus, e.plus) * (1.0 - eta);
  out.e_minus = noise + Mat2::outer(e.minus, e.minus) * (1.0 - eta);
  out.eta = eta;
  return out;
}

double povm_probability(const Ket2& state, const Mat2& effect) {
  const Complex row0 = effect.m[0] * state.plus + effect.m[1] * state.minus;
  const Complex row1 = effect.m[2] * state.plus + effect.m[3] * state.minus;
  const Complex qf = std::conj(state.plus) * row0 + std::conj(state.minus) * row1;
  return qf.real();
}

double overlap_probability(double theta_m, double phi_m, double theta_s, double phi_s) {
  const double cm = std::cos(0.5 * theta_m);
  const double sm = std::sin(0.5 * theta_m);
  const double cs = std::cos(0.5 * theta_s);
  const double ss = std::sin(0.5 * theta_s);
  return cm * cm * cs * cs + sm * sm * ss * ss +
         0.5 * std::sin(theta_m) * std::sin(theta_s) * std::cos(phi_m - phi_s);
}

double unimodal_positive_prob_closed_form(const Observable& obs, const BlochState& state) {
  return overlap_probability(obs.angles.theta, obs.angles.phi, state.theta, state.phi);
}

double quantum_correlation(const Observable& a, const Observable& b) {
  const EigenPair ea = eigenstates(a);
  const EigenPair eb = eigenstates(b);
  const double pp = std::norm(inner_product(ea.plus, eb.plus));
  const double mm = std::norm(inner_product(ea.minus, eb.minus));
  const double pm = std::norm(inner_product(ea.plus, eb.minus));
  const double mp = std::norm(inner_product(ea.minus, eb.plus));
  return 0.5 * (pp + mm - pm - mp);
}

double correlation_closed_form(double theta_1, double phi_1, double theta_2, double phi_2) {
  return std::cos(theta_1) * std::cos(theta_2) +
         std::sin(theta_1) * std::sin(theta_2) * std::cos(phi_1 - phi_2);
}

double quantum_correlation_closed_form(const Observable& a, const Observable& b) {
  return correlation_closed_form(a.angles.theta, a.angles.phi, b.angles.theta, b.angles.phi);
}

double luders_sequential_prob(const Observable& first, int i, const Observable& second, int j) {
  if ((i != 1 && i != -1) || (j != 1 && j != -1)) {
    throw std::invalid_argument("luders_sequential_prob: outcomes must be +1 or -1");
  }
  const EigenPair ef = eigenstates(first);
  const EigenPair es = eigenstates(second);
  const Ket2& fi = (i == 1) ? ef.plus : ef.minus;
  const Ket2& sj = (j == 1) ? es.plus : es.minus;
  return std::norm(inner_product(sj, fi));
}

double quantum_correlation_via_luders(const Observable& a, const Observable& b) {
  double acc = 0.0;
  for (int i : {+1, -1}) {
    for (int j : {+1, -1}) {
      acc += static_cast<double>(i * j) * luders_sequential_prob(a, i, b, j);
    }
  }
  return 0.5 * acc;
}

}  // namespace qfuse
