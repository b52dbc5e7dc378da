#pragma once

#include "bfam/grid.hpp"

namespace bfam {

// Parameters of a single lefton: regime parameter b < -1, amplitude A > 0 and
// center x_star. nu, the Lagrange multiplier k and the weight length L are
// derived. All closed-form profile evaluation lives here and works through
// log(cosh) so that large-|x| samples never overflow prematurely.
struct LeftonParams {
  double b;
  double A;
  double x_star;

  LeftonParams(double b_, double A_, double x_star_ = 0.0);

  double nu() const { return -(b + 1.0) / 2.0; }
  double k() const;                      // (A(1-b)/2)^(1/b+1)
  double weight_length() const { return -b + 3.0; }  // L in the psi weight
  double q_peak() const { return A; }
  double momentum_peak() const { return A * (1.0 - b) / 2.0; }
};

double lagrange_multiplier_k(double b, double A);

// Pointwise closed forms. The *_value forms take a raw coordinate; the field
// forms sample onto a grid.
double lefton_q_value(double x, const LeftonParams& p);
double lefton_Q_value(double x, const LeftonParams& p);
// Q^s for arbitrary real s, evaluated in the log domain.
double lefton_Q_power_value(double x, double s, const LeftonParams& p);
// d/dx of the profiles: q' = -nu-scaled tanh form, Q' = b Q tanh(nu(x-x*)).
double lefton_q_deriv_value(double x, const LeftonParams& p);
double lefton_Q_deriv_value(double x, const LeftonParams& p);
double tanh_centered(double x, const LeftonParams& p);  // tanh(nu(x-x*))
double sech_centered(double x, const LeftonParams& p);  // sech(nu(x-x*))

Field lefton_q(const Grid& g, const LeftonParams& p);
Field lefton_Q(const Grid& g, const LeftonParams& p);
Field lefton_Q_power(const Grid& g, double s, const LeftonParams& p);
Field lefton_Q_deriv(const Grid& g, const LeftonParams& p);

// Weight alpha = Q^(-1/b-2). Grows like a positive cosh power, so samples
// outside the representable range are clamped; `clamped` (optional) reports
// whether any clamping happened.
Field weight_alpha(const Grid& g, const LeftonParams& p, bool* clamped = nullptr);
Field weight_sqrt_alpha(const Grid& g, const LeftonParams& p, bool* clamped = nullptr);
double weight_alpha_value(double x, const LeftonParams& p);
double weight_sqrt_alpha_value(double x, const LeftonParams& p);
// alpha_x / alpha = -(2b+1) tanh(nu(x-x*)); bounded, used to keep operator
// applications in well-conditioned form.
double alpha_log_deriv_value(double x, const LeftonParams& p);

// Monotone weight psi_L(x) = (2/pi) arctan(exp(nu x / L)), L = -b+3.
double weight_psi_L(double x, const LeftonParams& p);
double weight_psi_L_d1(double x, const LeftonParams& p);
double weight_psi_L_d3(double x, const LeftonParams& p);

// Test profile SQ = (2k(1-b)/b) Q^(-1/b) + (2(b-1)/b) Q.
Field profile_sq(const Grid& g, const LeftonParams& p);
double profile_sq_value(double x, const LeftonParams& p);

// Localizer Phi_M(x) = b^2 Q(x / (M + t^2)); M > 1.
double localizer_phi_M(double x, double t, double M, const LeftonParams& p);
// M = max{1, 32A(1-b)/(lambda1 (b+1)^2), 32A(1-b)/lambda1} given an estimate
// of the coercivity constant.
double default_localizer_scale(const LeftonParams& p, double lambda1);

// Peakon u = c exp(-|x - c t|); the traveling wave of the b > 1 regime.
double peakon_u(double x, double t, double c);
Field peakon_field(const Grid& g, double t, double c);

// Numerically safe log(cosh(t)).
double log_cosh(double t);

}  // namespace bfam
