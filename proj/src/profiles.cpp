#include "bfam/profiles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bfam {

namespace {
constexpr double kLogClamp = 700.0;  // just below log(DBL_MAX)

double exp_clamped(double t, bool* clamped) {
  if (t > kLogClamp) {
    if (clamped) *clamped = true;
    return std::exp(kLogClamp);
  }
  return std::exp(t);
}
}  // namespace

double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

LeftonParams::LeftonParams(double b_, double A_, double x_star_)
    : b(b_), A(A_), x_star(x_star_) {
  if (!(b < -1.0)) throw std::invalid_argument("lefton requires b < -1");
  if (!(A > 0.0)) throw std::invalid_argument("lefton requires A > 0");
}

double lagrange_multiplier_k(double b, double A) {
  if (!(A > 0.0)) throw std::invalid_argument("k requires A > 0");
  if (b == 0.0) throw std::invalid_argument("k requires b != 0");
  return std::pow(A * (1.0 - b) / 2.0, 1.0 / b + 1.0);
}

double LeftonParams::k() const { return lagrange_multiplier_k(b, A); }

double tanh_centered(double x, const LeftonParams& p) {
  return std::tanh(p.nu() * (x - p.x_star));
}

double sech_centered(double x, const LeftonParams& p) {
  return std::exp(-log_cosh(p.nu() * (x - p.x_star)));
}

double lefton_q_value(double x, const LeftonParams& p) {
  const double lc = log_cosh(p.nu() * (x - p.x_star));
  return p.A * std::exp(-lc / p.nu());
}

double lefton_Q_value(double x, const LeftonParams& p) {
  const double lc = log_cosh(p.nu() * (x - p.x_star));
  return p.momentum_peak() * std::exp(p.b / p.nu() * lc);
}

double lefton_Q_power_value(double x, double s, const LeftonParams& p) {
  const double lc = log_cosh(p.nu() * (x - p.x_star));
  const double t = s * (std::log(p.momentum_peak()) + p.b / p.nu() * lc);
  return exp_clamped(t, nullptr);
}

double lefton_q_deriv_value(double x, const LeftonParams& p) {
  return -lefton_q_value(x, p) * tanh_centered(x, p);
}

double lefton_Q_deriv_value(double x, const LeftonParams& p) {
  return p.b * lefton_Q_value(x, p) * tanh_centered(x, p);
}

namespace {
Field sample(const Grid& g, const LeftonParams& p, double (*f)(double, const LeftonParams&)) {
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) out[i] = f(g.point(i), p);
  return out;
}
}  // namespace

Field lefton_q(const Grid& g, const LeftonParams& p) { return sample(g, p, lefton_q_value); }
Field lefton_Q(const Grid& g, const LeftonParams& p) { return sample(g, p, lefton_Q_value); }
Field lefton_Q_deriv(const Grid& g, const LeftonParams& p) {
  return sample(g, p, lefton_Q_deriv_value);
}

Field lefton_Q_power(const Grid& g, double s, const LeftonParams& p) {
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) out[i] = lefton_Q_power_value(g.point(i), s, p);
  return out;
}

double weight_alpha_value(double x, const LeftonParams& p) {
  return lefton_Q_power_value(x, -1.0 / p.b - 2.0, p);
}

double weight_sqrt_alpha_value(double x, const LeftonParams& p) {
  return lefton_Q_power_value(x, 0.5 * (-1.0 / p.b - 2.0), p);
}

namespace {
Field sample_power_clamped(const Grid& g, double s, const LeftonParams& p, bool* clamped) {
  if (clamped) *clamped = false;
  Field out(g.count());
  const double log_peak = std::log(p.momentum_peak());
  for (int i = 0; i < g.count(); ++i) {
    const double lc = log_cosh(p.nu() * (g.point(i) - p.x_star));
    out[i] = exp_clamped(s * (log_peak + p.b / p.nu() * lc), clamped);
  }
  return out;
}
}  // namespace

Field weight_alpha(const Grid& g, const LeftonParams& p, bool* clamped) {
  return sample_power_clamped(g, -1.0 / p.b - 2.0, p, clamped);
}

Field weight_sqrt_alpha(const Grid& g, const LeftonParams& p, bool* clamped) {
  return sample_power_clamped(g, 0.5 * (-1.0 / p.b - 2.0), p, clamped);
}

double alpha_log_deriv_value(double x, const LeftonParams& p) {
  return -(2.0 * p.b + 1.0) * tanh_centered(x, p);
}

double weight_psi_L(double x, const LeftonParams& p) {
  const double t = p.nu() * x / p.weight_length();
  if (t > kLogClamp) return 1.0;
  return 2.0 / std::numbers::pi * std::atan(std::exp(t));
}

double weight_psi_L_d1(double x, const LeftonParams& p) {
  const double L = p.weight_length();
  const double t = p.nu() * x / L;
  return p.nu() / (std::numbers::pi * L) * std::exp(-log_cosh(t));
}

double weight_psi_L_d3(double x, const LeftonParams& p) {
  const double L = p.weight_length();
  const double t = p.nu() * x / L;
  const double sech = std::exp(-log_cosh(t));
  const double tanh = std::tanh(t);
  const double c = std::pow(p.nu() / L, 3) / (std::numbers::pi);
  return c * sech * (tanh * tanh - sech * sech);
}

double profile_sq_value(double x, const LeftonParams& p) {
  const double k = p.k();
  return 2.0 * k * (1.0 - p.b) / p.b * lefton_Q_power_value(x, -1.0 / p.b, p) +
         2.0 * (p.b - 1.0) / p.b * lefton_Q_value(x, p);
}

Field profile_sq(const Grid& g, const LeftonParams& p) {
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) out[i] = profile_sq_value(g.point(i), p);
  return out;
}

double localizer_phi_M(double x, double t, double M, const LeftonParams& p) {
  if (!(M > 1.0)) throw std::invalid_argument("localizer requires M > 1");
  return p.b * p.b * lefton_Q_value(x / (M + t * t), p);
}

double default_localizer_scale(const LeftonParams& p, double lambda1) {
  if (!(lambda1 > 0.0)) throw std::invalid_argument("localizer scale needs lambda1 > 0");
  const double c = 32.0 * p.A * (1.0 - p.b) / lambda1;
  const double bp1 = (p.b + 1.0) * (p.b + 1.0);
  return std::max({1.0, c / bp1, c});
}

double peakon_u(double x, double t, double c) { return c * std::exp(-std::abs(x - c * t)); }

Field peakon_field(const Grid& g, double t, double c) {
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) out[i] = peakon_u(g.point(i), t, c);
  return out;
}

}  // namespace bfam
