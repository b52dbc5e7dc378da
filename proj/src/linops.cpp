#include "bfam/linops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bfam/io.hpp"

namespace bfam {

namespace {

double sup_abs(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

// Ht0 = 1/4 - (b(1+2b)/4) sech^2(nu (x - x*)); the transformed potential of H.
double h_potential(double x, const LeftonParams& p) {
  const double s = sech_centered(x, p);
  return 0.25 - p.b * (1.0 + 2.0 * p.b) / 4.0 * s * s;
}

}  // namespace

double OperatorMatrix::symmetry_residual() const {
  const double scale = std::max(mat.cwiseAbs().maxCoeff(), 1e-300);
  return (mat - mat.transpose()).cwiseAbs().maxCoeff() / scale;
}

WindowGrid default_spectrum_window(const LeftonParams& p) {
  // The Poschl-Teller ladder of the transformed potential has bound states
  // decaying like exp(-(s - n) nu |x|), s = b/(b+1). The window must hold the
  // slowest of them with a > 1e3 center-to-edge drop so the discrete/continuum
  // classification stays sharp.
  const double s = p.b / (p.b + 1.0);
  const double nu = p.nu();
  double min_rate = 0.5;  // the kernel state decays like exp(-|x|/2) for every b
  for (int n = 0; s - n > 1e-9; ++n) min_rate = std::min(min_rate, (s - n) * nu);
  const double w = std::max(25.0, 11.5 / min_rate);
  int count = 1024;
  while (2.0 * w / count > 0.1) count *= 2;
  return WindowGrid{p.x_star, w, count};
}

namespace {

// Dense second-derivative matrix on the window. Fourier: circulant from the
// exact symbol on the window period; fd4: five-point stencil with values
// beyond the ends clamped to zero.
Eigen::MatrixXd second_derivative_matrix(const WindowGrid& w, Discretization disc) {
  const int n = w.count;
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  if (disc == Discretization::fourier) {
    const double period = 2.0 * w.half_width;
    std::vector<double> col(n, 0.0);
    for (int d = 0; d < n; ++d) {
      double acc = 0.0;
      for (int j = 1; j < n / 2; ++j) {
        const double kappa = 2.0 * std::numbers::pi * j / period;
        acc += -kappa * kappa * 2.0 * std::cos(2.0 * std::numbers::pi * j * d / n);
      }
      const double kny = 2.0 * std::numbers::pi * (n / 2) / period;
      acc += -kny * kny * std::cos(std::numbers::pi * d);
      col[d] = acc / n;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d2(i, j) = col[(i - j + n) % n];
  } else {
    const double h2 = w.spacing() * w.spacing();
    const double c0 = -30.0 / 12.0 / h2, c1 = 16.0 / 12.0 / h2, c2 = -1.0 / 12.0 / h2;
    for (int i = 0; i < n; ++i) {
      d2(i, i) = c0;
      if (i - 1 >= 0) d2(i, i - 1) = c1;
      if (i + 1 < n) d2(i, i + 1) = c1;
      if (i - 2 >= 0) d2(i, i - 2) = c2;
      if (i + 2 < n) d2(i, i + 2) = c2;
    }
  }
  return d2;
}

}  // namespace

OperatorMatrix assemble_H(const WindowGrid& w, const LeftonParams& p, Discretization disc) {
  OperatorMatrix op;
  op.window = w;
  op.disc = disc;
  op.tag = "H";
  const double pref = 2.0 * p.k() / (p.b * p.b);
  op.mat = -second_derivative_matrix(w, disc);
  for (int i = 0; i < w.count; ++i) op.mat(i, i) += h_potential(w.point(i), p);
  op.mat *= pref;
  // Symmetrize away roundoff so eigensolvers see an exactly symmetric matrix.
  op.mat = 0.5 * (op.mat + op.mat.transpose()).eval();
  return op;
}

OperatorMatrix assemble_L(const WindowGrid& w, const LeftonParams& p) {
  // Overflow check: alpha at the window corners must stay representable.
  const double edge = w.half_width;
  const double log_alpha_edge =
      (-1.0 / p.b - 2.0) *
      (std::log(p.momentum_peak()) + p.b / p.nu() * log_cosh(p.nu() * edge));
  if (log_alpha_edge > 690.0)
    throw std::invalid_argument("assemble_L: window exceeds the representable alpha range");

  OperatorMatrix op;
  op.window = w;
  op.disc = Discretization::fd4;  // tridiagonal Sturm-Liouville form
  op.tag = "L";
  const int n = w.count;
  const double k = p.k();
  const double dx = w.spacing();
  op.mat = Eigen::MatrixXd::Zero(n, n);
  auto t0 = [&](double x) { return 2.0 * weight_alpha_value(x, p) / (p.b * p.b); };
  for (int i = 0; i < n; ++i) {
    const double x = w.point(i);
    const double tm = t0(x - 0.5 * dx);
    const double tp = t0(x + 0.5 * dx);
    const double h0 = -2.0 * (p.b + 1.0) * weight_alpha_value(x, p) / p.b;
    op.mat(i, i) = k * ((tm + tp) / (dx * dx) + h0);
    if (i > 0) op.mat(i, i - 1) = -k * tm / (dx * dx);
    if (i + 1 < n) op.mat(i, i + 1) = -k * tp / (dx * dx);
  }
  return op;
}

namespace {

// (dx - dxxx)^{-1} on the zero-mean complement, normalized so the result
// vanishes at the domain boundary like the line inversion of decaying data.
// Callers handle any nonzero mean of the input analytically.
Field invert_dx_minus_dxxx(const Grid& g, const Field& w1) {
  Spectrum s = g.forward(w1);
  s[0] = 0.0;
  const int m = g.spectrum_size();
  for (int j = 1; j < m; ++j) {
    const double xi = g.wavenumber(j);
    if (j == m - 1) {
      s[j] = 0.0;  // Nyquist has no paired imaginary part for an odd symbol
    } else {
      s[j] /= std::complex<double>(0.0, xi * (1.0 + xi * xi));
    }
  }
  Field w2 = g.inverse(s);
  const double w2_bdry = 0.5 * (w2.front() + w2.back());
  for (double& t : w2) t -= w2_bdry;
  return w2;
}

}  // namespace

Field apply_B_of_Q(const Grid& g, const Field& v, const LeftonParams& p,
                   bool* zero_mode_flag) {
  if (!all_finite(v)) throw std::invalid_argument("apply_B_of_Q: non-finite input");
  const int n = g.count();
  const Field vx = derivative(g, v, 1);
  Field w1(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    w1[i] = p.b * lefton_Q_value(x, p) * vx[i] +
            (p.b - 1.0) * lefton_Q_deriv_value(x, p) * v[i];
  }
  const double mean_integral = integrate(g, w1);
  double l2 = 0.0;
  for (double t : w1) l2 += t * t;
  l2 = std::sqrt(l2 * g.spacing());
  if (zero_mode_flag) *zero_mode_flag = std::abs(mean_integral) > 1e-10 * (l2 + 1e-300);

  const Field w2 = invert_dx_minus_dxxx(g, w1);
  const Field w2x = derivative(g, w2, 1);
  const double mu = mean_integral / g.length();  // ramp slope of the mean part
  Field out(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    // Mean component handled analytically: K(mu 1) = mu (x + L/2), so it
    // contributes mu to the derivative and mu (x + L/2) to the value.
    const double ramp = mu * (x + 0.5 * g.length());
    out[i] = -(p.b * lefton_Q_value(x, p) * (w2x[i] + mu) +
               lefton_Q_deriv_value(x, p) * (w2[i] + ramp));
  }
  return out;
}

Field apply_BL_closed(const Grid& g, const Field& v, const LeftonParams& p) {
  const int n = g.count();
  const double k = p.k();
  const Field vx = derivative(g, v, 1);
  const Field h = helmholtz_inverse(g, v);
  const Field hx = derivative(g, h, 1);
  Field out(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    const double qm1 = lefton_Q_power_value(x, -1.0 / p.b - 1.0, p);
    const double q0 = lefton_Q_power_value(x, -1.0 / p.b, p);
    const double Qp = lefton_Q_deriv_value(x, p);
    const double Q = lefton_Q_value(x, p);
    out[i] = 2.0 * k * qm1 * Qp * v[i] - 2.0 * k * q0 * vx[i] +
             p.b * (p.b - 1.0) * Q * hx[i] + (p.b - 1.0) * Qp * h[i];
  }
  return out;
}

Field apply_LB_closed(const Grid& g, const Field& v, const LeftonParams& p) {
  const int n = g.count();
  const double k = p.k();
  const Field vx = derivative(g, v, 1);
  Field inner(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    inner[i] = p.b * lefton_Q_value(x, p) * vx[i] +
               (p.b - 1.0) * lefton_Q_deriv_value(x, p) * v[i];
  }
  const Field hinner = helmholtz_inverse(g, inner);
  Field out(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    const double qm1 = lefton_Q_power_value(x, -1.0 / p.b - 1.0, p);
    const double q0 = lefton_Q_power_value(x, -1.0 / p.b, p);
    const double Qp = lefton_Q_deriv_value(x, p);
    out[i] = -2.0 * k * q0 * vx[i] +
             2.0 * k * (1.0 - p.b) / p.b * qm1 * Qp * v[i] +
             (p.b - 1.0) * hinner[i];
  }
  return out;
}

namespace {

// H applied pseudospectrally on the full grid: (2k/b^2)(-f'' + Ht0 f).
Field apply_H_spectral(const Grid& g, const Field& f, const LeftonParams& p) {
  const Field fxx = derivative(g, f, 2);
  const double pref = 2.0 * p.k() / (p.b * p.b);
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i)
    out[i] = pref * (-fxx[i] + h_potential(g.point(i), p) * f[i]);
  return out;
}

}  // namespace

Field apply_L_via_H(const Grid& g, const Field& v, const LeftonParams& p) {
  Field z(g.count());
  for (int i = 0; i < g.count(); ++i) z[i] = weight_sqrt_alpha_value(g.point(i), p) * v[i];
  const Field hz = apply_H_spectral(g, z, p);
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) out[i] = weight_sqrt_alpha_value(g.point(i), p) * hz[i];
  return out;
}

Field compose_B_of_Q_after_L(const Grid& g, const Field& v, const LeftonParams& p) {
  const int n = g.count();
  // L v = sqrt(alpha) H z with z = sqrt(alpha) v; the B factors are applied in
  // product form so no alpha-weighted quantity ever enters a transform:
  //   (Lv)_x = sqrt(alpha) (beta Hz + (Hz)_x),  beta = alpha_x / (2 alpha),
  //   W1 = b (Q sqrt(alpha)) (beta Hz + (Hz)_x) + (b-1) (Q' sqrt(alpha)) Hz.
  Field z(n);
  for (int i = 0; i < n; ++i) z[i] = weight_sqrt_alpha_value(g.point(i), p) * v[i];
  const Field hz = apply_H_spectral(g, z, p);
  const Field hzx = derivative(g, hz, 1);
  Field w1(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    const double sa = weight_sqrt_alpha_value(x, p);
    const double beta = 0.5 * alpha_log_deriv_value(x, p);
    const double Qsa = lefton_Q_value(x, p) * sa;
    const double Qpsa = lefton_Q_deriv_value(x, p) * sa;
    w1[i] = p.b * Qsa * (beta * hz[i] + hzx[i]) + (p.b - 1.0) * Qpsa * hz[i];
  }
  const Field w2 = invert_dx_minus_dxxx(g, w1);
  const Field w2x = derivative(g, w2, 1);
  Field out(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    out[i] = -(p.b * lefton_Q_value(x, p) * w2x[i] +
               lefton_Q_deriv_value(x, p) * w2[i]);
  }
  return out;
}

Field compose_L_after_B_of_Q(const Grid& g, const Field& v, const LeftonParams& p) {
  const Field w = apply_B_of_Q(g, v, p);
  // L w = -(2k/b^2) alpha (w_xx + (alpha_x/alpha) w_x + b(b+1) w); the
  // bounded bracket is formed first, alpha multiplies last.
  const Field wx = derivative(g, w, 1);
  const Field wxx = derivative(g, w, 2);
  const double pref = -2.0 * p.k() / (p.b * p.b);
  Field out(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double bracket =
        wxx[i] + alpha_log_deriv_value(x, p) * wx[i] + p.b * (p.b + 1.0) * w[i];
    out[i] = pref * weight_alpha_value(x, p) * bracket;
  }
  return out;
}

double composition_residual(const Grid& g, const Field& r1, const Field& r2,
                            const LeftonParams& p, double window) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    if (std::abs(x - p.x_star) > window) continue;
    const double w = 1.0 / (1.0 + weight_alpha_value(x, p));
    num = std::max(num, std::abs(r1[i] - r2[i]) * w);
    den = std::max(den, std::abs(r1[i]) * w);
  }
  return num / std::max(den, 1e-300);
}

Field random_smooth_field(const Grid& g, const LeftonParams& p, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> center(-2.0, 2.0);
  std::uniform_real_distribution<double> width(1.0, 2.5);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  const double c1 = p.x_star + center(rng), w1 = width(rng), a1 = amp(rng);
  const double c2 = p.x_star + center(rng), w2 = width(rng), a2 = amp(rng);
  Field v(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double z = a1 * std::exp(-std::pow((x - c1) / w1, 2)) +
                     a2 * std::exp(-std::pow((x - c2) / w2, 2));
    v[i] = z / weight_sqrt_alpha_value(x, p);
  }
  return v;
}

EigenReport spectrum_H(const OperatorMatrix& op, const LeftonParams& p, int count) {
  if (op.symmetry_residual() > 1e-10)
    throw std::invalid_argument("spectrum_H expects a symmetric operator");
  const int n = op.window.count;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.mat);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd& vals = es.eigenvalues();
  const Eigen::MatrixXd& vecs = es.eigenvectors();

  auto is_discrete = [&](int idx) {
    const Eigen::VectorXd v = vecs.col(idx).cwiseAbs();
    const double mx = v.maxCoeff();
    const int band = std::max(5, n / 100);
    double edge = 0.0;
    for (int i = 0; i < band; ++i)
      edge = std::max({edge, v(i), v(n - 1 - i)});
    return mx >= 1e3 * edge;
  };

  EigenReport rep;
  rep.window = op.window;
  rep.disc = op.disc;
  const int kept = std::min(count, n);
  for (int i = 0; i < kept; ++i) {
    rep.eigenvalues.push_back(vals(i));
    rep.discrete.push_back(is_discrete(i));
  }
  rep.lambda0 = vals(0);
  rep.lambda0_expected = -p.k() * (0.5 - 0.5 / (p.b * p.b));
  rep.continuum_edge_expected = p.k() / (2.0 * p.b * p.b);

  // First non-discrete eigenvalue = discrete continuum onset.
  rep.continuum_edge = vals(n - 1);
  for (int i = 0; i < n; ++i) {
    if (!is_discrete(i)) {
      rep.continuum_edge = vals(i);
      break;
    }
  }

  // Kernel estimate: among discrete eigenvalues, the one nearest zero
  // (excluding the ground state).
  double best = std::numeric_limits<double>::max();
  int kernel_idx = -1;
  const int scan = std::min(n, std::max(kept, 16));
  for (int i = 1; i < scan; ++i) {
    if (!is_discrete(i)) continue;
    if (std::abs(vals(i)) < best) {
      best = std::abs(vals(i));
      kernel_idx = i;
    }
  }
  if (kernel_idx >= 0) rep.kernel_eigenvalue = vals(kernel_idx);

  // Overlaps with the closed-form eigenfunctions on the window nodes.
  Eigen::VectorXd ground(n), kernel(n);
  for (int i = 0; i < n; ++i) {
    const double x = op.window.point(i);
    const double sa = weight_sqrt_alpha_value(x, p);
    ground(i) = sa * lefton_Q_power_value(x, 0.5 / p.b + 1.5, p);
    kernel(i) = sa * lefton_Q_deriv_value(x, p);
  }
  ground.normalize();
  kernel.normalize();
  rep.overlap_ground = std::abs(ground.dot(vecs.col(0)));
  if (kernel_idx >= 0) rep.overlap_kernel = std::abs(kernel.dot(vecs.col(kernel_idx)));
  rep.residual_ground = (op.mat * vecs.col(0) - vals(0) * vecs.col(0)).norm();
  if (kernel_idx >= 0)
    rep.residual_kernel =
        (op.mat * vecs.col(kernel_idx) - vals(kernel_idx) * vecs.col(kernel_idx)).norm();
  return rep;
}

nlohmann::json EigenReport::to_json() const {
  nlohmann::json j;
  j["eigenvalues"] = eigenvalues;
  j["discrete"] = discrete;
  j["lambda0"] = lambda0;
  j["lambda0_expected"] = lambda0_expected;
  j["kernel_eigenvalue"] = kernel_eigenvalue;
  j["continuum_edge"] = continuum_edge;
  j["continuum_edge_expected"] = continuum_edge_expected;
  j["overlap_ground"] = overlap_ground;
  j["overlap_kernel"] = overlap_kernel;
  j["residual_ground"] = residual_ground;
  j["residual_kernel"] = residual_kernel;
  j["window"] = {{"center", window.center},
                 {"half_width", window.half_width},
                 {"count", window.count}};
  j["discretization"] = disc == Discretization::fourier ? "fourier" : "fd4";
  return j;
}

void EigenReport::write_json(const std::filesystem::path& path) const {
  io::write_json(path, to_json());
}

bool VerificationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const IdentityCheck& c) { return c.pass; });
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["b"] = b;
  j["A"] = A;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"residual", c.residual},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass},
                           {"note", c.note}});
  }
  j["all_pass"] = all_pass();
  return j;
}

void VerificationReport::write_json(const std::filesystem::path& path) const {
  io::write_json(path, to_json());
}

namespace {

// Sampled value and first two derivatives of Q^s in closed form:
//   (Q^s)'  = s b Q^s tanh,
//   (Q^s)'' = Q^s (s^2 b^2 tanh^2 + s b nu sech^2),   tanh/sech of nu(x-x*).
struct PowerSamples {
  Field v, vx, vxx;
};

PowerSamples sample_power(const Grid& g, double s, const LeftonParams& p) {
  PowerSamples out;
  out.v.resize(g.count());
  out.vx.resize(g.count());
  out.vxx.resize(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double qs = lefton_Q_power_value(x, s, p);
    const double th = tanh_centered(x, p);
    const double se = sech_centered(x, p);
    out.v[i] = qs;
    out.vx[i] = s * p.b * qs * th;
    out.vxx[i] = qs * (s * s * p.b * p.b * th * th + s * p.b * p.nu() * se * se);
  }
  return out;
}

// Same for v = dxQ = b Q tanh:
//   v'  = b Q (b tanh^2 + nu sech^2),
//   v'' = b Q tanh (b^2 tanh^2 + (3 b nu - 2 nu^2) sech^2).
PowerSamples sample_dxQ(const Grid& g, const LeftonParams& p) {
  PowerSamples out;
  out.v.resize(g.count());
  out.vx.resize(g.count());
  out.vxx.resize(g.count());
  const double nu = p.nu();
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double Q = lefton_Q_value(x, p);
    const double th = tanh_centered(x, p);
    const double se = sech_centered(x, p);
    out.v[i] = p.b * Q * th;
    out.vx[i] = p.b * Q * (p.b * th * th + nu * se * se);
    out.vxx[i] = p.b * Q * th * (p.b * p.b * th * th + (3.0 * p.b * nu - 2.0 * nu * nu) * se * se);
  }
  return out;
}

// L applied to closed-form samples through the bounded bracket
//   L v = -(2k/b^2) alpha (v'' + (alpha_x/alpha) v' + b(b+1) v),
// returning both the result and the pointwise term scale used to normalize
// kernel-type residuals.
struct BracketResult {
  Field value;
  double term_scale = 0.0;
};

BracketResult apply_L_bracket(const Grid& g, const PowerSamples& s, const LeftonParams& p,
                              double window) {
  BracketResult r;
  r.value.resize(g.count());
  const double pref = -2.0 * p.k() / (p.b * p.b);
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double a = weight_alpha_value(x, p);
    const double ld = alpha_log_deriv_value(x, p);
    const double bracket = s.vxx[i] + ld * s.vx[i] + p.b * (p.b + 1.0) * s.v[i];
    r.value[i] = pref * a * bracket;
    if (std::abs(x - p.x_star) <= window) {
      const double terms = std::abs(pref) * a *
                           (std::abs(s.vxx[i]) + std::abs(ld * s.vx[i]) +
                            std::abs(p.b * (p.b + 1.0) * s.v[i]));
      r.term_scale = std::max(r.term_scale, terms);
    }
  }
  return r;
}

// Odd profiles like sqrt(alpha) dxQ do not match across the periodic wrap
// (the jump is ~1e-8 at the default domain); a smooth taper far outside the
// comparison window keeps their transforms clean without touching the
// identity on the window.
Field tapered(const Grid& g, const Field& f, const LeftonParams& p) {
  const double r = 0.425 * g.length();
  const double w = 0.025 * g.length();
  Field out(f);
  for (int i = 0; i < g.count(); ++i) {
    const double d = g.point(i) - p.x_star;
    const double chi = 0.25 * (1.0 + std::tanh((d + r) / w)) * (1.0 + std::tanh((r - d) / w));
    out[i] *= chi;
  }
  return out;
}

double rel_sup(const Field& lhs, const Field& rhs, const Grid& g, const LeftonParams& p,
               double window) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g.count(); ++i) {
    if (std::abs(g.point(i) - p.x_star) > window) continue;
    num = std::max(num, std::abs(lhs[i] - rhs[i]));
    den = std::max(den, std::max(std::abs(lhs[i]), std::abs(rhs[i])));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace

VerificationReport verify_operator_identities(const Grid& g, const LeftonParams& p) {
  VerificationReport rep;
  rep.b = p.b;
  rep.A = p.A;
  const double k = p.k();
  const int n = g.count();
  const double W = 12.0;

  auto add = [&](const std::string& name, double residual, double tol,
                 const std::string& note = "") {
    rep.checks.push_back({name, residual, tol, residual <= tol, note});
  };

  // --- H-frame identities, applied pseudospectrally to bounded fields ---
  // ef1: H(sqrt(alpha) Q) = -((1+b)/b) sqrt(alpha) Q^(1/b+2).
  {
    Field f = lefton_Q_power(g, -0.5 / p.b, p);  // sqrt(alpha) Q
    Field lhs = apply_H_spectral(g, f, p);
    Field rhs = lefton_Q_power(g, 0.5 / p.b + 1.0, p);
    for (double& v : rhs) v *= -(1.0 + p.b) / p.b;
    add("ef1", rel_sup(lhs, rhs, g, p, W), 1e-7, "H applied spectrally");
  }
  // ef2: H(sqrt(alpha) Q^2) = (2k(1-b)/b) sqrt(alpha) Q^2 + (2(b-1)/b) sqrt(alpha) Q^(1/b+3).
  {
    Field f = lefton_Q_power(g, -0.5 / p.b + 1.0, p);
    Field lhs = apply_H_spectral(g, f, p);
    Field t2 = lefton_Q_power(g, 0.5 / p.b + 2.0, p);
    Field rhs(n);
    for (int i = 0; i < n; ++i)
      rhs[i] = 2.0 * k * (1.0 - p.b) / p.b * f[i] + 2.0 * (p.b - 1.0) / p.b * t2[i];
    add("ef2", rel_sup(lhs, rhs, g, p, W), 1e-7, "H applied spectrally");
  }
  // ef3: H((2b/(b+1)) sqrt(alpha) Q + x sqrt(alpha) dxQ) = (2k/b) sqrt(alpha) Q,
  // evaluated through H(x g) = x H g - (4k/b^2) g' with g = sqrt(alpha) dxQ,
  // which removes the unbounded factor x from the transform. The k on the
  // right-hand side follows from (ef1) plus the product rule; it reduces to
  // the unit-amplitude normalization when A(1-b)/2 = 1.
  {
    Field saQ = lefton_Q_power(g, -0.5 / p.b, p);
    Field hsaQ = apply_H_spectral(g, saQ, p);
    Field ker(n);
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      ker[i] = weight_sqrt_alpha_value(x, p) * lefton_Q_deriv_value(x, p);
    }
    Field kerx = derivative(g, tapered(g, ker, p), 1);
    Field lhs(n), rhs(n);
    for (int i = 0; i < n; ++i) {
      lhs[i] = 2.0 * p.b / (p.b + 1.0) * hsaQ[i] - 4.0 * k / (p.b * p.b) * kerx[i];
      rhs[i] = 2.0 * k / p.b * saQ[i];
    }
    add("ef3", rel_sup(lhs, rhs, g, p, W), 1e-7, "window interior via product-rule reduction");
  }
  // Kernel of H: H(sqrt(alpha) dxQ) = 0.
  {
    Field ker(n);
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      ker[i] = weight_sqrt_alpha_value(x, p) * lefton_Q_deriv_value(x, p);
    }
    ker = tapered(g, ker, p);
    Field hker = apply_H_spectral(g, ker, p);
    double scale = 0.0, num = 0.0;
    const Field kxx = derivative(g, ker, 2);
    const double pref = 2.0 * k / (p.b * p.b);
    for (int i = 0; i < n; ++i) {
      if (std::abs(g.point(i) - p.x_star) > W) continue;  // taper skirt excluded
      num = std::max(num, std::abs(hker[i]));
      scale = std::max(scale, pref * (std::abs(kxx[i]) +
                                      std::abs(h_potential(g.point(i), p) * ker[i])));
    }
    add("kernel_H", num / std::max(scale, 1e-300), 1e-7, "vs term magnitude on the window");
  }

  // --- L-frame identities through the closed-form bracket ---
  // Kernel: L(dxQ) = 0.
  {
    BracketResult r = apply_L_bracket(g, sample_dxQ(g, p), p, W);
    double num = 0.0;
    for (int i = 0; i < n; ++i)
      if (std::abs(g.point(i) - p.x_star) <= W) num = std::max(num, std::abs(r.value[i]));
    add("kernel_L", num / std::max(r.term_scale, 1e-300), 1e-7, "closed-form bracket");
  }
  // efl: L(Q^(1/(2b)+3/2)) = -k(1/2 - 1/(2b^2)) alpha Q^(1/(2b)+3/2).
  {
    const double s = 0.5 / p.b + 1.5;
    BracketResult r = apply_L_bracket(g, sample_power(g, s, p), p, W);
    Field rhs(n);
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      rhs[i] = -k * (0.5 - 0.5 / (p.b * p.b)) * weight_alpha_value(x, p) *
               lefton_Q_power_value(x, s, p);
    }
    add("efl", rel_sup(r.value, rhs, g, p, W), 1e-7, "closed-form bracket");
  }
  // L(Q^2) = SQ.
  {
    BracketResult r = apply_L_bracket(g, sample_power(g, 2.0, p), p, W);
    add("L_Q2_eq_SQ", rel_sup(r.value, profile_sq(g, p), g, p, W), 1e-7,
        "closed-form bracket");
  }
  // b Q q' + q Q' = 0 pointwise.
  {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      const double t1 = p.b * lefton_Q_value(x, p) * lefton_q_deriv_value(x, p);
      const double t2 = lefton_q_value(x, p) * lefton_Q_deriv_value(x, p);
      num = std::max(num, std::abs(t1 + t2));
      den = std::max(den, std::abs(t1));
    }
    add("bQqp_plus_qQp", num / std::max(den, 1e-300), 1e-10, "pointwise closed forms");
  }
  // LB(Q)(const) = 0.
  {
    Field ones(n, 1.0);
    Field r = apply_LB_closed(g, ones, p);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      scale = std::max(scale, std::abs(2.0 * k * (1.0 - p.b) / p.b *
                                       lefton_Q_power_value(x, -1.0 / p.b - 1.0, p) *
                                       lefton_Q_deriv_value(x, p)));
    }
    add("LB_const", sup_abs(r) / std::max(scale, 1e-300), 1e-7, "closed form (lbe)");
  }
  // B(Q) L(Q) = 0.
  {
    Field r = apply_BL_closed(g, lefton_Q(g, p), p);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.point(i);
      scale = std::max(scale, std::abs(2.0 * k *
                                       lefton_Q_power_value(x, -1.0 / p.b - 1.0, p) *
                                       lefton_Q_deriv_value(x, p) * lefton_Q_value(x, p)));
    }
    add("BL_Q", sup_abs(r) / std::max(scale, 1e-300), 1e-7, "closed form (ble)");
  }

  // --- Spectral condition: (L^{-1} SQ, SQ) = int Q^2 SQ dx < 0 ---
  {
    Field q2 = lefton_Q_power(g, 2.0, p);
    Field sq = profile_sq(g, p);
    Field prod(n);
    for (int i = 0; i < n; ++i) prod[i] = q2[i] * sq[i];
    const double direct = integrate(g, prod);

    // Independent route: solve H w = SQ / sqrt(alpha) on a window and form
    // (w, SQ/sqrt(alpha)); the kernel component of the data vanishes by parity.
    WindowGrid w = default_spectrum_window(p);
    OperatorMatrix H = assemble_H(w, p, Discretization::fourier);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.mat);
    Eigen::VectorXd data(w.count);
    for (int i = 0; i < w.count; ++i) {
      const double x = w.point(i);
      data(i) = profile_sq_value(x, p) / weight_sqrt_alpha_value(x, p);
    }
    Eigen::VectorXd coef = es.eigenvectors().transpose() * data;
    double solved = 0.0;
    for (int i = 0; i < w.count; ++i) {
      if (std::abs(es.eigenvalues()(i)) < 1e-8) continue;
      solved += coef(i) * coef(i) / es.eigenvalues()(i);
    }
    solved *= w.spacing();

    add("sc_integral_negative", direct < 0.0 ? 0.0 : 1.0, 0.5,
        "int Q^2 SQ = " + io::format_double(direct));
    add("sc_integral_routes", std::abs(direct - solved) / std::max(std::abs(direct), 1e-300),
        1e-4, "quadrature vs windowed H-solve = " + io::format_double(solved));
  }

  return rep;
}

double coercivity_estimate(const Grid& g, const LeftonParams& p, double window) {
  CoercivityOptions opts;
  opts.window = window;
  return coercivity_estimate_opts(g, p, opts);
}

double coercivity_estimate_opts(const Grid& g, const LeftonParams& p,
                                const CoercivityOptions& opts) {
  const double W = opts.window;
  int nw = opts.count > 0 ? opts.count
                          : static_cast<int>(std::lround(2.0 * W / g.spacing()));
  if (nw % 2 != 0) ++nw;
  if (nw < 16) throw std::invalid_argument("coercivity window too small");
  WindowGrid w{p.x_star, W, nw};
  const double dx = w.spacing();
  const double k = p.k();

  // Transformed frame z = sqrt(alpha) eta:
  //   (L eta, eta)        = int (2k/b^2) (z'^2 + Ht0 z^2)
  //   ||eta||_{H1_alpha}^2 = int (z' - beta z)^2 + z^2,  beta = alpha_x/(2 alpha)
  // discretized with first differences at half nodes.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nw, nw);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nw, nw);
  const double pref = 2.0 * k / (p.b * p.b);
  for (int i = 0; i < nw; ++i) {
    A(i, i) += pref * h_potential(w.point(i), p) * dx;
    B(i, i) += dx;
  }
  for (int i = 0; i + 1 < nw; ++i) {
    // (z_{i+1} - z_i)/dx contributes to A; (difference - beta * average) to B.
    const double xh = w.point(i) + 0.5 * dx;
    const double beta = 0.5 * alpha_log_deriv_value(xh, p);
    const double d = 1.0 / dx;
    // A block
    A(i, i) += pref * d;
    A(i + 1, i + 1) += pref * d;
    A(i, i + 1) -= pref * d;
    A(i + 1, i) -= pref * d;
    // B block: row vector r = [(-d - beta/2), (d - beta/2)] acting on (z_i, z_{i+1})
    const double r0 = -d - 0.5 * beta;
    const double r1 = d - 0.5 * beta;
    B(i, i) += dx * r0 * r0;
    B(i + 1, i + 1) += dx * r1 * r1;
    B(i, i + 1) += dx * r0 * r1;
    B(i + 1, i) += dx * r0 * r1;
  }

  // Plain-L2 orthogonality constraints against SQ and Q' in the z frame.
  Eigen::MatrixXd C(nw, opts.drop_sq_constraint ? 1 : 2);
  for (int i = 0; i < nw; ++i) {
    const double x = w.point(i);
    const double inv_sa = 1.0 / weight_sqrt_alpha_value(x, p);
    int col = 0;
    if (!opts.drop_sq_constraint) C(i, col++) = dx * profile_sq_value(x, p) * inv_sa;
    C(i, col) = dx * lefton_Q_deriv_value(x, p) * inv_sa;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
  Eigen::MatrixXd Qfull = qr.householderQ();
  const int ncon = static_cast<int>(C.cols());
  Eigen::MatrixXd Z = Qfull.rightCols(nw - ncon);

  Eigen::MatrixXd Ap = Z.transpose() * A * Z;
  Eigen::MatrixXd Bp = Z.transpose() * B * Z;
  Ap = 0.5 * (Ap + Ap.transpose()).eval();
  Bp = 0.5 * (Bp + Bp.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(Bp);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("coercivity: indefinite Gram matrix (window misconfigured)");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ap, Bp,
                                                                Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success)
    throw std::runtime_error("coercivity: generalized eigensolve failed");
  return ges.eigenvalues()(0);
}

}  // namespace bfam
