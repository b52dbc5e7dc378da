#include "bfam/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bfam/io.hpp"
#include "bfam/version.hpp"

namespace bfam {

bool SimConfig::positivity_guard_resolved() const {
  switch (positivity_guard) {
    case Guard::on: return true;
    case Guard::off: return false;
    case Guard::auto_default: return form == FlowForm::momentum && b < -1.0;
  }
  return false;
}

void SimConfig::validate() const {
  if (!(length > 0.0)) throw std::invalid_argument("config: length must be positive");
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("config: n must be even and >= 8");
  if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
  if (!(t_final > 0.0)) throw std::invalid_argument("config: T must be positive");
  if (snapshot_stride < 1) throw std::invalid_argument("config: stride must be >= 1");
  if (form == FlowForm::linearized && !(b < -1.0))
    throw std::invalid_argument("config: linearized form requires b < -1");
  if (initial.kind == InitialKind::lefton || initial.kind == InitialKind::lefton_perturbed) {
    if (!(b < -1.0)) throw std::invalid_argument("config: lefton initial data requires b < -1");
  }
}

Field rhs_momentum(const Grid& g, const Field& m, double b, bool deal, double* max_u_out) {
  if (!all_finite(m)) throw std::invalid_argument("rhs_momentum: non-finite input");
  Spectrum mh = g.forward(m);
  if (deal) dealias_spectrum(g, mh);
  Spectrum uh = mh;
  apply_helmholtz_inverse_symbol(g, uh);
  Spectrum uxh = uh;
  apply_derivative_symbol(g, uxh, 1);
  Spectrum mxh = mh;
  apply_derivative_symbol(g, mxh, 1);
  const Field u = g.inverse(uh);
  const Field ux = g.inverse(uxh);
  const Field mx = g.inverse(mxh);
  const Field md = deal ? g.inverse(mh) : m;
  if (max_u_out) {
    double mx_u = 0.0;
    for (double v : u) mx_u = std::max(mx_u, std::abs(v));
    *max_u_out = mx_u;
  }
  Field s(m.size());
  for (size_t i = 0; i < m.size(); ++i) s[i] = -(u[i] * mx[i] + b * ux[i] * md[i]);
  Spectrum sh = g.forward(s);
  if (deal) dealias_spectrum(g, sh);
  return g.inverse(sh);
}

Field rhs_velocity(const Grid& g, const Field& u, double b, bool deal, double* max_u_out) {
  if (!all_finite(u)) throw std::invalid_argument("rhs_velocity: non-finite input");
  Spectrum uh = g.forward(u);
  if (deal) dealias_spectrum(g, uh);
  Spectrum uxh = uh;
  apply_derivative_symbol(g, uxh, 1);
  const Field ud = deal ? g.inverse(uh) : u;
  const Field ux = g.inverse(uxh);
  if (max_u_out) {
    double mx_u = 0.0;
    for (double v : ud) mx_u = std::max(mx_u, std::abs(v));
    *max_u_out = mx_u;
  }
  Field quad(u.size());
  Field adv(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    quad[i] = 0.5 * b * ud[i] * ud[i] + 0.5 * (3.0 - b) * ux[i] * ux[i];
    adv[i] = ud[i] * ux[i];
  }
  Spectrum qh = g.forward(quad);
  apply_helmholtz_inverse_symbol(g, qh);
  apply_derivative_symbol(g, qh, 1);
  if (deal) dealias_spectrum(g, qh);
  const Field nonlocal = g.inverse(qh);
  Spectrum ah = g.forward(adv);
  if (deal) dealias_spectrum(g, ah);
  const Field advd = g.inverse(ah);
  Field out(u.size());
  for (size_t i = 0; i < u.size(); ++i) out[i] = -advd[i] - nonlocal[i];
  return out;
}

Field rhs_linearized(const Grid& g, const Field& v, const LeftonParams& p) {
  if (!all_finite(v)) throw std::invalid_argument("rhs_linearized: non-finite input");
  Spectrum vh = g.forward(v);
  Spectrum hh = vh;
  apply_helmholtz_inverse_symbol(g, hh);
  Spectrum hxh = hh;
  apply_derivative_symbol(g, hxh, 1);
  Spectrum vxh = vh;
  apply_derivative_symbol(g, vxh, 1);
  const Field h = g.inverse(hh);
  const Field hx = g.inverse(hxh);
  const Field vx = g.inverse(vxh);
  Field out(v.size());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    const double q = lefton_q_value(x, p);
    const double qp = lefton_q_deriv_value(x, p);
    const double Q = lefton_Q_value(x, p);
    const double Qp = lefton_Q_deriv_value(x, p);
    out[i] = -p.b * qp * v[i] - q * vx[i] - p.b * Q * hx[i] - Qp * h[i];
  }
  return out;
}

Field rk4_step(const Grid& g, const std::function<Field(const Field&)>& rhs,
               const Field& state, double dt) {
  (void)g;
  const size_t n = state.size();
  const Field k1 = rhs(state);
  Field tmp(n);
  for (size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k1[i];
  const Field k2 = rhs(tmp);
  for (size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k2[i];
  const Field k3 = rhs(tmp);
  for (size_t i = 0; i < n; ++i) tmp[i] = state[i] + dt * k3[i];
  const Field k4 = rhs(tmp);
  Field out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

Field make_initial(const Grid& g, const SimConfig& cfg) {
  switch (cfg.initial.kind) {
    case InitialKind::lefton: {
      const LeftonParams p = cfg.lefton_params();
      return cfg.form == FlowForm::velocity ? lefton_q(g, p) : lefton_Q(g, p);
    }
    case InitialKind::lefton_perturbed: {
      const LeftonParams p = cfg.lefton_params();
      Field f = cfg.form == FlowForm::velocity ? lefton_q(g, p) : lefton_Q(g, p);
      for (int i = 0; i < g.count(); ++i) {
        const double t = g.point(i) - cfg.initial.perturb_center;
        f[i] += cfg.initial.perturb_amp * std::exp(-log_cosh(t));
      }
      return f;
    }
    case InitialKind::peakon: {
      Field u = peakon_field(g, 0.0, cfg.initial.peakon_speed);
      return cfg.form == FlowForm::momentum ? helmholtz_forward(g, u) : u;
    }
    case InitialKind::gaussian: {
      Field u(g.count());
      for (int i = 0; i < g.count(); ++i) {
        const double r = g.point(i) / cfg.initial.gauss_width;
        u[i] = cfg.initial.gauss_amp * std::exp(-r * r);
      }
      return cfg.form == FlowForm::momentum ? helmholtz_forward(g, u) : u;
    }
    case InitialKind::custom:
      if (static_cast<int>(cfg.initial.custom_samples.size()) != g.count())
        throw std::invalid_argument("custom initial data size mismatch");
      return cfg.initial.custom_samples;
  }
  throw std::logic_error("unreachable");
}

namespace {

struct RhsFunctor {
  const Grid& g;
  const SimConfig& cfg;
  LeftonParams* lefton = nullptr;  // set for linearized form
  mutable double last_max_u = 0.0;

  Field operator()(const Field& s) const {
    double* track = cfg.cfl_check ? &last_max_u : nullptr;
    switch (cfg.form) {
      case FlowForm::momentum:
        return rhs_momentum(g, s, cfg.b, cfg.dealias_products, track);
      case FlowForm::velocity:
        return rhs_velocity(g, s, cfg.b, cfg.dealias_products, track);
      case FlowForm::linearized:
        return rhs_linearized(g, s, *lefton);
    }
    throw std::logic_error("unreachable");
  }
};

}  // namespace

Trajectory evolve(const SimConfig& cfg) {
  cfg.validate();
  const Grid g(cfg.length, cfg.n);
  return evolve(cfg, make_initial(g, cfg));
}

Trajectory evolve(const SimConfig& cfg, const Field& initial) {
  cfg.validate();
  const Grid g(cfg.length, cfg.n);
  if (static_cast<int>(initial.size()) != cfg.n)
    throw std::invalid_argument("evolve: initial data size mismatch");
  if (!all_finite(initial)) throw std::invalid_argument("evolve: non-finite initial data");

  Trajectory traj;
  traj.config = cfg;

  LeftonParams lefton = (cfg.b < -1.0) ? cfg.lefton_params() : LeftonParams(-3.0, 1.0, 0.0);
  RhsFunctor rhs{g, cfg, &lefton};
  // Wrap by reference: rk4_step's std::function must not copy the functor,
  // or the CFL tracker would write into a discarded copy.
  auto rhs_fn = [&rhs](const Field& s) { return rhs(s); };

  Field state = cfg.dealias_products ? dealias(g, initial) : initial;

  const bool guard = cfg.positivity_guard_resolved();
  double init_scale = 0.0;
  for (double v : state) init_scale = std::max(init_scale, std::abs(v));
  const double ceiling = std::max(init_scale, 1.0) * cfg.blowup_factor;

  if (boundary_decay_ratio(g, state) > kDecayFloor)
    traj.warnings.push_back("initial data is not negligible at the domain boundary");

  const long n_steps = std::lround(cfg.t_final / cfg.dt);
  const bool track_invariants = cfg.form != FlowForm::linearized;

  auto record = [&](double t, const Field& s) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    double mn = s.empty() ? 0.0 : s[0];
    for (double v : s) mn = std::min(mn, v);
    traj.positivity_min.push_back(mn);
    if (track_invariants) {
      const Field m = cfg.form == FlowForm::velocity ? helmholtz_forward(g, s) : s;
      traj.invariants.append(g, t, m, cfg.b);
    }
  };

  // Roundoff floor for the guard: tails below the FFT noise floor may carry
  // sign flips of size ~1e-16 * scale that are not dynamics.
  const double guard_floor = -1e-12 * std::max(init_scale, 1.0);
  record(0.0, state);
  if (guard && traj.positivity_min.back() <= guard_floor)
    throw GuardBreach("positivity guard: initial momentum density is not positive", 0.0,
                      traj.positivity_min.back());

  for (long step = 1; step <= n_steps; ++step) {
    state = rk4_step(g, rhs_fn, state, cfg.dt);
    const double t = cfg.dt * static_cast<double>(step);

    double mn = state[0], mx_abs = 0.0;
    bool finite = true;
    for (double v : state) {
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
      mn = std::min(mn, v);
      mx_abs = std::max(mx_abs, std::abs(v));
    }
    if (!finite) throw GuardBreach("state became non-finite", t, 0.0);
    if (mx_abs > ceiling)
      throw GuardBreach("norm blow-up beyond the configured ceiling", t, mx_abs);
    if (guard && mn <= guard_floor)
      throw GuardBreach("positivity guard breached", t, mn);
    if (cfg.cfl_check && cfg.form != FlowForm::linearized && rhs.last_max_u > 0.0) {
      const double dt_max = cfg.cfl_safety * g.spacing() / rhs.last_max_u;
      if (cfg.dt > dt_max)
        throw GuardBreach("dt exceeds the CFL guard", t, dt_max);
    }

    if (step % cfg.snapshot_stride == 0 || step == n_steps) record(t, state);
  }
  return traj;
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
  io::CsvTable t;
  t.header = {"t", "diagnostic", "value"};
  auto push = [&](double time, const std::string& name, double v) {
    t.rows.push_back({io::format_double(time), name, io::format_double(v)});
  };
  for (size_t i = 0; i < times.size(); ++i) {
    push(times[i], "min_state", positivity_min[i]);
    if (!invariants.times.empty()) {
      push(times[i], "E", invariants.E[i]);
      push(times[i], "F1", invariants.F1[i]);
      push(times[i], "F2", invariants.F2[i]);
      push(times[i], "drift_E", invariants.drift_E[i]);
      push(times[i], "drift_F2", invariants.drift_F2[i]);
    }
  }
  io::write_csv(path, t);
}

void Trajectory::write_binary(const std::filesystem::path& data_path,
                              const std::filesystem::path& sidecar_path) const {
  io::write_binary_columns(data_path, states);
  nlohmann::json j;
  j["schema"] = "bfam-trajectory-v1";
  j["toolkit_version"] = kVersion;
  j["dtype"] = "float64-le";
  j["layout"] = "row-major";
  j["n_snapshots"] = states.size();
  j["n_points"] = states.empty() ? 0 : states[0].size();
  j["times"] = times;
  j["grid"] = {{"length", config.length}, {"n", config.n}};
  j["form"] = config.form == FlowForm::momentum
                  ? "momentum"
                  : (config.form == FlowForm::velocity ? "velocity" : "linearized");
  j["b"] = config.b;
  j["A"] = config.A;
  j["x_star"] = config.x_star;
  j["dt"] = config.dt;
  j["warnings"] = warnings;
  io::write_json(sidecar_path, j);
}

}  // namespace bfam
