#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfam/conservation.hpp"
#include "bfam/grid.hpp"
#include "bfam/profiles.hpp"

namespace bfam {

enum class FlowForm { momentum, velocity, linearized };

struct InitialKind {
  enum Kind { lefton, lefton_perturbed, peakon, gaussian, custom } kind = lefton;
  double perturb_amp = 1e-2;     // lefton_perturbed: amp * sech(x - center)
  double perturb_center = 2.0;
  double gauss_amp = 1.0;        // gaussian: amp * exp(-x^2 / width^2)
  double gauss_width = 5.0;
  double peakon_speed = 1.0;
  Field custom_samples;
};

struct SimConfig {
  double b = -3.0;
  double A = 1.0;
  double x_star = 0.0;
  double length = 80.0;
  int n = 4096;
  double dt = 1e-3;
  double t_final = 10.0;
  int snapshot_stride = 100;
  double cfl_safety = 0.5;
  bool cfl_check = true;
  bool dealias_products = true;
  // Positivity guard: required by the lefton-regime theory (m > 0). Default
  // resolves to ON for momentum-form runs with b < -1, OFF otherwise.
  enum class Guard { auto_default, on, off } positivity_guard = Guard::auto_default;
  double blowup_factor = 1e6;  // halt when max|state| exceeds factor * initial scale
  FlowForm form = FlowForm::momentum;
  InitialKind initial;
  unsigned seed = 0;  // echoed into run metadata; no randomness inside evolve

  LeftonParams lefton_params() const { return LeftonParams(b, A, x_star); }
  bool positivity_guard_resolved() const;
  void validate() const;
};

struct GuardBreach : std::runtime_error {
  GuardBreach(const std::string& what, double time_, double value_)
      : std::runtime_error(what), time(time_), value(value_) {}
  double time;
  double value;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  InvariantSeries invariants;       // empty for the linearized form
  std::vector<double> positivity_min;
  SimConfig config;
  std::vector<std::string> warnings;

  // Long-format CSV: t,diagnostic,value. Binary dump: row-major snapshot
  // matrix with a JSON sidecar describing the layout.
  void write_csv(const std::filesystem::path& path) const;
  void write_binary(const std::filesystem::path& data_path,
                    const std::filesystem::path& sidecar_path) const;
};

// Right-hand sides, evaluated pseudospectrally with 2/3-dealiased products.
// `max_u_out`, when given, receives max|u| of this evaluation (CFL guard).
// momentum form: m_t = -(u m_x + b u_x m), u = (1 - dxx)^{-1} m.
Field rhs_momentum(const Grid& g, const Field& m, double b, bool dealias_products = true,
                   double* max_u_out = nullptr);
// velocity form: u_t = -u u_x - dx (1-dxx)^{-1} ((b/2) u^2 + ((3-b)/2) u_x^2).
Field rhs_velocity(const Grid& g, const Field& u, double b, bool dealias_products = true,
                   double* max_u_out = nullptr);
// linearized flow around the lefton (closed form):
//   v_t = -b q' v - q v_x - b Q h_x - Q' h,  h = (1-dxx)^{-1} v.
Field rhs_linearized(const Grid& g, const Field& v, const LeftonParams& p);

// One classical RK4 step; dt may be negative (used by time-reversal checks).
Field rk4_step(const Grid& g, const std::function<Field(const Field&)>& rhs,
               const Field& state, double dt);

Field make_initial(const Grid& g, const SimConfig& cfg);

Trajectory evolve(const SimConfig& cfg);
Trajectory evolve(const SimConfig& cfg, const Field& initial);

}  // namespace bfam
