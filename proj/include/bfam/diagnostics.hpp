#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bfam/evolution.hpp"
#include "bfam/grid.hpp"
#include "bfam/modulation.hpp"
#include "bfam/profiles.hpp"

namespace bfam {

// I(t) = int m^(-1/b) psi_L(x1) dx + (1/b^2) int m^(-1/b-2) m_x^2 psi_L(x1) dx
// with x1 = x - rho(t0) + 4b(t - t0) - x0. J_part is the second piece.
struct MonotonicityValue {
  double I = 0.0;
  double J_part = 0.0;
};
MonotonicityValue functional_I(const Grid& g, const Field& m, double rho_t0, double t,
                               double t0, double x0, const LeftonParams& p,
                               double noise_floor = 0.0);

// E(t) = int eps^2 psi_L(x + 4b(t - t0) - x0) dx.
double functional_E_eps(const Grid& g, const Field& eps, double t, double t0, double x0,
                        const LeftonParams& p);

// Residual series of the rate identity: centered-difference dI/dt against
//   -int m^(-1/b) u psi' + (1/b^2) int m^(-1/b-2) m_x^2 u psi'
//   + (2/(1-b)) int m^(-1/b+1) psi' + 4b int m^(-1/b) psi'
//   + (4/b) int m^(-1/b-2) m_x^2 psi'.
struct RateIdentitySeries {
  std::vector<double> times;       // interior snapshot times
  std::vector<double> fd_dIdt;
  std::vector<double> closed_rhs;
  std::vector<double> residual;    // |fd - rhs| / max(|rhs|, floor)
  std::vector<bool> stride_too_coarse;
  double max_residual = 0.0;
};
RateIdentitySeries rate_identity_residual(const Grid& g, const Trajectory& traj,
                                          const LeftonParams& p, double x0, double t0,
                                          double rho_t0 = 0.0);

// || m(., t) - gamma Q(. - rho) ||_{H1(x > beta t)} with a smooth cutoff over
// one grid-spacing scale. Returns 0 with `empty` set when beta t leaves the
// domain.
struct TailNorm {
  double value = 0.0;
  bool empty = false;
};
TailNorm localized_h1_tail(const Grid& g, const Field& m, double rho, double gamma,
                           double beta, double t, const LeftonParams& p);

struct Criterion {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct ExperimentReport {
  std::string name;
  std::vector<Criterion> criteria;
  std::vector<std::string> artifacts;
  bool all_pass() const;
  nlohmann::json to_json() const;
  void write_json(const std::filesystem::path& path) const;
};

// Trend surrogate for "-> 0": mean of the last quartile below 25% of the mean
// of the first quartile (plus an absolute floor for identically-zero series).
bool trend_to_zero(const std::vector<double>& series, double* last_over_first = nullptr);

struct StabilityOptions {
  SimConfig config;                   // defaults: b=-3, perturbed lefton, T=40
  std::vector<double> x0_grid = {6.0, 9.0, 12.0, 15.0};
  double beta = 1.0;
  double orbital_bound = 10.0;        // sup ||eps|| / ||eps(0)||
  double k1_bound = 100.0;            // max |rho'| / ||eps||_H1
  double exponent_rel_tol = 0.25;     // fitted decay exponent vs 1/L
  std::filesystem::path out_dir;      // empty = no artifact files
  bool svg = false;
};

StabilityOptions default_stability_options();
ExperimentReport experiment_stability(const StabilityOptions& opts);

struct RegimesOptions {
  double length = 80.0;
  int n = 4096;
  double gauss_amp = 1.0;
  double gauss_width = 5.0;
  double t_peakon = 60.0;   // b = 2 run
  double t_ramp = 40.0;     // b = 0 run
  double t_lefton = 40.0;   // b = -3 run
  double dt = 2e-3;
  int snapshot_stride = 500;
  std::filesystem::path out_dir;
  bool svg = false;
};

ExperimentReport experiment_regimes(const RegimesOptions& opts);

// Peak census helpers (exposed for tests).
struct Peak {
  int index;
  double x;
  double height;
  double prominence;
};
std::vector<Peak> find_peaks(const Grid& g, const Field& u, double min_prominence_ratio);

}  // namespace bfam
