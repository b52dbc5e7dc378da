#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bfam/evolution.hpp"
#include "bfam/grid.hpp"
#include "bfam/profiles.hpp"

namespace bfam {

// One frame of the decomposition m(. + rho, t) = (1 + a) Q + eps. The two
// orthogonality conditions pair eps against the L2_alpha Riesz representatives
// of the translation and F2 differentials, i.e. int eps Q' dx = 0 and
// int eps dx = 0; the literal alpha-weighted products diverge on the line for
// H1-class residuals, so this regularized pairing is the well-defined form.
struct ModulationFrame {
  double t = 0.0;
  double rho = 0.0;
  double a = 0.0;
  Field eps;
  double eps_h1_alpha = 0.0;  // windowed weighted norm
  double eps_h1 = 0.0;        // plain H1 over the grid
  double eps_kz = 0.0;
  double res_orth_qprime = 0.0;
  double res_orth_f2prime = 0.0;
  int newton_iterations = 0;
};

struct OutOfNeighborhood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecomposeOptions {
  double window = 12.0;  // window for the reported weighted norms only
  int max_iterations = 50;
  double damping = 0.5;       // applied to the first Newton steps
  double rho_hint = 0.0;      // warm start; used when use_hint is true
  bool use_hint = false;
};

// Solve the two orthogonality conditions for (rho, a) by damped Newton,
// seeded by cross-correlation with Q and amplitude matching. F2'(Q) is
// evaluated through conservation::variation_F2 at run time, not hard-coded
// to 1/k, so a regression in the critical-point property surfaces here.
ModulationFrame decompose(const Grid& g, const Field& m, const LeftonParams& p,
                          const DecomposeOptions& opts = {});

struct ModulationSeries {
  std::vector<ModulationFrame> frames;
  std::vector<double> rho_rate;   // centered differences; NaN at the ends
  double k1_ratio_max = 0.0;      // max |rho'| / ||eps||_H1 over interior frames

  void write_csv(const std::filesystem::path& path) const;
};

ModulationSeries modulation_series(const Grid& g, const Trajectory& traj,
                                   const LeftonParams& p,
                                   const DecomposeOptions& opts = {});

}  // namespace bfam
