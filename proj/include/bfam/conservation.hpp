#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "bfam/grid.hpp"
#include "bfam/profiles.hpp"

namespace bfam {

// E = integral of m.
double invariant_E(const Grid& g, const Field& m);

// F1 = integral of m^(1/b). Diverges on the line for b < 0; in that case the
// truncated-domain value is still reported but flagged. `window` restricts the
// quadrature to |x| <= window (trajectory bookkeeping uses this to keep the
// sub-resolved tails out; the default covers the whole grid).
struct F1Result {
  double value;
  bool divergent;
};
F1Result invariant_F1(const Grid& g, const Field& m, double b,
                      double window = std::numeric_limits<double>::infinity(),
                      double noise_floor = 0.0);

// F2 = integral of m^(-1/b) (m_x^2 / (b^2 m^2) + 1); requires m > 0, b != 0.
// `noise_floor`, when positive, pins the credibility ramp of the tail mask
// (series bookkeeping freezes it across snapshots so the mask cannot drift).
double invariant_F2(const Grid& g, const Field& m, double b,
                    double window = std::numeric_limits<double>::infinity(),
                    double noise_floor = 0.0);

// Bottom-decile median of |m|: the resolution floor estimate used by the
// credibility ramp.
double field_noise_estimate(const Field& m);

// m_x/m and m_xx/m with spectral accuracy where m is resolved and local
// fourth-order differences below the resolution floor (the tails of
// lefton-class fields underflow the absolute spectral noise floor).
// `weight`, when given, receives a smooth [0,1] credibility factor per node:
// 1 where the sample carries coherent local structure, ramping to 0 across
// the field's own noise floor (estimated from the smallest-|m| decile), with
// hard zeros on rough samples such as wrap cliffs. Integrands multiply by it
// so that sub-resolution tails neither explode ratios nor flicker in time.
void log_derivative_ratios(const Grid& g, const Field& m, Field* r1, Field* r2,
                           Field* weight = nullptr, double noise_floor = 0.0);

// Euler-Lagrange derivative of the F2 density:
//   dF2/dm = (-1/b-2) m^(-1/b-3) m_x^2 / b^2 + (-1/b) m^(-1/b-1)
//            - (2/b^2) d/dx(m^(-1/b-2) m_x).
// At m = Q this is the constant 1/k (Q is a critical point of -E + k F2).
Field variation_F2(const Grid& g, const Field& m, double b);

// Weighted norms on the window |x - x*| <= W where alpha stays representable:
// h1_alpha = sqrt(int (f^2 + f_x^2) alpha dx), k_Z = sup |f| / Q.
struct NormPair {
  double h1_alpha;
  double k_z;
};
inline constexpr double kDefaultWindow = 12.0;
NormPair norms(const Grid& g, const Field& f, const LeftonParams& p,
               double window = kDefaultWindow);

// Unweighted H1 norm over the whole grid.
double h1_norm(const Grid& g, const Field& f);

struct InvariantSeries {
  std::vector<double> times;
  std::vector<double> E;
  std::vector<double> F1;
  std::vector<bool> F1_divergent;
  std::vector<double> F2;       // NaN where m is not positive
  std::vector<double> drift_E;  // |E(t)-E(0)| / max(|E(0)|, floor)
  std::vector<double> drift_F2;
  double frozen_noise_floor = 0.0;  // pinned from the first snapshot

  void append(const Grid& g, double t, const Field& m, double b);
  void write_csv(const std::filesystem::path& path) const;
};

inline constexpr double kDriftFloor = 1e-30;

}  // namespace bfam
