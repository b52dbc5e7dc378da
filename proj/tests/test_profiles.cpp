#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bfam/grid.hpp"
#include "bfam/profiles.hpp"

using namespace bfam;
namespace {
constexpr double pi = std::numbers::pi;
const double kBGrid[] = {-1.5, -2.0, -3.0, -5.0};
}  // namespace

TEST_CASE("lefton parameter validation and derived constants") {
  CHECK_THROWS_AS(LeftonParams(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LeftonParams(-0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LeftonParams(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LeftonParams(-3.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LeftonParams(-3.0, -1.0), std::invalid_argument);

  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(p.nu() == doctest::Approx(1.0));
  CHECK(p.k() == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-14));
  CHECK(p.weight_length() == doctest::Approx(6.0));
  for (double b : kBGrid) CHECK(LeftonParams(b, 1.0).weight_length() > 4.0);

  CHECK(lagrange_multiplier_k(-3.0, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lagrange_multiplier_k(-2.0, 1.0) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
  CHECK_THROWS_AS(lagrange_multiplier_k(-3.0, -2.0), std::invalid_argument);
}

TEST_CASE("lefton velocity profile q") {
  Grid g = make_grid(80.0, 1024);
  LeftonParams p(-3.0, 1.0, 0.0);
  const int center = g.count() / 2;
  Field q = lefton_q(g, p);
  CHECK(q[center] == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 0; i < g.count(); i += 37)
    CHECK(q[i] == doctest::Approx(1.0 / std::cosh(g.point(i))).epsilon(1e-13));

  LeftonParams p2(-3.0, 2.0, 0.0);
  CHECK(lefton_q_value(0.0, p2) == doctest::Approx(2.0));

  LeftonParams p5(-3.0, 1.0, 5.0);
  CHECK(lefton_q_value(5.0, p5) == doctest::Approx(1.0));
  CHECK(lefton_q_value(0.0, p5) == doctest::Approx(1.0 / std::cosh(5.0)).epsilon(1e-13));
}

TEST_CASE("lefton momentum profile Q and its relations") {
  Grid g = make_grid(80.0, 2048);
  LeftonParams p(-3.0, 1.0, 0.0);
  Field Q = lefton_Q(g, p);
  CHECK(Q[g.count() / 2] == doctest::Approx(2.0).epsilon(1e-14));
  for (int i = 0; i < g.count(); i += 61) {
    const double sech = 1.0 / std::cosh(g.point(i));
    CHECK(Q[i] == doctest::Approx(2.0 * sech * sech * sech).epsilon(1e-12));
  }

  // q^b Q = (1-b)/2 A^(b+1) pointwise wherever representable.
  for (double b : kBGrid) {
    for (double A : {0.5, 1.0, 2.0}) {
      LeftonParams pp(b, A, 0.0);
      const double expect = (1.0 - b) / 2.0 * std::pow(A, b + 1.0);
      for (double x : {-8.0, -3.0, -0.7, 0.0, 1.3, 6.0}) {
        const double got = std::pow(lefton_q_value(x, pp), b) * lefton_Q_value(x, pp);
        CHECK(got == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }

  // (1 - dxx) q = Q spectrally.
  Grid fine = make_grid(80.0, 4096);
  Field lhs = helmholtz_forward(fine, lefton_q(fine, p));
  Field rhs = lefton_Q(fine, p);
  double worst = 0.0;
  for (int i = 0; i < fine.count(); ++i) worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
  CHECK(worst <= 1e-8);

  // Q' closed form against the spectral derivative.
  Field qp = lefton_Q_deriv(fine, p);
  Field qps = derivative(fine, rhs, 1);
  worst = 0.0;
  for (int i = 0; i < fine.count(); ++i) worst = std::max(worst, std::abs(qp[i] - qps[i]));
  CHECK(worst <= 1e-9);
}

TEST_CASE("weight alpha closed form") {
  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(weight_alpha_value(0.0, p) == doctest::Approx(std::pow(2.0, -5.0 / 3.0)).epsilon(1e-14));
  // alpha(x) = 2^(-5/3) cosh^5 x; the ratio alpha(1)/alpha(0) is cosh^5(1)
  // = 8.7486915... (independent of the printed rounding in the design notes).
  const double ratio = weight_alpha_value(1.0, p) / weight_alpha_value(0.0, p);
  CHECK(ratio == doctest::Approx(std::pow(std::cosh(1.0), 5.0)).epsilon(1e-13));
  CHECK(ratio == doctest::Approx(8.748691553239319).epsilon(1e-12));

  // Normalized case A(1-b)/2 = 1: alpha(x*) = 1.
  LeftonParams norm(-3.0, 0.5, 1.7);
  CHECK(weight_alpha_value(1.7, norm) == doctest::Approx(1.0).epsilon(1e-14));

  // alpha * Q^(1/b+2) = 1 pointwise in the representable window.
  Grid g = make_grid(80.0, 1024);
  for (double b : kBGrid) {
    LeftonParams pp(b, 1.0, 0.0);
    for (double x : {-10.0, -4.0, 0.0, 2.0, 11.0}) {
      const double prod =
          weight_alpha_value(x, pp) * lefton_Q_power_value(x, 1.0 / b + 2.0, pp);
      CHECK(prod == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  // Overflow guard: far tails of a steep-weight lefton clamp with a flag.
  bool clamped = false;
  LeftonParams steep(-12.0, 1.0, 0.0);
  weight_alpha(g, steep, &clamped);
  CHECK(clamped);
  clamped = false;
  weight_alpha(g, p, &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("monotone weight psi_L") {
  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(weight_psi_L(0.0, p) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(weight_psi_L(1e4, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(weight_psi_L(-1e4, p) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(weight_psi_L_d1(0.0, p) == doctest::Approx(1.0 / (6.0 * pi)).epsilon(1e-13));

  // psi' <= psi and |psi'''| <= (-b/L^2) psi' across the tested regime.
  for (double b : kBGrid) {
    LeftonParams pp(b, 1.0, 0.0);
    const double L = pp.weight_length();
    bool increasing = true;
    double prev = -1.0;
    for (double x = -30.0; x <= 30.0; x += 0.25) {
      const double psi = weight_psi_L(x, pp);
      const double d1 = weight_psi_L_d1(x, pp);
      const double d3 = weight_psi_L_d3(x, pp);
      CHECK(psi > 0.0);
      CHECK(psi < 1.0);
      CHECK(d1 <= psi * (1.0 + 1e-12));
      CHECK(std::abs(d3) <= (-b / (L * L)) * d1 * (1.0 + 1e-12));
      if (psi <= prev) increasing = false;
      prev = psi;
    }
    CHECK(increasing);
  }

  // Third derivative formula against finite differences.
  const double h = 1e-3;
  for (double x : {-4.0, 0.0, 2.5}) {
    const double fd3 = (weight_psi_L(x + 2 * h, p) - 2 * weight_psi_L(x + h, p) +
                        2 * weight_psi_L(x - h, p) - weight_psi_L(x - 2 * h, p)) /
                       (2 * h * h * h);
    CHECK(weight_psi_L_d3(x, p) == doctest::Approx(fd3).epsilon(1e-5));
  }
}

TEST_CASE("test profile SQ") {
  Grid g = make_grid(80.0, 4096);
  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(profile_sq_value(0.0, p) == doctest::Approx(0.0).epsilon(1e-13));

  // int SQ = -8 pi / 3 from the sech-power integrals
  // (int Q^(1/3) = 2^(1/3) pi, int Q = pi).
  CHECK(integrate(g, profile_sq(g, p)) == doctest::Approx(-8.0 * pi / 3.0).epsilon(1e-10));

  // Nonvanishing mean for every tested b; evenness about x*.
  for (double b : kBGrid) {
    LeftonParams pp(b, 1.0, 0.4);
    CHECK(std::abs(integrate(g, profile_sq(g, pp))) > 0.1);
    for (double d : {0.5, 2.0, 5.5})
      CHECK(profile_sq_value(0.4 + d, pp) ==
            doctest::Approx(profile_sq_value(0.4 - d, pp)).epsilon(1e-12));
  }
}

TEST_CASE("localizer Phi_M") {
  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(localizer_phi_M(0.0, 0.0, 2.0, p) == doctest::Approx(18.0).epsilon(1e-13));
  CHECK(localizer_phi_M(0.0, 7.3, 2.0, p) == doctest::Approx(18.0).epsilon(1e-13));
  CHECK(localizer_phi_M(8000.0, 0.0, 2.0, p) <= 1e-6);
  CHECK(localizer_phi_M(5.0, 0.0, 1e9, p) == doctest::Approx(18.0).epsilon(1e-6));
  CHECK_THROWS_AS(localizer_phi_M(0.0, 0.0, 1.0, p), std::invalid_argument);

  // M default from the coercivity constant.
  const double M = default_localizer_scale(p, 0.01);
  CHECK(M == doctest::Approx(32.0 * 4.0 / 0.01).epsilon(1e-12));
  CHECK(default_localizer_scale(p, 1e9) == doctest::Approx(1.0));
}

TEST_CASE("peakon profile") {
  CHECK(peakon_u(0.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(peakon_u(3.0, 1.5, 2.0) == doctest::Approx(2.0));
  CHECK(peakon_u(4.0, 1.5, 2.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(peakon_u(4.0, 1.5, 2.0) == doctest::Approx(0.7357589).epsilon(1e-6));
}
