#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bfam/grid.hpp"
#include "bfam/profiles.hpp"

using namespace bfam;
namespace {
constexpr double pi = std::numbers::pi;

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Field& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}
}  // namespace

TEST_CASE("grid construction and basic geometry") {
  Grid g = make_grid(80.0, 8);
  CHECK(g.spacing() == doctest::Approx(10.0));
  CHECK(g.point(0) == doctest::Approx(-40.0));
  CHECK(g.point(7) == doctest::Approx(30.0));

  Grid unit = make_grid(2.0 * pi, 8);
  for (int j = 0; j <= 4; ++j) CHECK(unit.wavenumber(j) == doctest::Approx(double(j)));

  Grid fine = make_grid(80.0, 4096);
  CHECK(fine.spacing() == doctest::Approx(80.0 / 4096));

  CHECK_THROWS_AS(make_grid(80.0, 7), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(80.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(-1.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, 16), std::invalid_argument);
}

TEST_CASE("spectral derivative on band-limited and closed-form data") {
  Grid g = make_grid(80.0, 512);
  Field f(g.count()), expect(g.count());
  for (int i = 0; i < g.count(); ++i) {
    f[i] = std::sin(2.0 * pi * g.point(i) / g.length());
    expect[i] = 2.0 * pi / g.length() * std::cos(2.0 * pi * g.point(i) / g.length());
  }
  CHECK(max_abs_diff(derivative(g, f, 1), expect) <= 1e-12);

  Field c(g.count(), 3.7);
  CHECK(max_abs(derivative(g, c, 1)) <= 1e-12);
  CHECK(max_abs(derivative(g, c, 3)) <= 1e-10);

  CHECK_THROWS_AS(derivative(g, f, 0), std::invalid_argument);
  Field bad = f;
  bad[5] = std::nan("");
  CHECK_THROWS_AS(derivative(g, bad, 1), std::invalid_argument);
}

TEST_CASE("second derivative of the lefton momentum matches the closed form") {
  // Q'' = b^2 Q - (b(3b+1)/2k) Q^(1/b+2) at b=-3, A=1.
  Grid g = make_grid(80.0, 4096);
  LeftonParams p(-3.0, 1.0, 0.0);
  const double k = p.k();
  Field Q = lefton_Q(g, p);
  Field Qxx = derivative(g, Q, 2);
  Field expect(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    expect[i] = p.b * p.b * lefton_Q_value(x, p) -
                p.b * (3.0 * p.b + 1.0) / (2.0 * k) *
                    lefton_Q_power_value(x, 1.0 / p.b + 2.0, p);
  }
  CHECK(max_abs_diff(Qxx, expect) <= 1e-8);
}

TEST_CASE("derivative is linear and commutes with whole-step translations") {
  Grid g = make_grid(40.0, 256);
  Field f(g.count()), h(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    f[i] = std::exp(std::sin(2.0 * pi * x / g.length()));
    h[i] = std::cos(4.0 * pi * x / g.length());
  }
  Field lhs = derivative(g, f, 1);
  Field rhs = derivative(g, h, 1);
  Field sum(g.count());
  for (int i = 0; i < g.count(); ++i) sum[i] = 2.0 * f[i] - 0.5 * h[i];
  Field dsum = derivative(g, sum, 1);
  for (int i = 0; i < g.count(); ++i)
    CHECK(dsum[i] == doctest::Approx(2.0 * lhs[i] - 0.5 * rhs[i]).epsilon(1e-10));

  const double s = 17.0 * g.spacing();
  CHECK(max_abs_diff(derivative(g, shift(g, f, s), 1), shift(g, derivative(g, f, 1), s)) <=
        1e-10);
}

TEST_CASE("helmholtz inverse: closed forms and round trip") {
  Grid g = make_grid(80.0, 4096);
  LeftonParams p(-3.0, 1.0, 0.0);

  // m = Q gives u = q = sech at b=-3, A=1.
  Field u = helmholtz_inverse(g, lefton_Q(g, p));
  Field q = lefton_q(g, p);
  CHECK(max_abs_diff(u, q) <= 1e-10);
  const int center = g.count() / 2;
  CHECK(u[center] == doctest::Approx(1.0).epsilon(1e-10));

  Field c(g.count(), 2.5);
  CHECK(max_abs_diff(helmholtz_inverse(g, c), c) <= 1e-12);

  Field mode(g.count());
  const double xi1 = 2.0 * pi / g.length();
  for (int i = 0; i < g.count(); ++i) mode[i] = std::cos(xi1 * g.point(i));
  Field hm = helmholtz_inverse(g, mode);
  for (int i = 0; i < g.count(); i += 97)
    CHECK(hm[i] == doctest::Approx(mode[i] / (1.0 + xi1 * xi1)).epsilon(1e-12));

  // Round trip on smooth periodic data.
  Field smooth(g.count());
  for (int i = 0; i < g.count(); ++i)
    smooth[i] = std::exp(std::cos(2.0 * pi * g.point(i) / g.length()));
  Field round = helmholtz_inverse(g, helmholtz_forward(g, smooth));
  CHECK(max_abs_diff(round, smooth) / max_abs(smooth) <= 1e-10);
}

TEST_CASE("helmholtz inverse agrees with periodized-kernel convolution") {
  // Independent route: u(x) = int p_L(x - y) m(y) dy with
  // p_L(y) = cosh(L/2 - |y|) / (2 sinh(L/2)), evaluated against the heavily
  // oversampled trigonometric interpolant of m (the kernel kink forces the
  // oversampling; rectangle rule converges O(h^2) across it).
  const double L = 40.0;
  const int n = 256;
  const int over = 512;
  Grid g = make_grid(L, n);
  Field m(g.count());
  for (int i = 0; i < n; ++i) {
    const double x = g.point(i);
    m[i] = std::exp(-x * x / 9.0) + 0.3 * std::cos(2.0 * pi * x / L);
  }
  Field u = helmholtz_inverse(g, m);

  // Oversample m by zero-padding its spectrum.
  Grid fine = make_grid(L, n * over);
  Spectrum ms = g.forward(m);
  Spectrum pad(fine.spectrum_size(), {0.0, 0.0});
  for (int j = 0; j < g.spectrum_size(); ++j) pad[j] = ms[j] * double(over);
  Field mf = fine.inverse(pad);

  auto kernel = [&](double y) {
    double d = std::remainder(y, L);
    return std::cosh(0.5 * L - std::abs(d)) / (2.0 * std::sinh(0.5 * L));
  };
  double worst = 0.0;
  double scale = max_abs(u);
  for (int i = 0; i < n; i += 8) {
    double acc = 0.0;
    for (int j = 0; j < fine.count(); ++j)
      acc += kernel(g.point(i) - fine.point(j)) * mf[j];
    acc *= fine.spacing();
    worst = std::max(worst, std::abs(acc - u[i]));
  }
  CHECK(worst / scale <= 1e-8);
}

TEST_CASE("quadrature values") {
  Grid g = make_grid(80.0, 4096);
  LeftonParams p(-3.0, 1.0, 0.0);
  // int 2 sech^3 = pi.
  CHECK(integrate(g, lefton_Q(g, p)) == doctest::Approx(pi).epsilon(1e-10));
  Field z(g.count(), 0.0);
  CHECK(integrate(g, z) == 0.0);
  Field s(g.count());
  for (int i = 0; i < g.count(); ++i)
    s[i] = std::sin(2.0 * pi * g.point(i) / g.length());
  CHECK(std::abs(integrate(g, s)) <= 1e-14);
}

TEST_CASE("discrete integration by parts") {
  Grid g = make_grid(40.0, 512);
  Field f(g.count()), h(g.count());
  for (int i = 0; i < g.count(); ++i) {
    const double x = g.point(i);
    f[i] = std::exp(std::sin(2.0 * pi * x / g.length()));
    h[i] = std::cos(4.0 * pi * x / g.length()) + 0.2 * std::sin(6.0 * pi * x / g.length());
  }
  Field fx = derivative(g, f, 1);
  Field hx = derivative(g, h, 1);
  Field prod(g.count());
  for (int i = 0; i < g.count(); ++i) prod[i] = f[i] * hx[i] + h[i] * fx[i];
  CHECK(std::abs(integrate(g, prod)) <= 1e-10);
}

TEST_CASE("dealias removes the top third of the spectrum") {
  Grid g = make_grid(2.0 * pi, 48);
  Field f(g.count());
  for (int i = 0; i < g.count(); ++i)
    f[i] = std::cos(3.0 * g.point(i)) + std::cos(20.0 * g.point(i));
  Field d = dealias(g, f);
  Field expect(g.count());
  for (int i = 0; i < g.count(); ++i) expect[i] = std::cos(3.0 * g.point(i));
  CHECK(max_abs_diff(d, expect) <= 1e-12);
  CHECK(max_abs_diff(dealias(g, d), d) <= 1e-13);
}

TEST_CASE("boundary decay diagnostic") {
  Grid g = make_grid(80.0, 1024);
  LeftonParams p(-3.0, 1.0, 0.0);
  CHECK(boundary_decay_ratio(g, lefton_Q(g, p)) <= kDecayFloor);
  Field ramp(g.count());
  for (int i = 0; i < g.count(); ++i) ramp[i] = g.point(i);
  CHECK(boundary_decay_ratio(g, ramp) > kDecayFloor);
}

TEST_CASE("spectral shift is exact for band-limited fields") {
  Grid g = make_grid(80.0, 512);
  Field f(g.count());
  for (int i = 0; i < g.count(); ++i)
    f[i] = std::sin(2.0 * pi * g.point(i) / g.length()) +
           0.5 * std::cos(6.0 * pi * g.point(i) / g.length());
  const double s = 1.2345;
  Field shifted = shift(g, f, s);
  for (int i = 0; i < g.count(); i += 31) {
    const double x = g.point(i) + s;
    const double expect = std::sin(2.0 * pi * x / g.length()) +
                          0.5 * std::cos(6.0 * pi * x / g.length());
    CHECK(shifted[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}
