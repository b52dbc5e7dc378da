#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace bfam {

// A sampled real-valued function on a Grid, one value per grid point.
using Field = std::vector<double>;
using Spectrum = std::vector<std::complex<double>>;  // r2c half spectrum, size n/2+1

namespace detail {
class SpectralEngine;
}

// Uniform periodic grid on [-length/2, length/2) with Fourier collocation
// machinery attached. All spectral operations on fields of matching size go
// through the engine owned by the grid; the engine serializes FFT execution so
// a Grid can be shared read-only across threads.
class Grid {
 public:
  Grid(double length, int count);

  double length() const { return length_; }
  int count() const { return n_; }
  double spacing() const { return dx_; }
  double point(int i) const { return -0.5 * length_ + dx_ * i; }
  const std::vector<double>& points() const { return x_; }
  // Wavenumber of r2c bin j, j in [0, n/2].
  double wavenumber(int j) const;
  int spectrum_size() const { return n_ / 2 + 1; }

  Spectrum forward(const Field& f) const;
  Field inverse(const Spectrum& s) const;

 private:
  double length_;
  int n_;
  double dx_;
  std::vector<double> x_;
  std::shared_ptr<detail::SpectralEngine> engine_;
};

Grid make_grid(double length, int count);

// Fourier-collocation derivative of the given order (>= 1).
Field derivative(const Grid& g, const Field& f, int order);

// u with (1 - dxx) u = m, diagonal in Fourier space.
Field helmholtz_inverse(const Grid& g, const Field& m);

// m = (1 - dxx) u.
Field helmholtz_forward(const Grid& g, const Field& u);

// Rectangle-rule quadrature dx * sum(f); spectrally accurate on periodic data.
double integrate(const Grid& g, const Field& f);

// Zero all modes with index > n/3 (2/3 dealiasing rule).
Field dealias(const Grid& g, const Field& f);
void dealias_spectrum(const Grid& g, Spectrum& s);

// f(x + s) evaluated by spectral phase shift (exact for band-limited data).
Field shift(const Grid& g, const Field& f, double s);

// max(|f_first|, |f_last|) / max|f|; used for the effective-periodicity
// diagnostic (<= 1e-10 is treated as silently periodic, larger values get a
// warning attached by callers that care).
double boundary_decay_ratio(const Grid& g, const Field& f);
inline constexpr double kDecayFloor = 1e-10;

// In-place symbol application helpers on half spectra.
void apply_derivative_symbol(const Grid& g, Spectrum& s, int order);
void apply_helmholtz_inverse_symbol(const Grid& g, Spectrum& s);

bool all_finite(const Field& f);

}  // namespace bfam
