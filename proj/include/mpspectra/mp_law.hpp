#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace mpspectra {

using complex = std::complex<double>;

/// Point z = re + i*im. Stieltjes evaluators require im > 0.
struct ComplexPoint {
  double re = 0.0;
  double im = 1.0;

  constexpr complex value() const { return {re, im}; }
  friend constexpr bool operator==(const ComplexPoint&, const ComplexPoint&) = default;
};

/// Evaluation points u + iv with u equally spaced on [-alpha, alpha] and fixed v.
struct StieltjesGrid {
  double alpha = 0.0;
  double v = 0.0;
  std::vector<ComplexPoint> points;
};

/// Builds a grid of `count` points. A single point sits at u = 0.
/// Throws DomainError unless alpha > 0, 0 < v <= 1 and count >= 1.
StieltjesGrid make_stieltjes_grid(double alpha, double v, std::size_t count);

/// Marchenko-Pastur law with ratio parameter c: absolutely continuous part on [a, b]
/// plus an atom of mass max(0, 1 - c) at the origin.
struct MPLaw {
  double c = 1.0;
  double a = 0.0;
  double b = 4.0;
  double atom_mass = 0.0;

  /// Throws DomainError for c <= 0 or non-finite c.
  static MPLaw with_ratio(double c);
};

/// ((1 - sqrt c)^2, (1 + sqrt c)^2). Throws DomainError for c <= 0.
std::pair<double, double> mp_support(double c);

/// Density of the absolutely continuous part. Zero outside [a, b] and at x = 0.
double mp_density(const MPLaw& law, double x);

/// Distribution function including the atom at 0. Right-continuous, F(b) = 1.
///
/// The continuous part is integrated with a 256-point Gauss-Legendre rule after
/// substituting x = a + (b - a) sin^2(theta), which cancels both square-root edges.
double mp_cdf(const MPLaw& law, double x);

/// Mass of the absolutely continuous part, min(1, c) analytically; computed by quadrature.
double mp_continuous_mass(const MPLaw& law);

/// Closed-form Stieltjes transform, root selected by Im(z m) >= 0.
/// Throws DomainError for z.im <= 0.
complex mp_stieltjes_closed(const MPLaw& law, ComplexPoint z);

/// Solves m = 1 / (c - 1 - z - z m) by damped iteration from m = -1/z.
///
/// Returns once |m - map(m)| <= tol. Throws ConvergenceError after 1e5 iterations,
/// DomainError for c <= 0, z.im <= 0 or tol <= 0.
complex mp_stieltjes_fixed_point(double c, ComplexPoint z, double tol);

/// |m - 1 / (c - 1 - z - z m)|.
double mp_fixed_point_residual(double c, complex z, complex m);

}  // namespace mpspectra
