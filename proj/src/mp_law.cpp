#include "mpspectra/mp_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mpspectra/error.hpp"
#include "mpspectra/quadrature.hpp"

namespace mpspectra {

namespace {

constexpr double kFixedPointDamping = 0.5;
constexpr long kFixedPointMaxIterations = 100000;

void require_upper_half_plane(ComplexPoint z) {
  if (!(z.im > 0.0) || !std::isfinite(z.re) || !std::isfinite(z.im)) {
    throw DomainError("Stieltjes argument must satisfy Im z > 0, got Im z = " +
                      std::to_string(z.im));
  }
}

void require_ratio(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError("Marchenko-Pastur ratio must be positive and finite, got " +
                      std::to_string(c));
  }
}

// Continuous mass on [a, a + (b - a) sin^2(theta_max)].
double continuous_mass_up_to(const MPLaw& law, double theta_max) {
  const double width = law.b - law.a;
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double co = std::cos(theta);
    const double x = law.a + width * s * s;
    return width * width * s * s * co * co / (std::numbers::pi * x);
  };
  return integrate(gauss_legendre_256(), 0.0, theta_max, integrand);
}

}  // namespace

StieltjesGrid make_stieltjes_grid(double alpha, double v, std::size_t count) {
  if (!(alpha > 0.0)) throw DomainError("grid half-width alpha must be positive");
  if (!(v > 0.0 && v <= 1.0)) throw DomainError("grid imaginary part v must lie in (0, 1]");
  if (count == 0) throw DomainError("grid needs at least one point");
  StieltjesGrid grid{alpha, v, {}};
  grid.points.reserve(count);
  if (count == 1) {
    grid.points.push_back({0.0, v});
    return grid;
  }
  const double step = 2.0 * alpha / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = i + 1 == count ? alpha : -alpha + step * static_cast<double>(i);
    grid.points.push_back({u, v});
  }
  return grid;
}

MPLaw MPLaw::with_ratio(double c) {
  const auto [a, b] = mp_support(c);
  return MPLaw{c, a, b, std::max(0.0, 1.0 - c)};
}

std::pair<double, double> mp_support(double c) {
  require_ratio(c);
  const double root = std::sqrt(c);
  return {(1.0 - root) * (1.0 - root), (1.0 + root) * (1.0 + root)};
}

double mp_density(const MPLaw& law, double x) {
  if (!(x >= law.a && x <= law.b) || x <= 0.0) return 0.0;
  return std::sqrt((x - law.a) * (law.b - x)) / (2.0 * std::numbers::pi * x);
}

double mp_cdf(const MPLaw& law, double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 0.0;
  if (x >= law.b) return 1.0;
  if (x <= law.a) return law.atom_mass;
  const double fraction = (x - law.a) / (law.b - law.a);
  const double theta = std::asin(std::sqrt(fraction));
  const double value = law.atom_mass + continuous_mass_up_to(law, theta);
  return std::clamp(value, law.atom_mass, 1.0);
}

double mp_continuous_mass(const MPLaw& law) {
  return continuous_mass_up_to(law, 0.5 * std::numbers::pi);
}

complex mp_stieltjes_closed(const MPLaw& law, ComplexPoint zp) {
  require_upper_half_plane(zp);
  const complex z = zp.value();
  // Roots of z m^2 + (z + 1 - c) m + 1 = 0, computed without cancellation:
  // q = -(B + s) / 2 with s the square root aligned with B, roots q / z and 1 / q.
  const complex linear = z + 1.0 - law.c;
  complex root = std::sqrt(linear * linear - 4.0 * z);
  if (std::real(std::conj(linear) * root) < 0.0) root = -root;
  const complex q = -0.5 * (linear + root);
  const complex first = q / z;
  const complex second = 1.0 / q;

  const bool first_ok = std::imag(z * first) >= 0.0;
  const bool second_ok = std::imag(z * second) >= 0.0;
  if (first_ok != second_ok) return first_ok ? first : second;
  return std::imag(first) >= std::imag(second) ? first : second;
}

double mp_fixed_point_residual(double c, complex z, complex m) {
  return std::abs(m - 1.0 / (c - 1.0 - z - z * m));
}

complex mp_stieltjes_fixed_point(double c, ComplexPoint zp, double tol) {
  require_ratio(c);
  require_upper_half_plane(zp);
  if (!(tol > 0.0)) throw DomainError("fixed-point tolerance must be positive");
  const complex z = zp.value();
  const auto forward = [&](complex m) { return 1.0 / (c - 1.0 - z - z * m); };
  const auto inverse = [&](complex m) { return (c - 1.0 - z - 1.0 / m) / z; };

  double residual = 0.0;
  const auto iterate = [&](auto map, complex& m) {
    for (long iter = 0; iter < kFixedPointMaxIterations; ++iter) {
      residual = std::abs(m - forward(m));
      if (residual <= tol) return true;
      m = (1.0 - kFixedPointDamping) * m + kFixedPointDamping * map(m);
    }
    return false;
  };

  complex m = -1.0 / z;
  if (iterate(forward, m) && std::imag(z * m) >= -tol) return m;
  // The two roots satisfy f'(m1) f'(m2) = 1, so when the damped forward map settles on the
  // non-physical root (near the atom at 0 for c < 1), the inverse map attracts the right one.
  m = -1.0 / z;
  if (iterate(inverse, m) && std::imag(z * m) >= -tol) return m;
  throw ConvergenceError("Stieltjes fixed-point iteration did not converge; last residual " +
                             std::to_string(residual),
                         residual);
}

}  // namespace mpspectra
