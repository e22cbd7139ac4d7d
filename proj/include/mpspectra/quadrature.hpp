#pragma once

#include <cstddef>
#include <vector>

namespace mpspectra {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Computes an n-point rule by Newton iteration on P_n, using the symmetry of the nodes.
GaussLegendreRule gauss_legendre(std::size_t n);

/// Shared 256-point rule, built once.
const GaussLegendreRule& gauss_legendre_256();

/// Integrates f over [lo, hi] with the given rule.
template <typename F>
double integrate(const GaussLegendreRule& rule, double lo, double hi, F&& f) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * sum;
}

}  // namespace mpspectra
