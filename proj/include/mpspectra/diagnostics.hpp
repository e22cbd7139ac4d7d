#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpspectra/ensembles.hpp"
#include "mpspectra/mp_law.hpp"

namespace mpspectra {

/// Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Estimated dependence statistics of an independent-row ensemble.
///
/// Suprema over index tuples are taken over fixed panels: all pairs among the first
/// min(8, N) columns, 20 four-tuples spread over the 4-subsets of those columns, and up to
/// 16 evenly spaced columns for the pairwise fourth moments behind rho.
struct RowDependenceReport {
  EnsembleSpec spec;
  std::size_t trials = 0;
  std::size_t rows = 0;
  Estimate q_hat;
  Estimate pair_corr_sup;
  Estimate quad_mixed_sup;
  Estimate rho_hat;
  Estimate fourth_moment_max;
  /// Signed panel averages of E[z_i z_j] and E[z_i z_j z_l z_m].
  Estimate pair_corr_mean;
  Estimate quad_mixed_mean;
};

/// Row moments are estimated from trials * n rows drawn with seeds
/// {seed.master, seed.trial + t}. Rows of the supported ensembles are independent, so the
/// conditional expectations reduce to unconditional row moments.
/// Throws UnsupportedEnsembleError for MovingAverageRows.
RowDependenceReport estimate_row_dependence(const EnsembleSpec& spec, std::size_t trials, Seed seed);

struct ResidualReport {
  EnsembleSpec spec;
  std::size_t trials = 0;
  StieltjesGrid grid;
  std::vector<complex> mean_stieltjes;
  std::vector<double> residuals;
  double sup_residual = 0.0;
  /// Delete-one jackknife over trials; 0 for a single trial.
  double sup_residual_se = 0.0;
};

/// Produces the matrix for one trial seed.
using MatrixSource = std::function<RealMatrix(Seed)>;

/// Averages s_n(z) over trials on the grid u + iv, |u| <= alpha, and reports
/// |E s - 1 / (c_n - 1 - z - z E s)| per point.
ResidualReport self_consistency_residual(const EnsembleSpec& spec, std::size_t trials, double alpha,
                                double v, std::size_t grid_points, Seed seed);

/// Same for an arbitrary matrix source with aspect ratio `ratio` (N / n).
ResidualReport self_consistency_residual(const MatrixSource& source, double ratio, std::size_t trials,
                                const StieltjesGrid& grid, Seed seed);

struct VarianceCell {
  std::size_t n = 0;
  std::size_t beta = 0;
  ComplexPoint z;
  std::size_t trials = 0;
  double var_hat = 0.0;
  double var_se = 0.0;
  /// n * var_hat * (Im z)^2 / (beta + 1)^2
  double normalized = 0.0;
  double normalized_se = 0.0;
};

struct VarianceScalingTable {
  Rational aspect;
  std::vector<VarianceCell> rows;
};

/// Complex sample variance E|s - E s|^2 of s_n(z) for moving-average rows, one cell per
/// (n, beta). Throws DomainError for z.im <= 0 or fewer than 2 trials, SpecError when
/// beta >= n.
VarianceScalingTable variance_scaling(std::span<const std::size_t> n_list,
                                      std::span<const std::size_t> beta_list, Rational aspect,
                                      ComplexPoint z, std::size_t trials, Seed seed);

/// Normalized-statistic spread for one beta: max over n divided by min over n.
double normalized_spread(const VarianceScalingTable& table, std::size_t beta);

struct NormSummary {
  std::size_t trials = 0;
  double mean_norm = 0.0;
  double mean_norm_se = 0.0;
  double max_norm = 0.0;
};

/// Mean and max of ||gram(A)|| = (1/n)||A A^T|| over trials.
NormSummary norm_check(const EnsembleSpec& spec, std::size_t trials, Seed seed);
NormSummary norm_check(const MatrixSource& source, std::size_t trials, Seed seed);

nlohmann::json to_json(const RowDependenceReport& report);
nlohmann::json to_json(const ResidualReport& report);
nlohmann::json to_json(const VarianceScalingTable& table);
nlohmann::json to_json(const NormSummary& summary);

}  // namespace mpspectra
