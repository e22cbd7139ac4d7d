#include "mpspectra/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "mpspectra/error.hpp"
#include "mpspectra/linalg.hpp"
#include "mpspectra/parallel.hpp"
#include "mpspectra/spectral_stats.hpp"

namespace mpspectra {

namespace {

constexpr std::size_t kPairPanelColumns = 8;
constexpr std::size_t kQuadPanelSize = 20;
constexpr std::size_t kRhoPanelColumns = 16;

using Quad = std::array<std::size_t, 4>;

struct Panels {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Quad> quads;
  std::vector<std::size_t> rho_columns;
  std::vector<std::pair<std::size_t, std::size_t>> rho_pairs;
};

Panels make_panels(std::size_t cols) {
  Panels p;
  const std::size_t base = std::min(kPairPanelColumns, cols);
  for (std::size_t i = 0; i < base; ++i) {
    for (std::size_t j = i + 1; j < base; ++j) p.pairs.emplace_back(i, j);
  }
  std::vector<Quad> all;
  for (std::size_t i = 0; i < base; ++i)
    for (std::size_t j = i + 1; j < base; ++j)
      for (std::size_t l = j + 1; l < base; ++l)
        for (std::size_t m = l + 1; m < base; ++m) all.push_back({i, j, l, m});
  if (all.size() <= kQuadPanelSize) {
    p.quads = all;
  } else {
    for (std::size_t k = 0; k < kQuadPanelSize; ++k) p.quads.push_back(all[k * all.size() / kQuadPanelSize]);
  }
  const std::size_t s = std::min(kRhoPanelColumns, cols);
  for (std::size_t k = 0; k < s; ++k) p.rho_columns.push_back(k * cols / s);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      if (a != b) p.rho_pairs.emplace_back(p.rho_columns[a], p.rho_columns[b]);
    }
  }
  return p;
}

// Sum and sum of squares of one statistic across rows.
struct Moment {
  double sum = 0.0;
  double sq = 0.0;

  void add(double x) {
    sum += x;
    sq += x * x;
  }
  void merge(const Moment& o) {
    sum += o.sum;
    sq += o.sq;
  }
  double mean(double rows) const { return sum / rows; }
  double variance(double rows) const {
    if (rows < 2.0) return 0.0;
    const double m = sum / rows;
    return std::max(0.0, (sq / rows - m * m) * rows / (rows - 1.0));
  }
  double std_error(double rows) const { return std::sqrt(variance(rows) / rows); }
};

struct RowAccumulator {
  std::size_t rows = 0;
  std::vector<Moment> square;  // z^2 per column
  std::vector<Moment> fourth;  // z^4 per column
  std::vector<Moment> pairs;
  std::vector<Moment> quads;
  std::vector<Moment> rho;
  Moment pair_avg;
  Moment quad_avg;

  RowAccumulator(std::size_t cols, const Panels& p)
      : square(cols), fourth(cols), pairs(p.pairs.size()), quads(p.quads.size()),
        rho(p.rho_pairs.size()) {}

  void add_row(std::span<const double> z, const Panels& p) {
    ++rows;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double z2 = z[i] * z[i];
      square[i].add(z2);
      fourth[i].add(z2 * z2);
    }
    double pair_total = 0.0;
    for (std::size_t k = 0; k < p.pairs.size(); ++k) {
      const double x = z[p.pairs[k].first] * z[p.pairs[k].second];
      pairs[k].add(x);
      pair_total += x;
    }
    if (!p.pairs.empty()) pair_avg.add(pair_total / static_cast<double>(p.pairs.size()));
    double quad_total = 0.0;
    for (std::size_t k = 0; k < p.quads.size(); ++k) {
      const auto& q = p.quads[k];
      const double x = z[q[0]] * z[q[1]] * z[q[2]] * z[q[3]];
      quads[k].add(x);
      quad_total += x;
    }
    if (!p.quads.empty()) quad_avg.add(quad_total / static_cast<double>(p.quads.size()));
    for (std::size_t k = 0; k < p.rho_pairs.size(); ++k) {
      const double a = z[p.rho_pairs[k].first];
      const double b = z[p.rho_pairs[k].second];
      rho[k].add(a * a * b * b);
    }
  }

  void merge(const RowAccumulator& o) {
    rows += o.rows;
    const auto merge_all = [](std::vector<Moment>& dst, const std::vector<Moment>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i].merge(src[i]);
    };
    merge_all(square, o.square);
    merge_all(fourth, o.fourth);
    merge_all(pairs, o.pairs);
    merge_all(quads, o.quads);
    merge_all(rho, o.rho);
    pair_avg.merge(o.pair_avg);
    quad_avg.merge(o.quad_avg);
  }
};

// Largest |mean| over a panel, with the standard error of the maximizing entry.
Estimate sup_abs(const std::vector<Moment>& panel, double rows) {
  Estimate best;
  for (const auto& m : panel) {
    const double v = std::abs(m.mean(rows));
    if (v >= best.value) best = {v, m.std_error(rows)};
  }
  return best;
}

// Mean over entries of |E x - 1| with the standard error of the underlying signed sum.
Estimate mean_abs_deviation_from_one(const std::vector<Moment>& panel, double rows) {
  if (panel.empty()) return {};
  double total = 0.0;
  double var = 0.0;
  for (const auto& m : panel) {
    total += std::abs(m.mean(rows) - 1.0);
    var += m.variance(rows) / rows;
  }
  const double count = static_cast<double>(panel.size());
  return {total / count, std::sqrt(var) / count};
}

double jackknife_se(std::span<const double> leave_one_out) {
  const std::size_t t = leave_one_out.size();
  if (t < 2) return 0.0;
  double mean = 0.0;
  for (double x : leave_one_out) mean += x;
  mean /= static_cast<double>(t);
  double ss = 0.0;
  for (double x : leave_one_out) ss += (x - mean) * (x - mean);
  return std::sqrt(ss * static_cast<double>(t - 1) / static_cast<double>(t));
}

MatrixSource ensemble_source(const EnsembleSpec& spec) {
  return [spec](Seed s) { return sample(spec, s).matrix; };
}

double sup_residual_of(std::span<const complex> mean_s, const StieltjesGrid& grid, double ratio,
                       std::vector<double>* residuals) {
  double sup = 0.0;
  for (std::size_t j = 0; j < grid.points.size(); ++j) {
    const double r = mp_fixed_point_residual(ratio, grid.points[j].value(), mean_s[j]);
    if (residuals) (*residuals)[j] = r;
    sup = std::max(sup, r);
  }
  return sup;
}

}  // namespace

RowDependenceReport estimate_row_dependence(const EnsembleSpec& spec, std::size_t trials, Seed seed) {
  if (spec.kind == EnsembleKind::MovingAverageRows) {
    throw UnsupportedEnsembleError(
        "row-dependence estimation needs independent rows; MOVING_AVERAGE_ROWS is refused");
  }
  if (trials == 0) throw DomainError("estimate_row_dependence needs at least one trial");
  spec.validate();
  const std::size_t cols = spec.columns();
  const Panels panels = make_panels(cols);

  std::vector<RowAccumulator> partial(trials, RowAccumulator(cols, panels));
  parallel_for(trials, [&](std::size_t t) {
    const auto m = sample(spec, {seed.master, seed.trial + t});
    for (std::size_t k = 0; k < m.matrix.rows(); ++k) partial[t].add_row(m.matrix.row(k), panels);
  });
  RowAccumulator total(cols, panels);
  for (const auto& p : partial) total.merge(p);

  const double rows = static_cast<double>(total.rows);
  const double n = static_cast<double>(spec.n);
  const double big_n = static_cast<double>(cols);
  RowDependenceReport report;
  report.spec = spec;
  report.trials = trials;
  report.rows = total.rows;

  // q: (1/n) sum_i |E z_i^2 - 1|
  double q = 0.0;
  double q_var = 0.0;
  for (const auto& m : total.square) {
    q += std::abs(m.mean(rows) - 1.0);
    q_var += m.variance(rows) / rows;
  }
  report.q_hat = {q / n, std::sqrt(q_var) / n};

  report.pair_corr_sup = sup_abs(total.pairs, rows);
  report.quad_mixed_sup = sup_abs(total.quads, rows);
  report.pair_corr_mean = {total.pair_avg.mean(rows), total.pair_avg.std_error(rows)};
  report.quad_mixed_mean = {total.quad_avg.mean(rows), total.quad_avg.std_error(rows)};

  const std::size_t fourth_panel = std::min(kPairPanelColumns, cols);
  for (std::size_t i = 0; i < fourth_panel; ++i) {
    const double v = total.fourth[i].mean(rows);
    if (i == 0 || v > report.fourth_moment_max.value) {
      report.fourth_moment_max = {v, total.fourth[i].std_error(rows)};
    }
  }

  // rho: (1/n^2) sum_{i,j} |E z_i^2 z_j^2 - 1|, diagonal from all columns and the
  // off-diagonal average from the column panel.
  const Estimate diag = mean_abs_deviation_from_one(total.fourth, rows);
  const Estimate off = mean_abs_deviation_from_one(total.rho, rows);
  const double off_count = big_n * (big_n - 1.0);
  report.rho_hat = {(big_n * diag.value + off_count * off.value) / (n * n),
                    (big_n * diag.std_error + off_count * off.std_error) / (n * n)};
  return report;
}

ResidualReport self_consistency_residual(const EnsembleSpec& spec, std::size_t trials, double alpha,
                                double v, std::size_t grid_points, Seed seed) {
  spec.validate();
  auto report = self_consistency_residual(ensemble_source(spec), spec.ratio(), trials,
                                 make_stieltjes_grid(alpha, v, grid_points), seed);
  report.spec = spec;
  return report;
}

ResidualReport self_consistency_residual(const MatrixSource& source, double ratio, std::size_t trials,
                                const StieltjesGrid& grid, Seed seed) {
  if (trials == 0) throw DomainError("self_consistency_residual needs at least one trial");
  if (grid.points.empty()) throw DomainError("self_consistency_residual needs a non-empty grid");
  const std::size_t points = grid.points.size();
  std::vector<std::vector<complex>> per_trial(trials);
  parallel_for(trials, [&](std::size_t t) {
    const auto spectrum = SpectralSample::from_eigenvalues(
        eigenvalues_sym(gram(source({seed.master, seed.trial + t}))));
    auto& row = per_trial[t];
    row.resize(points);
    for (std::size_t j = 0; j < points; ++j) row[j] = empirical_stieltjes(spectrum, grid.points[j]);
  });

  std::vector<complex> sum(points, complex{});
  for (const auto& row : per_trial) {
    for (std::size_t j = 0; j < points; ++j) sum[j] += row[j];
  }
  ResidualReport report;
  report.trials = trials;
  report.grid = grid;
  report.mean_stieltjes.resize(points);
  const double t_count = static_cast<double>(trials);
  for (std::size_t j = 0; j < points; ++j) report.mean_stieltjes[j] = sum[j] / t_count;
  report.residuals.resize(points);
  report.sup_residual = sup_residual_of(report.mean_stieltjes, grid, ratio, &report.residuals);

  if (trials >= 2) {
    std::vector<double> leave_one_out(trials);
    std::vector<complex> mean(points);
    for (std::size_t t = 0; t < trials; ++t) {
      for (std::size_t j = 0; j < points; ++j) mean[j] = (sum[j] - per_trial[t][j]) / (t_count - 1.0);
      leave_one_out[t] = sup_residual_of(mean, grid, ratio, nullptr);
    }
    report.sup_residual_se = jackknife_se(leave_one_out);
  }
  return report;
}

VarianceScalingTable variance_scaling(std::span<const std::size_t> n_list,
                                      std::span<const std::size_t> beta_list, Rational aspect,
                                      ComplexPoint z, std::size_t trials, Seed seed) {
  if (!(z.im > 0.0)) throw DomainError("variance_scaling requires Im z > 0");
  if (trials < 2) throw DomainError("variance_scaling needs at least two trials");
  VarianceScalingTable table;
  table.aspect = aspect;
  for (std::size_t beta : beta_list) {
    for (std::size_t n : n_list) {
      const EnsembleSpec spec{EnsembleKind::MovingAverageRows, n, aspect, beta};
      spec.validate();
      std::vector<complex> values(trials);
      parallel_for(trials, [&](std::size_t t) {
        const auto s = esd_from_matrix(sample(spec, {seed.master, seed.trial + t}));
        values[t] = empirical_stieltjes(s, z);
      });
      complex mean{};
      for (const auto& s : values) mean += s;
      mean /= static_cast<double>(trials);
      Moment dev;
      for (const auto& s : values) dev.add(std::norm(s - mean));
      const double t_count = static_cast<double>(trials);
      VarianceCell cell;
      cell.n = n;
      cell.beta = beta;
      cell.z = z;
      cell.trials = trials;
      cell.var_hat = dev.sum / (t_count - 1.0);
      cell.var_se = std::sqrt(dev.variance(t_count) / t_count) * t_count / (t_count - 1.0);
      const double scale = static_cast<double>(n) * z.im * z.im /
                           (static_cast<double>(beta + 1) * static_cast<double>(beta + 1));
      cell.normalized = scale * cell.var_hat;
      cell.normalized_se = scale * cell.var_se;
      table.rows.push_back(cell);
    }
  }
  return table;
}

double normalized_spread(const VarianceScalingTable& table, std::size_t beta) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& cell : table.rows) {
    if (cell.beta != beta) continue;
    lo = std::min(lo, cell.normalized);
    hi = std::max(hi, cell.normalized);
  }
  if (!(hi > 0.0) || !std::isfinite(lo)) throw DomainError("no usable cells for this beta");
  return hi / lo;
}

NormSummary norm_check(const EnsembleSpec& spec, std::size_t trials, Seed seed) {
  spec.validate();
  return norm_check(ensemble_source(spec), trials, seed);
}

NormSummary norm_check(const MatrixSource& source, std::size_t trials, Seed seed) {
  if (trials == 0) throw DomainError("norm_check needs at least one trial");
  std::vector<double> norms(trials);
  parallel_for(trials, [&](std::size_t t) {
    norms[t] = spectral_norm(gram(source({seed.master, seed.trial + t})));
  });
  Moment m;
  NormSummary out;
  out.trials = trials;
  for (double x : norms) {
    m.add(x);
    out.max_norm = std::max(out.max_norm, x);
  }
  const double t_count = static_cast<double>(trials);
  out.mean_norm = m.mean(t_count);
  out.mean_norm_se = m.std_error(t_count);
  return out;
}

namespace {

nlohmann::json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"stderr", e.std_error}};
}

}  // namespace

nlohmann::json to_json(const RowDependenceReport& r) {
  return {{"spec", to_json(r.spec)},
          {"trials", r.trials},
          {"rows", r.rows},
          {"q_hat", estimate_json(r.q_hat)},
          {"pair_corr_sup", estimate_json(r.pair_corr_sup)},
          {"quad_mixed_sup", estimate_json(r.quad_mixed_sup)},
          {"rho_hat", estimate_json(r.rho_hat)},
          {"fourth_moment_max", estimate_json(r.fourth_moment_max)},
          {"pair_corr_mean", estimate_json(r.pair_corr_mean)},
          {"quad_mixed_mean", estimate_json(r.quad_mixed_mean)}};
}

nlohmann::json to_json(const ResidualReport& r) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t j = 0; j < r.grid.points.size(); ++j) {
    points.push_back({r.grid.points[j].re, r.grid.points[j].im, r.residuals[j]});
  }
  return {{"spec", to_json(r.spec)},  {"trials", r.trials},
          {"alpha", r.grid.alpha},    {"v", r.grid.v},
          {"points", points},         {"sup_residual", r.sup_residual},
          {"sup_residual_stderr", r.sup_residual_se}};
}

nlohmann::json to_json(const VarianceScalingTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : table.rows) {
    rows.push_back({c.n, c.beta, c.z.re, c.z.im, c.trials, c.var_hat, c.var_se, c.normalized});
  }
  return {{"aspect_num", table.aspect.num},
          {"aspect_den", table.aspect.den},
          {"columns", {"n", "beta", "z_re", "z_im", "trials", "var_hat", "var_stderr", "normalized"}},
          {"rows", rows}};
}

nlohmann::json to_json(const NormSummary& s) {
  return {{"trials", s.trials},
          {"mean_norm", s.mean_norm},
          {"mean_norm_stderr", s.mean_norm_se},
          {"max_norm", s.max_norm}};
}

}  // namespace mpspectra
