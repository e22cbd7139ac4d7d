#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpspectra/diagnostics.hpp"
#include "mpspectra/ensembles.hpp"
#include "mpspectra/mp_law.hpp"

namespace mpspectra {

enum class Experiment { Sweep, Diagnose, VarCheck, Residual, NormCheck };

/// LawAtC compares against F_c for the limiting ratio, LawAtCn against F_{N/n}.
enum class ReferenceLaw { LawAtC, LawAtCn };

enum class OutputFormat { Csv, Json };

std::string_view to_string(Experiment e);
std::string_view to_string(ReferenceLaw r);

/// Validated experiment description.
///
/// JSON keys (required marked *):
///   experiment*    SWEEP | DIAGNOSE | VARCHECK | RESIDUAL | NORMCHECK
///   kind*          ensemble kind name
///   aspect*        "p/q" string (or positive integer) giving N = aspect * n
///   n_list*        strictly increasing positive integers
///   master_seed*   unsigned 64-bit integer
///   beta           dependence range for MOVING_AVERAGE_ROWS          (default 0)
///   trials         trials per n                                      (default 20)
///   reference      LAW_AT_C | LAW_AT_CN                              (default LAW_AT_CN)
///   limit_c        ratio used by LAW_AT_C                            (default: aspect)
///   alpha, v, points   Stieltjes grid for RESIDUAL                   (default 8, 0.5, 33)
///   beta_list      VARCHECK dependence ranges                        (default [beta])
///   z_re, z_im     VARCHECK evaluation point                         (default 1, 1)
///   output         output path, "-" for stdout                       (default "-")
///   format         "csv" | "json"                                    (default "csv")
///   cache_dir      directory for ESD1 eigenvalue caches              (default none)
///   comment        free text, ignored
///
/// The v parameter is fixed per run; shrinking it with n is left to the caller.
struct ExperimentConfig {
  Experiment experiment = Experiment::Sweep;
  EnsembleKind kind = EnsembleKind::IidGaussian;
  Rational aspect;
  std::size_t beta = 0;
  std::vector<std::size_t> n_list;
  std::size_t trials = 20;
  std::uint64_t master_seed = 0;
  ReferenceLaw reference = ReferenceLaw::LawAtCn;
  std::optional<double> limit_c;
  double alpha = 8.0;
  double v = 0.5;
  std::size_t points = 33;
  std::vector<std::size_t> beta_list;
  double z_re = 1.0;
  double z_im = 1.0;
  std::string output = "-";
  OutputFormat format = OutputFormat::Csv;
  std::optional<std::filesystem::path> cache_dir;

  EnsembleSpec spec_for(std::size_t n) const { return EnsembleSpec{kind, n, aspect, beta}; }
  /// Reference law for a given n.
  MPLaw reference_law(std::size_t n) const;
  /// Throws ValidationError naming the offending key.
  void validate() const;
};

/// Parses and validates a JSON config. Unknown or duplicate keys are rejected.
/// Throws ParseError (with line and column) or ValidationError.
ExperimentConfig parse_config(std::string_view text);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct SweepRow {
  std::size_t n = 0;
  std::size_t cols = 0;
  Rational ratio;
  std::size_t trials = 0;
  double kdist_mean_single = 0.0;
  /// Standard error of the mean single-trial distance.
  double se = 0.0;
  double kdist_of_average = 0.0;
  /// Delete-one jackknife standard error of kdist_of_average.
  double se_of_average = 0.0;
  double wall_time_s = 0.0;
  /// Non-empty when this n failed (capacity or numerical error); metrics are then unset.
  std::string error;
};

struct SweepResult {
  EnsembleKind kind = EnsembleKind::IidGaussian;
  std::size_t beta = 0;
  std::uint64_t master_seed = 0;
  std::vector<SweepRow> rows;
};

/// For each n draws `trials` spectra and reports the mean single-trial Kolmogorov
/// distance and the distance of the pooled (trial-averaged) ESD to the reference law.
/// Failures at one n are recorded in that row and do not stop the others.
SweepResult run_sweep(const ExperimentConfig& cfg);

struct RateFit {
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t used_rows = 0;
};

/// Least-squares fit of log(kdist_of_average) against log(n) over rows with positive
/// distance and no error. Throws InsufficientDataError with fewer than 3 usable rows.
RateFit rate_fit(const SweepResult& result);
RateFit rate_fit(std::span<const double> n_values, std::span<const double> distances);

/// One line of the output schema.
struct MetricRow {
  std::string experiment;
  std::string kind;
  std::size_t n = 0;
  std::size_t cols = 0;
  std::int64_t c_num = 1;
  std::int64_t c_den = 1;
  std::size_t beta = 0;
  std::size_t trials = 0;
  std::uint64_t master_seed = 0;
  std::string metric_name;
  double metric_value = 0.0;
  double std_error = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

using MetricTable = std::vector<MetricRow>;

/// experiment,kind,n,N,c_num,c_den,beta,trials,master_seed,metric_name,metric_value,stderr
inline constexpr std::string_view kCsvHeader =
    "experiment,kind,n,N,c_num,c_den,beta,trials,master_seed,metric_name,metric_value,stderr";

MetricTable to_metrics(const SweepResult& result);
/// Rebuilds sweep rows from kdist metrics; wall time and error text are not part of the table.
SweepResult sweep_from_metrics(const MetricTable& table);

/// Outcome of any experiment: the metric table plus per-n failures.
struct RunOutcome {
  MetricTable table;
  std::vector<std::string> errors;
};

/// Dispatches on cfg.experiment.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// CSV with LF line endings and 17 significant digits.
std::string format_csv(const MetricTable& table);
/// JSON array of row objects keyed by the CSV column names.
std::string format_json(const MetricTable& table);
MetricTable parse_metrics_json(std::string_view text);

/// Writes the table to `path` ("-" means stdout). Throws IoError naming the path.
void emit(const MetricTable& table, const std::string& path, OutputFormat format);

/// Pointwise evaluation of a Marchenko-Pastur law for plotting.
/// JSON keys: c* (ratio), x_min (0), x_max (b + 1), points (201), v (1e-3), output ("-"),
/// format ("csv").
struct MpEvalConfig {
  double c = 1.0;
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::size_t points = 201;
  double v = 1e-3;
  std::string output = "-";
  OutputFormat format = OutputFormat::Csv;
};

MpEvalConfig parse_mp_eval_config(std::string_view text);

/// Columns x,density,cdf,stieltjes_re,stieltjes_im; the transform is taken at x + iv.
std::string format_mp_eval(const MpEvalConfig& cfg);

/// Cache file name for a trial: 16 hex digits of a 64-bit FNV-1a hash of the spec and seed.
std::string cache_file_name(const EnsembleSpec& spec, Seed seed);

}  // namespace mpspectra
