#include "mpspectra/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <system_error>

#include "mpspectra/error.hpp"
#include "mpspectra/linalg.hpp"
#include "mpspectra/parallel.hpp"
#include "mpspectra/spectral_stats.hpp"

namespace mpspectra {

namespace {

using nlohmann::json;

constexpr std::array<std::pair<Experiment, std::string_view>, 5> kExperimentNames{{
    {Experiment::Sweep, "SWEEP"},
    {Experiment::Diagnose, "DIAGNOSE"},
    {Experiment::VarCheck, "VARCHECK"},
    {Experiment::Residual, "RESIDUAL"},
    {Experiment::NormCheck, "NORMCHECK"},
}};

constexpr std::array<std::string_view, 19> kConfigKeys{
    "experiment", "kind",   "aspect",    "n_list", "master_seed", "beta",      "trials",
    "reference",  "limit_c", "alpha",    "v",      "points",      "beta_list", "z_re",
    "z_im",       "output", "format",    "cache_dir", "comment"};

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  // nlohmann reports the byte after the offending character.
  return {line, column > 1 ? column - 1 : column};
}

json parse_strict(std::string_view text) {
  std::vector<std::set<std::string>> seen;
  const json::parser_callback_t reject_duplicates = [&](int, json::parse_event_t event,
                                                        json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        seen.emplace_back();
        break;
      case json::parse_event_t::object_end:
        seen.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto key = parsed.get<std::string>();
        if (!seen.back().insert(key).second) throw ValidationError(key, "duplicate key");
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(text.begin(), text.end(), reject_duplicates);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw ParseError(e.what(), line, column);
  }
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(key, "has the wrong type");
  }
}

std::size_t positive_size(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw ValidationError(key, "must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::size_t nonnegative_size(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ValidationError(key, "must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double finite_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(key, "must be finite");
  return x;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                                       std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

MetricRow base_row(const ExperimentConfig& cfg, const EnsembleSpec& spec, std::size_t cols) {
  MetricRow row;
  row.experiment = std::string(to_string(cfg.experiment));
  row.kind = std::string(to_string(spec.kind));
  row.n = spec.n;
  row.cols = cols;
  row.c_num = spec.aspect.num;
  row.c_den = spec.aspect.den;
  row.beta = spec.beta;
  row.trials = cfg.trials;
  row.master_seed = cfg.master_seed;
  return row;
}

void add_metric(MetricTable& table, MetricRow row, std::string name, double value, double se) {
  row.metric_name = std::move(name);
  row.metric_value = value;
  row.std_error = se;
  table.push_back(std::move(row));
}

SpectralSample spectral_sample_cached(const ExperimentConfig& cfg, const EnsembleSpec& spec,
                                      Seed seed) {
  if (!cfg.cache_dir) return esd_from_matrix(sample(spec, seed));
  const auto path = *cfg.cache_dir / cache_file_name(spec, seed);
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      return read_spectral_sample(path, spec);
    } catch (const IoError&) {
      // Unreadable cache entries are recomputed and overwritten.
    }
  }
  auto s = esd_from_matrix(sample(spec, seed));
  auto tmp = path;
  tmp += ".tmp";
  write_spectral_sample(tmp, s);
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "cannot move cache file into place: " + ec.message());
  return s;
}

// Kolmogorov distance of the pooled spectra with one trial left out. `cdf` holds F(value)
// for each pooled entry, so repeated leave-one-out evaluations skip the quadrature.
double pooled_distance_without(std::span<const double> values, std::span<const std::size_t> owner,
                               std::span<const double> cdf, std::size_t skip, double total,
                               double atom) {
  double sup = 0.0;
  double cum = 0.0;
  double at_zero = 0.0;
  double below_zero = 0.0;
  std::size_t i = 0;
  while (i < values.size()) {
    const double lambda = values[i];
    std::size_t j = i;
    double count = 0.0;
    for (; j < values.size() && values[j] == lambda; ++j) {
      if (owner[j] != skip) count += 1.0;
    }
    if (count > 0.0) {
      const double before = lambda == 0.0 ? 0.0 : cdf[i];
      sup = std::max(sup, std::abs(cum / total - before));
      cum += count;
      sup = std::max(sup, std::abs(cum / total - cdf[i]));
      if (lambda < 0.0) below_zero = cum;
      if (lambda <= 0.0) at_zero = cum;
    }
    i = j;
  }
  sup = std::max(sup, std::abs(at_zero / total - atom));
  sup = std::max(sup, below_zero / total);
  return sup;
}

SweepRow sweep_one(const ExperimentConfig& cfg, std::size_t n) {
  const auto start = std::chrono::steady_clock::now();
  const EnsembleSpec spec = cfg.spec_for(n);
  SweepRow row;
  row.n = n;
  row.cols = spec.columns();
  row.ratio = spec.aspect;
  row.trials = cfg.trials;
  const MPLaw law = cfg.reference_law(n);

  std::vector<SpectralSample> samples(cfg.trials);
  std::vector<double> single(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    samples[t] = spectral_sample_cached(cfg, spec, {cfg.master_seed, t});
    single[t] = kolmogorov_distance(ESD(samples[t]), law);
  });

  const double t_count = static_cast<double>(cfg.trials);
  double mean = 0.0;
  for (double d : single) mean += d;
  mean /= t_count;
  double ss = 0.0;
  for (double d : single) ss += (d - mean) * (d - mean);
  row.kdist_mean_single = mean;
  row.se = cfg.trials > 1 ? std::sqrt(ss / (t_count - 1.0) / t_count) : 0.0;
  row.kdist_of_average = kolmogorov_distance(average_esd(samples), law);

  if (cfg.trials > 1) {
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(cfg.trials * n);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      for (double x : samples[t].eigenvalues()) pooled.emplace_back(x, t);
    }
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> values(pooled.size());
    std::vector<std::size_t> owner(pooled.size());
    std::vector<double> cdf(pooled.size());
    for (std::size_t k = 0; k < pooled.size(); ++k) {
      values[k] = pooled[k].first;
      owner[k] = pooled[k].second;
      cdf[k] = k > 0 && values[k] == values[k - 1] ? cdf[k - 1] : mp_cdf(law, values[k]);
    }
    std::vector<double> leave_one_out(cfg.trials);
    const double remaining = static_cast<double>((cfg.trials - 1) * n);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      leave_one_out[t] =
          pooled_distance_without(values, owner, cdf, t, remaining, law.atom_mass);
    }
    double jm = 0.0;
    for (double x : leave_one_out) jm += x;
    jm /= t_count;
    double jss = 0.0;
    for (double x : leave_one_out) jss += (x - jm) * (x - jm);
    row.se_of_average = std::sqrt(jss * (t_count - 1.0) / t_count);
  }
  row.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == e) return name;
  }
  return "UNKNOWN";
}

std::string_view to_string(ReferenceLaw r) {
  return r == ReferenceLaw::LawAtC ? "LAW_AT_C" : "LAW_AT_CN";
}

MPLaw ExperimentConfig::reference_law(std::size_t n) const {
  if (reference == ReferenceLaw::LawAtC) return MPLaw::with_ratio(limit_c.value_or(aspect.value()));
  const EnsembleSpec spec = spec_for(n);
  return MPLaw::with_ratio(static_cast<double>(spec.columns()) / static_cast<double>(n));
}

void ExperimentConfig::validate() const {
  if (n_list.empty()) throw ValidationError("n_list", "must not be empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0) throw ValidationError("n_list", "entries must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) {
      throw ValidationError("n_list", "must be strictly increasing");
    }
  }
  if (trials == 0) throw ValidationError("trials", "must be at least 1");
  if (limit_c && !(*limit_c > 0.0)) throw ValidationError("limit_c", "must be positive");
  if (!(alpha > 0.0)) throw ValidationError("alpha", "must be positive");
  if (!(v > 0.0 && v <= 1.0)) throw ValidationError("v", "must lie in (0, 1]");
  if (points == 0) throw ValidationError("points", "must be positive");
  if (!(z_im > 0.0)) throw ValidationError("z_im", "must be positive");
  if (experiment == Experiment::VarCheck) {
    if (kind != EnsembleKind::MovingAverageRows) {
      throw ValidationError("kind", "VARCHECK uses the MOVING_AVERAGE_ROWS family");
    }
    if (trials < 2) throw ValidationError("trials", "VARCHECK needs at least 2 trials");
  }
  if (experiment == Experiment::Diagnose && kind == EnsembleKind::MovingAverageRows) {
    throw ValidationError("kind", "DIAGNOSE needs an independent-row ensemble");
  }
  const auto& betas = experiment == Experiment::VarCheck ? beta_list : std::vector{beta};
  for (std::size_t n : n_list) {
    for (std::size_t b : betas) {
      try {
        EnsembleSpec{kind, n, aspect, b}.validate();
      } catch (const SpecError& e) {
        throw ValidationError("n_list", "n = " + std::to_string(n) + ": " + e.what());
      }
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  const json j = parse_strict(text);
  if (!j.is_object()) throw ValidationError("", "config must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), item.key()) == kConfigKeys.end()) {
      throw ValidationError(item.key(), "unknown key");
    }
  }
  for (const char* key : {"experiment", "kind", "aspect", "n_list", "master_seed"}) {
    if (!j.contains(key)) throw ValidationError(key, "is required");
  }

  ExperimentConfig cfg;
  const auto experiment = get_as<std::string>(j, "experiment");
  const auto found = std::find_if(kExperimentNames.begin(), kExperimentNames.end(),
                                  [&](const auto& p) { return p.second == experiment; });
  if (found == kExperimentNames.end()) {
    throw ValidationError("experiment", "unknown experiment '" + experiment + "'");
  }
  cfg.experiment = found->first;
  try {
    cfg.kind = parse_ensemble_kind(get_as<std::string>(j, "kind"));
  } catch (const SpecError& e) {
    throw ValidationError("kind", e.what());
  }
  try {
    const json& a = j.at("aspect");
    if (a.is_string()) {
      cfg.aspect = Rational::parse(a.get<std::string>());
    } else if (a.is_number_integer()) {
      cfg.aspect = Rational::make(a.get<std::int64_t>(), 1);
    } else {
      throw ValidationError("aspect", "must be a \"p/q\" string or an integer");
    }
  } catch (const SpecError& e) {
    throw ValidationError("aspect", e.what());
  }
  const json& n_list = j.at("n_list");
  if (!n_list.is_array()) throw ValidationError("n_list", "must be an array");
  for (const auto& v : n_list) {
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
      throw ValidationError("n_list", "entries must be positive integers");
    }
    cfg.n_list.push_back(v.get<std::size_t>());
  }
  if (!j.at("master_seed").is_number_unsigned()) {
    throw ValidationError("master_seed", "must be an unsigned 64-bit integer");
  }
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();

  if (j.contains("beta")) cfg.beta = nonnegative_size(j.at("beta"), "beta");
  if (j.contains("trials")) cfg.trials = positive_size(j, "trials");
  if (j.contains("reference")) {
    const auto r = get_as<std::string>(j, "reference");
    if (r == "LAW_AT_C") {
      cfg.reference = ReferenceLaw::LawAtC;
    } else if (r == "LAW_AT_CN") {
      cfg.reference = ReferenceLaw::LawAtCn;
    } else {
      throw ValidationError("reference", "must be LAW_AT_C or LAW_AT_CN");
    }
  }
  if (j.contains("limit_c")) cfg.limit_c = finite_number(j, "limit_c");
  if (j.contains("alpha")) cfg.alpha = finite_number(j, "alpha");
  if (j.contains("v")) cfg.v = finite_number(j, "v");
  if (j.contains("points")) cfg.points = positive_size(j, "points");
  if (j.contains("beta_list")) {
    const json& list = j.at("beta_list");
    if (!list.is_array() || list.empty()) {
      throw ValidationError("beta_list", "must be a non-empty array");
    }
    for (const auto& v : list) cfg.beta_list.push_back(nonnegative_size(v, "beta_list"));
  } else {
    cfg.beta_list = {cfg.beta};
  }
  if (j.contains("z_re")) cfg.z_re = finite_number(j, "z_re");
  if (j.contains("z_im")) cfg.z_im = finite_number(j, "z_im");
  if (j.contains("output")) cfg.output = get_as<std::string>(j, "output");
  if (j.contains("format")) {
    const auto f = get_as<std::string>(j, "format");
    if (f == "csv") {
      cfg.format = OutputFormat::Csv;
    } else if (f == "json") {
      cfg.format = OutputFormat::Json;
    } else {
      throw ValidationError("format", "must be \"csv\" or \"json\"");
    }
  }
  if (j.contains("cache_dir")) cfg.cache_dir = get_as<std::string>(j, "cache_dir");
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j{{"experiment", std::string(to_string(cfg.experiment))},
         {"kind", std::string(to_string(cfg.kind))},
         {"aspect", cfg.aspect.str()},
         {"n_list", cfg.n_list},
         {"master_seed", cfg.master_seed},
         {"beta", cfg.beta},
         {"trials", cfg.trials},
         {"reference", std::string(to_string(cfg.reference))},
         {"alpha", cfg.alpha},
         {"v", cfg.v},
         {"points", cfg.points},
         {"beta_list", cfg.beta_list},
         {"z_re", cfg.z_re},
         {"z_im", cfg.z_im},
         {"output", cfg.output},
         {"format", cfg.format == OutputFormat::Csv ? "csv" : "json"}};
  if (cfg.limit_c) j["limit_c"] = *cfg.limit_c;
  if (cfg.cache_dir) j["cache_dir"] = cfg.cache_dir->string();
  return j;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult result;
  result.kind = cfg.kind;
  result.beta = cfg.beta;
  result.master_seed = cfg.master_seed;
  for (std::size_t n : cfg.n_list) {
    try {
      result.rows.push_back(sweep_one(cfg, n));
    } catch (const CapacityError& e) {
      SweepRow row;
      row.n = n;
      row.cols = cfg.spec_for(n).columns();
      row.ratio = cfg.aspect;
      row.trials = cfg.trials;
      row.error = e.what();
      result.rows.push_back(row);
    } catch (const NumericalError& e) {
      SweepRow row;
      row.n = n;
      row.cols = cfg.spec_for(n).columns();
      row.ratio = cfg.aspect;
      row.trials = cfg.trials;
      row.error = e.what();
      result.rows.push_back(row);
    }
  }
  return result;
}

RateFit rate_fit(std::span<const double> n_values, std::span<const double> distances) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < std::min(n_values.size(), distances.size()); ++i) {
    if (n_values[i] > 0.0 && distances[i] > 0.0) {
      xs.push_back(std::log(n_values[i]));
      ys.push_back(std::log(distances[i]));
    }
  }
  if (xs.size() < 3) {
    throw InsufficientDataError("rate_fit needs at least 3 rows with positive distance, got " +
                                std::to_string(xs.size()));
  }
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("rate_fit needs at least two distinct n values");
  RateFit fit;
  fit.used_rows = xs.size();
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + fit.slope * (xs[i] - mx));
    ss_res += r * r;
  }
  // A constant series is fitted exactly by the zero-slope line.
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

RateFit rate_fit(const SweepResult& result) {
  std::vector<double> ns;
  std::vector<double> ds;
  for (const auto& row : result.rows) {
    if (!row.error.empty()) continue;
    ns.push_back(static_cast<double>(row.n));
    ds.push_back(row.kdist_of_average);
  }
  return rate_fit(ns, ds);
}

MetricTable to_metrics(const SweepResult& result) {
  MetricTable table;
  for (const auto& r : result.rows) {
    if (!r.error.empty()) continue;
    MetricRow row;
    row.experiment = std::string(to_string(Experiment::Sweep));
    row.kind = std::string(to_string(result.kind));
    row.n = r.n;
    row.cols = r.cols;
    row.c_num = r.ratio.num;
    row.c_den = r.ratio.den;
    row.beta = result.beta;
    row.trials = r.trials;
    row.master_seed = result.master_seed;
    add_metric(table, row, "kdist_mean_single", r.kdist_mean_single, r.se);
    add_metric(table, row, "kdist_of_average", r.kdist_of_average, r.se_of_average);
  }
  return table;
}

SweepResult sweep_from_metrics(const MetricTable& table) {
  SweepResult result;
  for (const auto& m : table) {
    if (m.experiment != to_string(Experiment::Sweep)) continue;
    result.kind = parse_ensemble_kind(m.kind);
    result.beta = m.beta;
    result.master_seed = m.master_seed;
    auto it = std::find_if(result.rows.begin(), result.rows.end(),
                           [&](const SweepRow& r) { return r.n == m.n; });
    if (it == result.rows.end()) {
      SweepRow row;
      row.n = m.n;
      row.cols = m.cols;
      row.ratio = Rational{m.c_num, m.c_den};
      row.trials = m.trials;
      result.rows.push_back(row);
      it = std::prev(result.rows.end());
    }
    if (m.metric_name == "kdist_mean_single") {
      it->kdist_mean_single = m.metric_value;
      it->se = m.std_error;
    } else if (m.metric_name == "kdist_of_average") {
      it->kdist_of_average = m.metric_value;
      it->se_of_average = m.std_error;
    }
  }
  return result;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunOutcome out;
  const auto record_failure = [&](std::size_t n, const std::exception& e) {
    out.errors.push_back("n = " + std::to_string(n) + ": " + e.what());
  };

  switch (cfg.experiment) {
    case Experiment::Sweep: {
      const auto result = run_sweep(cfg);
      out.table = to_metrics(result);
      for (const auto& r : result.rows) {
        if (!r.error.empty()) out.errors.push_back("n = " + std::to_string(r.n) + ": " + r.error);
      }
      break;
    }
    case Experiment::Diagnose:
      for (std::size_t n : cfg.n_list) {
        const auto spec = cfg.spec_for(n);
        try {
          const auto r = estimate_row_dependence(spec, cfg.trials, {cfg.master_seed, 0});
          const auto row = base_row(cfg, spec, spec.columns());
          add_metric(out.table, row, "q_hat", r.q_hat.value, r.q_hat.std_error);
          add_metric(out.table, row, "pair_corr_sup", r.pair_corr_sup.value,
                     r.pair_corr_sup.std_error);
          add_metric(out.table, row, "quad_mixed_sup", r.quad_mixed_sup.value,
                     r.quad_mixed_sup.std_error);
          add_metric(out.table, row, "rho_hat", r.rho_hat.value, r.rho_hat.std_error);
          add_metric(out.table, row, "fourth_moment_max", r.fourth_moment_max.value,
                     r.fourth_moment_max.std_error);
          add_metric(out.table, row, "pair_corr_mean", r.pair_corr_mean.value,
                     r.pair_corr_mean.std_error);
          add_metric(out.table, row, "quad_mixed_mean", r.quad_mixed_mean.value,
                     r.quad_mixed_mean.std_error);
        } catch (const CapacityError& e) {
          record_failure(n, e);
        }
      }
      break;
    case Experiment::Residual:
      for (std::size_t n : cfg.n_list) {
        const auto spec = cfg.spec_for(n);
        try {
          const auto r = self_consistency_residual(spec, cfg.trials, cfg.alpha, cfg.v, cfg.points,
                                          {cfg.master_seed, 0});
          const auto row = base_row(cfg, spec, spec.columns());
          add_metric(out.table, row, "sup_residual", r.sup_residual, r.sup_residual_se);
          for (std::size_t k = 0; k < r.grid.points.size(); ++k) {
            add_metric(out.table, row, "residual@u=" + format_double(r.grid.points[k].re),
                       r.residuals[k], 0.0);
          }
        } catch (const CapacityError& e) {
          record_failure(n, e);
        } catch (const NumericalError& e) {
          record_failure(n, e);
        }
      }
      break;
    case Experiment::VarCheck: {
      const ComplexPoint z{cfg.z_re, cfg.z_im};
      for (std::size_t b : cfg.beta_list) {
        for (std::size_t n : cfg.n_list) {
          const std::size_t one_n[] = {n};
          const std::size_t one_b[] = {b};
          try {
            const auto table = variance_scaling(one_n, one_b, cfg.aspect, z, cfg.trials,
                                                {cfg.master_seed, 0});
            const auto& cell = table.rows.front();
            const EnsembleSpec spec{cfg.kind, n, cfg.aspect, b};
            const auto row = base_row(cfg, spec, spec.columns());
            add_metric(out.table, row, "var_hat", cell.var_hat, cell.var_se);
            add_metric(out.table, row, "normalized", cell.normalized, cell.normalized_se);
          } catch (const CapacityError& e) {
            record_failure(n, e);
          } catch (const NumericalError& e) {
            record_failure(n, e);
          }
        }
      }
      break;
    }
    case Experiment::NormCheck:
      for (std::size_t n : cfg.n_list) {
        const auto spec = cfg.spec_for(n);
        try {
          const auto s = norm_check(spec, cfg.trials, {cfg.master_seed, 0});
          const auto row = base_row(cfg, spec, spec.columns());
          add_metric(out.table, row, "mean_norm", s.mean_norm, s.mean_norm_se);
          add_metric(out.table, row, "max_norm", s.max_norm, 0.0);
        } catch (const CapacityError& e) {
          record_failure(n, e);
        } catch (const NumericalError& e) {
          record_failure(n, e);
        }
      }
      break;
  }
  return out;
}

std::string format_csv(const MetricTable& table) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : table) {
    out += r.experiment + ',' + r.kind + ',' + std::to_string(r.n) + ',' + std::to_string(r.cols) +
           ',' + std::to_string(r.c_num) + ',' + std::to_string(r.c_den) + ',' +
           std::to_string(r.beta) + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.master_seed) + ',' + r.metric_name + ',' +
           format_double(r.metric_value) + ',' + format_double(r.std_error) + '\n';
  }
  return out;
}

std::string format_json(const MetricTable& table) {
  json rows = json::array();
  for (const auto& r : table) {
    rows.push_back({{"experiment", r.experiment},
                    {"kind", r.kind},
                    {"n", r.n},
                    {"N", r.cols},
                    {"c_num", r.c_num},
                    {"c_den", r.c_den},
                    {"beta", r.beta},
                    {"trials", r.trials},
                    {"master_seed", r.master_seed},
                    {"metric_name", r.metric_name},
                    {"metric_value", r.metric_value},
                    {"stderr", r.std_error}});
  }
  return rows.dump(2) + '\n';
}

MetricTable parse_metrics_json(std::string_view text) {
  const json rows = parse_strict(text);
  if (!rows.is_array()) throw ValidationError("", "metric output must be a JSON array");
  MetricTable table;
  for (const auto& j : rows) {
    MetricRow r;
    r.experiment = get_as<std::string>(j, "experiment");
    r.kind = get_as<std::string>(j, "kind");
    r.n = get_as<std::size_t>(j, "n");
    r.cols = get_as<std::size_t>(j, "N");
    r.c_num = get_as<std::int64_t>(j, "c_num");
    r.c_den = get_as<std::int64_t>(j, "c_den");
    r.beta = get_as<std::size_t>(j, "beta");
    r.trials = get_as<std::size_t>(j, "trials");
    r.master_seed = get_as<std::uint64_t>(j, "master_seed");
    r.metric_name = get_as<std::string>(j, "metric_name");
    r.metric_value = get_as<double>(j, "metric_value");
    r.std_error = get_as<double>(j, "stderr");
    table.push_back(std::move(r));
  }
  return table;
}

void emit(const MetricTable& table, const std::string& path, OutputFormat format) {
  const std::string text = format == OutputFormat::Csv ? format_csv(table) : format_json(table);
  if (path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw IoError("<stdout>", "write failed");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

std::string cache_file_name(const EnsembleSpec& spec, Seed seed) {
  const std::string key = to_json(spec).dump() + "|" + std::to_string(seed.master) + "|" +
                          std::to_string(seed.trial);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data()) + ".esd";
}

MpEvalConfig parse_mp_eval_config(std::string_view text) {
  const json j = parse_strict(text);
  if (!j.is_object()) throw ValidationError("", "config must be a JSON object");
  for (const auto& item : j.items()) {
    static constexpr std::array<std::string_view, 7> keys{"c",      "x_min",  "x_max", "points",
                                                          "v",      "output", "format"};
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      throw ValidationError(item.key(), "unknown key");
    }
  }
  if (!j.contains("c")) throw ValidationError("c", "is required");
  MpEvalConfig cfg;
  cfg.c = finite_number(j, "c");
  if (!(cfg.c > 0.0)) throw ValidationError("c", "must be positive");
  if (j.contains("x_min")) cfg.x_min = finite_number(j, "x_min");
  if (j.contains("x_max")) cfg.x_max = finite_number(j, "x_max");
  if (j.contains("points")) cfg.points = positive_size(j, "points");
  if (j.contains("v")) cfg.v = finite_number(j, "v");
  if (!(cfg.v > 0.0)) throw ValidationError("v", "must be positive");
  if (j.contains("output")) cfg.output = get_as<std::string>(j, "output");
  if (j.contains("format")) {
    const auto f = get_as<std::string>(j, "format");
    if (f != "csv" && f != "json") throw ValidationError("format", "must be \"csv\" or \"json\"");
    cfg.format = f == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  }
  const MPLaw law = MPLaw::with_ratio(cfg.c);
  if (cfg.x_min.value_or(0.0) >= cfg.x_max.value_or(law.b + 1.0)) {
    throw ValidationError("x_max", "must exceed x_min");
  }
  return cfg;
}

std::string format_mp_eval(const MpEvalConfig& cfg) {
  const MPLaw law = MPLaw::with_ratio(cfg.c);
  const double lo = cfg.x_min.value_or(0.0);
  const double hi = cfg.x_max.value_or(law.b + 1.0);
  const double step = cfg.points > 1 ? (hi - lo) / static_cast<double>(cfg.points - 1) : 0.0;
  std::string csv = "x,density,cdf,stieltjes_re,stieltjes_im\n";
  json rows = json::array();
  for (std::size_t i = 0; i < cfg.points; ++i) {
    const double x = i + 1 == cfg.points && cfg.points > 1 ? hi : lo + step * static_cast<double>(i);
    const double density = mp_density(law, x);
    const double cdf = mp_cdf(law, x);
    const complex m = mp_stieltjes_closed(law, {x, cfg.v});
    csv += format_double(x) + ',' + format_double(density) + ',' + format_double(cdf) + ',' +
           format_double(m.real()) + ',' + format_double(m.imag()) + '\n';
    rows.push_back({{"x", x},
                    {"density", density},
                    {"cdf", cdf},
                    {"stieltjes_re", m.real()},
                    {"stieltjes_im", m.imag()}});
  }
  return cfg.format == OutputFormat::Csv ? csv : rows.dump(2) + '\n';
}

}  // namespace mpspectra
