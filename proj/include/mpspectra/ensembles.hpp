#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpspectra/linalg.hpp"
#include "mpspectra/rng.hpp"

namespace mpspectra {

enum class EnsembleKind {
  IidGaussian,
  IidRademacher,
  /// Each row uniform over the balanced +-1 vectors (row sum exactly zero).
  SumZeroBernoulliRows,
  /// r_k = (g_k + ... + g_{k+beta}) / sqrt(beta + 1) over i.i.d. Gaussian rows g.
  /// Rows more than beta apart are independent. Conditional row means given the other
  /// rows are not zero, so this family is only meant for variance experiments.
  MovingAverageRows,
};

/// Canonical names: IID_GAUSSIAN, IID_RADEMACHER, SUM_ZERO_BERNOULLI_ROWS, MOVING_AVERAGE_ROWS.
std::string_view to_string(EnsembleKind kind);
/// Throws SpecError for an unknown name.
EnsembleKind parse_ensemble_kind(std::string_view name);

/// Positive rational number kept in lowest terms.
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  /// Reduces by the gcd. Throws SpecError unless num > 0 and den > 0.
  static Rational make(std::int64_t num, std::int64_t den);
  /// Parses "p/q" or "p". Throws SpecError on malformed text.
  static Rational parse(std::string_view text);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
};

/// Declarative description of an n x N ensemble with N = aspect * n.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::IidGaussian;
  std::size_t n = 1;
  Rational aspect;
  std::size_t beta = 0;

  /// N = aspect * n. Throws SpecError when that is not a positive integer.
  std::size_t columns() const;
  /// Aspect ratio c_n = N / n as a double.
  double ratio() const { return aspect.value(); }
  /// Throws SpecError on any violated invariant.
  void validate() const;

  friend bool operator==(const EnsembleSpec&, const EnsembleSpec&) = default;
};

struct MatrixSample {
  EnsembleSpec spec;
  Seed seed;
  RealMatrix matrix;
};

/// Draws one n x N matrix; a pure function of (spec, seed).
MatrixSample sample(const EnsembleSpec& spec, Seed seed);

/// Fills `row` with a uniformly random balanced +-1 vector by shuffling a half/half template.
/// Throws SpecError for odd or zero length.
void balanced_row(std::span<double> row, CounterRng& rng);
std::vector<double> balanced_row(std::size_t length, CounterRng& rng);

/// Exact row moments E[z_i z_j] and E[z_i z_j z_l z_m] for distinct indices.
struct RowMoments {
  double pair_corr = 0.0;
  double quad_mixed = 0.0;
};

/// (0, 0) for i.i.d. kinds; (-1/(L-1), 3/((L-1)(L-3))) for balanced rows of length L.
/// The fourth moment is reported as 0 when L < 4 (no distinct 4-tuples).
/// Throws DomainError for MovingAverageRows or an invalid length.
RowMoments ensemble_moments(EnsembleKind kind, std::size_t length);

/// {kind, n, aspect_num, aspect_den, beta}
nlohmann::json to_json(const EnsembleSpec& spec);
/// Strict inverse of to_json: unknown or missing keys throw SpecError.
EnsembleSpec ensemble_spec_from_json(const nlohmann::json& j);

}  // namespace mpspectra
