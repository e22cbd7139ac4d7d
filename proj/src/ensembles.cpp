#include "mpspectra/ensembles.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <utility>

#include "mpspectra/error.hpp"

namespace mpspectra {

namespace {

constexpr std::array<std::pair<EnsembleKind, std::string_view>, 4> kKindNames{{
    {EnsembleKind::IidGaussian, "IID_GAUSSIAN"},
    {EnsembleKind::IidRademacher, "IID_RADEMACHER"},
    {EnsembleKind::SumZeroBernoulliRows, "SUM_ZERO_BERNOULLI_ROWS"},
    {EnsembleKind::MovingAverageRows, "MOVING_AVERAGE_ROWS"},
}};

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw SpecError("malformed integer '" + std::string(text) + "' in aspect ratio");
  }
  return value;
}

}  // namespace

std::string_view to_string(EnsembleKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "UNKNOWN";
}

EnsembleKind parse_ensemble_kind(std::string_view name) {
  for (const auto& [k, known] : kKindNames) {
    if (known == name) return k;
  }
  throw SpecError("unknown ensemble kind '" + std::string(name) + "'");
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0) {
    throw SpecError("aspect ratio must be a positive rational, got " + std::to_string(num) + "/" +
                    std::to_string(den));
  }
  const std::int64_t g = std::gcd(num, den);
  return Rational{num / g, den / g};
}

Rational Rational::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return make(parse_int(text), 1);
  return make(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

std::size_t EnsembleSpec::columns() const {
  if (n == 0) throw SpecError("row count n must be positive");
  const Rational r = Rational::make(aspect.num, aspect.den);
  const auto rows = static_cast<std::int64_t>(n);
  if (rows % r.den != 0) {
    throw SpecError("N = " + r.str() + " * " + std::to_string(n) + " is not an integer");
  }
  return static_cast<std::size_t>(rows / r.den * r.num);
}

void EnsembleSpec::validate() const {
  const std::size_t cols = columns();
  if (kind == EnsembleKind::SumZeroBernoulliRows && cols % 2 != 0) {
    throw SpecError("SUM_ZERO_BERNOULLI_ROWS requires an even row length, got N = " +
                    std::to_string(cols));
  }
  if (kind == EnsembleKind::MovingAverageRows) {
    if (beta >= n) {
      throw SpecError("dependence range beta = " + std::to_string(beta) + " must be below n = " +
                      std::to_string(n));
    }
  } else if (beta != 0) {
    throw SpecError("beta is only meaningful for MOVING_AVERAGE_ROWS");
  }
}

void balanced_row(std::span<double> row, CounterRng& rng) {
  const std::size_t length = row.size();
  if (length == 0 || length % 2 != 0) {
    throw SpecError("balanced rows need a positive even length, got " + std::to_string(length));
  }
  for (std::size_t i = 0; i < length; ++i) row[i] = i < length / 2 ? 1.0 : -1.0;
  for (std::size_t i = length - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(row[i], row[j]);
  }
}

std::vector<double> balanced_row(std::size_t length, CounterRng& rng) {
  std::vector<double> row(length);
  balanced_row(std::span<double>(row), rng);
  return row;
}

MatrixSample sample(const EnsembleSpec& spec, Seed seed) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::size_t cols = spec.columns();
  CounterRng rng(seed);
  RealMatrix matrix(n, cols);

  switch (spec.kind) {
    case EnsembleKind::IidGaussian:
      for (double& x : matrix.data()) x = rng.normal();
      break;
    case EnsembleKind::IidRademacher:
      for (double& x : matrix.data()) x = (rng() >> 63) != 0 ? 1.0 : -1.0;
      break;
    case EnsembleKind::SumZeroBernoulliRows:
      for (std::size_t i = 0; i < n; ++i) balanced_row(matrix.row(i), rng);
      break;
    case EnsembleKind::MovingAverageRows: {
      const std::size_t window = spec.beta + 1;
      RealMatrix aux(n + spec.beta, cols);
      for (double& x : aux.data()) x = rng.normal();
      const double scale = 1.0 / std::sqrt(static_cast<double>(window));
      for (std::size_t k = 0; k < n; ++k) {
        auto out = matrix.row(k);
        for (std::size_t t = 0; t < window; ++t) {
          const auto g = aux.row(k + t);
          for (std::size_t j = 0; j < cols; ++j) out[j] += g[j];
        }
        for (double& x : out) x *= scale;
      }
      break;
    }
  }
  return MatrixSample{spec, seed, std::move(matrix)};
}

RowMoments ensemble_moments(EnsembleKind kind, std::size_t length) {
  switch (kind) {
    case EnsembleKind::IidGaussian:
    case EnsembleKind::IidRademacher:
      return {0.0, 0.0};
    case EnsembleKind::SumZeroBernoulliRows: {
      if (length < 2 || length % 2 != 0) {
        throw DomainError("balanced rows need a positive even length");
      }
      const double l = static_cast<double>(length);
      const double quad = length >= 4 ? 3.0 / ((l - 1.0) * (l - 3.0)) : 0.0;
      return {-1.0 / (l - 1.0), quad};
    }
    case EnsembleKind::MovingAverageRows:
      break;
  }
  throw DomainError("no closed-form row moments for " + std::string(to_string(kind)));
}

nlohmann::json to_json(const EnsembleSpec& spec) {
  return nlohmann::json{{"kind", std::string(to_string(spec.kind))},
                        {"n", spec.n},
                        {"aspect_num", spec.aspect.num},
                        {"aspect_den", spec.aspect.den},
                        {"beta", spec.beta}};
}

EnsembleSpec ensemble_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SpecError("ensemble spec must be a JSON object");
  static constexpr std::array<std::string_view, 5> keys{"kind", "n", "aspect_num", "aspect_den",
                                                        "beta"};
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || item.key() == k;
    if (!known) throw SpecError("unknown ensemble spec key '" + item.key() + "'");
  }
  for (auto k : keys) {
    if (!j.contains(k)) throw SpecError("missing ensemble spec key '" + std::string(k) + "'");
  }
  try {
    EnsembleSpec spec;
    spec.kind = parse_ensemble_kind(j.at("kind").get<std::string>());
    spec.n = j.at("n").get<std::size_t>();
    spec.aspect = Rational::make(j.at("aspect_num").get<std::int64_t>(),
                                 j.at("aspect_den").get<std::int64_t>());
    spec.beta = j.at("beta").get<std::size_t>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("ensemble spec has a mistyped field: ") + e.what());
  }
}

}  // namespace mpspectra
