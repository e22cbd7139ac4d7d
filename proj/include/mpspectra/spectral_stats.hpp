#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mpspectra/ensembles.hpp"
#include "mpspectra/mp_law.hpp"

namespace mpspectra {

/// Sorted eigenvalues of (1/n) A A^T. Eigenvalues within the zero-snap threshold are
/// stored as exact zeros and counted in zero_multiplicity.
class SpectralSample {
 public:
  SpectralSample() = default;

  /// Sorts, snaps |lambda| <= zero_snap_threshold(lambda_max) to 0 and counts the zeros.
  static SpectralSample from_eigenvalues(std::vector<double> eigenvalues, EnsembleSpec spec = {},
                                         Seed seed = {});

  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  std::size_t size() const noexcept { return eigenvalues_.size(); }
  std::size_t zero_multiplicity() const noexcept { return zero_multiplicity_; }
  const EnsembleSpec& spec() const noexcept { return spec_; }
  const Seed& seed() const noexcept { return seed_; }

  friend bool operator==(const SpectralSample&, const SpectralSample&) = default;

 private:
  std::vector<double> eigenvalues_;
  std::size_t zero_multiplicity_ = 0;
  EnsembleSpec spec_;
  Seed seed_;
};

/// Right-continuous step distribution function placing equal weight on each stored value.
/// Averaging k samples of equal size pools their values, which is exactly the mean of the
/// individual step functions.
class ESD {
 public:
  ESD() = default;
  explicit ESD(const SpectralSample& sample);
  /// Values need not be sorted.
  explicit ESD(std::vector<double> values);

  /// #{lambda_i <= x} / count.
  double operator()(double x) const;
  /// #{lambda_i < x} / count.
  double left_limit(double x) const;

  std::span<const double> values() const noexcept { return values_; }
  std::size_t count() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// Computes the spectrum of gram(sample.matrix).
SpectralSample esd_from_matrix(const MatrixSample& sample);

double esd_eval(const ESD& esd, double x);

/// (1/n) sum 1 / (lambda_i - z). Throws DomainError for z.im <= 0.
complex empirical_stieltjes(const SpectralSample& s, ComplexPoint z);
complex empirical_stieltjes(std::span<const double> eigenvalues, ComplexPoint z);

/// sup_x |F_emp(x) - F_c(x)|, evaluated exactly at the jumps of F_emp and at the origin.
double kolmogorov_distance(const ESD& esd, const MPLaw& law);

/// Throws DomainError when samples is empty or the sizes differ.
ESD average_esd(std::span<const SpectralSample> samples);

/// Binary cache format "ESD1": magic, u32 version = 1, u64 n, u64 N, u64 master seed,
/// u64 trial, u64 count, then count doubles; all little-endian.
void write_spectral_sample(const std::filesystem::path& path, const SpectralSample& s);

/// Reads an ESD1 file. `spec` supplies the ensemble metadata not stored in the file; its n and
/// N must match the header. Throws IoError on wrong magic, version, size or truncation.
SpectralSample read_spectral_sample(const std::filesystem::path& path, const EnsembleSpec& spec);

}  // namespace mpspectra
