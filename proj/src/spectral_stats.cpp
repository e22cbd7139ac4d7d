#include "mpspectra/spectral_stats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mpspectra/error.hpp"
#include "mpspectra/linalg.hpp"

namespace mpspectra {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'S', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw IoError(path.string(), "truncated ESD1 file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

SpectralSample SpectralSample::from_eigenvalues(std::vector<double> eigenvalues, EnsembleSpec spec,
                                                Seed seed) {
  SpectralSample s;
  std::sort(eigenvalues.begin(), eigenvalues.end());
  if (!eigenvalues.empty()) {
    const double threshold = zero_snap_threshold(eigenvalues.back());
    for (double& x : eigenvalues) {
      if (std::abs(x) <= threshold) {
        x = 0.0;
        ++s.zero_multiplicity_;
      }
    }
  }
  s.eigenvalues_ = std::move(eigenvalues);
  s.spec_ = spec;
  s.seed_ = seed;
  return s;
}

ESD::ESD(const SpectralSample& sample)
    : values_(sample.eigenvalues().begin(), sample.eigenvalues().end()) {}

ESD::ESD(std::vector<double> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
}

double ESD::operator()(double x) const {
  if (values_.empty()) return 0.0;
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double ESD::left_limit(double x) const {
  if (values_.empty()) return 0.0;
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

SpectralSample esd_from_matrix(const MatrixSample& sample) {
  return SpectralSample::from_eigenvalues(eigenvalues_sym(gram(sample.matrix)), sample.spec,
                                          sample.seed);
}

double esd_eval(const ESD& esd, double x) { return esd(x); }

complex empirical_stieltjes(std::span<const double> eigenvalues, ComplexPoint z) {
  if (!(z.im > 0.0)) throw DomainError("empirical Stieltjes transform requires Im z > 0");
  if (eigenvalues.empty()) throw DomainError("empirical Stieltjes transform of an empty spectrum");
  // 1 / (lambda - z) = ((lambda - u) + i v) / ((lambda - u)^2 + v^2)
  double re = 0.0;
  double im = 0.0;
  const double v2 = z.im * z.im;
  for (double lambda : eigenvalues) {
    const double d = lambda - z.re;
    const double inv = 1.0 / (d * d + v2);
    re += d * inv;
    im += z.im * inv;
  }
  const double scale = 1.0 / static_cast<double>(eigenvalues.size());
  return {re * scale, im * scale};
}

complex empirical_stieltjes(const SpectralSample& s, ComplexPoint z) {
  return empirical_stieltjes(s.eigenvalues(), z);
}

double kolmogorov_distance(const ESD& esd, const MPLaw& law) {
  const auto values = esd.values();
  if (values.empty()) throw DomainError("Kolmogorov distance of an empty ESD");
  const double total = static_cast<double>(values.size());
  double sup = 0.0;
  const auto consider = [&](double empirical, double reference) {
    sup = std::max(sup, std::abs(empirical - reference));
  };
  std::size_t i = 0;
  while (i < values.size()) {
    const double lambda = values[i];
    std::size_t j = i;
    while (j < values.size() && values[j] == lambda) ++j;
    const double at = mp_cdf(law, lambda);
    // F_c is continuous except for the atom at the origin.
    const double before = lambda == 0.0 ? 0.0 : at;
    consider(static_cast<double>(j) / total, at);
    consider(static_cast<double>(i) / total, before);
    i = j;
  }
  consider(esd(0.0), mp_cdf(law, 0.0));
  consider(esd.left_limit(0.0), 0.0);
  return sup;
}

ESD average_esd(std::span<const SpectralSample> samples) {
  if (samples.empty()) throw DomainError("average_esd needs at least one sample");
  const std::size_t n = samples.front().size();
  std::vector<double> pooled;
  pooled.reserve(n * samples.size());
  for (const auto& s : samples) {
    if (s.size() != n) throw DomainError("average_esd requires samples of equal size");
    pooled.insert(pooled.end(), s.eigenvalues().begin(), s.eigenvalues().end());
  }
  return ESD(std::move(pooled));
}

void write_spectral_sample(const std::filesystem::path& path, const SpectralSample& s) {
  if (s.size() != s.spec().n) {
    throw DomainError("spectral sample size does not match its ensemble row count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u64(out, s.spec().n);
  put_u64(out, s.spec().columns());
  put_u64(out, s.seed().master);
  put_u64(out, s.seed().trial);
  put_u64(out, s.size());
  for (double x : s.eigenvalues()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

SpectralSample read_spectral_sample(const std::filesystem::path& path, const EnsembleSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError(path.string(), "bad magic, expected ESD1");
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError(path.string(), "unsupported ESD1 version " + std::to_string(version));
  }
  const auto n = get_le<std::uint64_t>(in, path);
  const auto cols = get_le<std::uint64_t>(in, path);
  Seed seed;
  seed.master = get_le<std::uint64_t>(in, path);
  seed.trial = get_le<std::uint64_t>(in, path);
  const auto count = get_le<std::uint64_t>(in, path);
  if (n != spec.n || cols != spec.columns()) {
    throw IoError(path.string(), "header dimensions do not match the requested ensemble");
  }
  if (count != n) throw IoError(path.string(), "eigenvalue count differs from n");
  std::vector<double> values(count);
  for (auto& x : values) {
    x = std::bit_cast<double>(get_le<std::uint64_t>(in, path));
    if (!std::isfinite(x)) throw IoError(path.string(), "non-finite eigenvalue");
  }
  if (!std::is_sorted(values.begin(), values.end())) {
    throw IoError(path.string(), "eigenvalues are not in nondecreasing order");
  }
  return SpectralSample::from_eigenvalues(std::move(values), spec, seed);
}

}  // namespace mpspectra
