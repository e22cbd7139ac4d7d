#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "mpspectra/error.hpp"
#include "mpspectra/spectral_stats.hpp"
#include "oracles.hpp"

using namespace mpspectra;
namespace fs = std::filesystem;

namespace {

EnsembleSpec gaussian(std::size_t n, std::int64_t num, std::int64_t den) {
  return EnsembleSpec{EnsembleKind::IidGaussian, n, Rational::make(num, den), 0};
}

double mp_quantile(const MPLaw& law, double level) {
  double lo = 0.0, hi = law.b;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mp_cdf(law, mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "mpspectra_test_spectral";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("esd_from_matrix examples") {
  const auto spec2 = gaussian(2, 1, 1);
  const auto half = esd_from_matrix({spec2, {}, RealMatrix(2, 2, {1, 0, 0, 1})});
  REQUIRE(half.size() == 2);
  CHECK(half.eigenvalues()[0] == doctest::Approx(0.5));
  CHECK(half.eigenvalues()[1] == doctest::Approx(0.5));
  CHECK(half.zero_multiplicity() == 0);

  const auto spec3 = gaussian(3, 5, 3);
  const auto ones = esd_from_matrix({spec3, {}, RealMatrix(3, 5, std::vector<double>(15, 1.0))});
  CHECK(ones.eigenvalues()[0] == 0.0);
  CHECK(ones.eigenvalues()[1] == 0.0);
  CHECK(ones.eigenvalues()[2] == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(ones.zero_multiplicity() == 2);

  const auto column = sample(gaussian(2, 1, 2), {4, 4});
  const auto rank1 = esd_from_matrix(column);
  CHECK(rank1.zero_multiplicity() >= 1);
  CHECK(rank1.eigenvalues()[0] == 0.0);
  CHECK(rank1.spec() == column.spec);
  CHECK(rank1.seed() == Seed{4, 4});
}

TEST_CASE("rank-deficient samples carry at least n - N zeros") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto s = esd_from_matrix(sample(gaussian(40, 1, 4), {12, t}));
    CHECK(s.zero_multiplicity() >= 30);
    CHECK(std::is_sorted(s.eigenvalues().begin(), s.eigenvalues().end()));
    for (std::size_t i = 0; i < s.zero_multiplicity(); ++i) CHECK(s.eigenvalues()[i] == 0.0);
  }
}

TEST_CASE("snapping clamps tiny negatives") {
  const auto s = SpectralSample::from_eigenvalues({3.0, -1e-12, 1e-10, 2.0});
  CHECK(s.zero_multiplicity() == 2);
  CHECK(s.eigenvalues()[0] == 0.0);
  CHECK(s.eigenvalues()[1] == 0.0);
  CHECK(s.eigenvalues()[3] == 3.0);
}

TEST_CASE("esd_eval") {
  const ESD e(std::vector<double>{1, 2, 3});
  CHECK(esd_eval(e, 2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(esd_eval(e, 0.0) == 0.0);
  CHECK(esd_eval(e, 3.0) == 1.0);
  CHECK(e.left_limit(2.0) == doctest::Approx(1.0 / 3.0));
  const ESD triple(std::vector<double>{1, 1, 1});
  CHECK(esd_eval(triple, 1.0) == 1.0);
  CHECK(triple.left_limit(1.0) == 0.0);
  CHECK(esd_eval(ESD(std::vector<double>{3, 1, 2}), 1.5) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("empirical stieltjes") {
  const std::vector<double> one{1.0};
  const complex s1 = empirical_stieltjes(one, {0.0, 1.0});
  CHECK(s1.real() == doctest::Approx(0.5));
  CHECK(s1.imag() == doctest::Approx(0.5));
  const std::vector<double> two{0.0, 2.0};
  const complex s2 = empirical_stieltjes(two, {0.0, 1.0});
  CHECK(s2.real() == doctest::Approx(0.2));
  CHECK(s2.imag() == doctest::Approx(0.6));
  CHECK_THROWS_AS(empirical_stieltjes(two, {0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(empirical_stieltjes(two, {0.0, -1.0}), DomainError);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> re(-5.0, 10.0), im(1e-3, 2.0);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto s = esd_from_matrix(sample(gaussian(30, 1, 2), {2, t}));
    CHECK(std::abs(empirical_stieltjes(s, {0.0, 1.0})) <= 1.0);
    for (int k = 0; k < 20; ++k) {
      const ComplexPoint z{re(gen), im(gen)};
      const complex value = empirical_stieltjes(s, z);
      CHECK(value.imag() > 0.0);
      CHECK(std::abs(value) <= 1.0 / z.im * (1 + 1e-12));
      CHECK(std::imag(z.value() * value) >= 0.0);
    }
  }
}

TEST_CASE("empirical stieltjes matches the resolvent trace") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    const std::size_t n = 6 + 2 * t;
    const auto ms = sample(gaussian(n, 3, 2), {21, t});
    const auto g = gram(ms.matrix);
    std::vector<double> dense(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dense[i * n + j] = g(i, j);
    for (const ComplexPoint z : {ComplexPoint{0.5, 0.3}, ComplexPoint{2.0, 1.0},
                                 ComplexPoint{-1.0, 0.05}}) {
      const complex want = oracle::resolvent_trace(dense, n, z.value());
      CHECK(std::abs(empirical_stieltjes(esd_from_matrix(ms), z) - want) <= 1e-9);
    }
  }
}

TEST_CASE("kolmogorov distance examples") {
  CHECK(kolmogorov_distance(ESD(std::vector<double>{0, 0}), MPLaw::with_ratio(0.5)) ==
        doctest::Approx(0.5));
  // Eigenvalues placed at the (i - 1/2)/n quantiles.
  const auto law = MPLaw::with_ratio(1.0);
  std::vector<double> q;
  for (int i = 1; i <= 4; ++i) q.push_back(mp_quantile(law, (i - 0.5) / 4.0));
  CHECK(std::abs(kolmogorov_distance(ESD(q), law) - 0.125) <= 1e-10);
  // A single point far above the support.
  CHECK(kolmogorov_distance(ESD(std::vector<double>{100.0}), law) == doctest::Approx(1.0));
  CHECK_THROWS_AS(kolmogorov_distance(ESD(), law), DomainError);
}

TEST_CASE("kolmogorov distance agrees with the dense-grid oracle") {
  std::mt19937_64 gen(13);
  for (double c : {0.5, 2.0}) {
    const auto law = MPLaw::with_ratio(c);
    const auto grid = oracle::mp_grid_cdf(c, -1.0, law.b + 1.0, 1000001);
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = 4 + (static_cast<std::size_t>(k) * 7) % 61;
      std::vector<double> values;
      if (k % 5 == 4) {
        std::uniform_real_distribution<double> u(-0.5, law.b + 0.5);
        for (std::size_t i = 0; i < n; ++i) values.push_back(u(gen));
      } else {
        const auto num = static_cast<std::int64_t>(std::round(c * 2));
        const auto spec = EnsembleSpec{k % 2 ? EnsembleKind::IidRademacher : EnsembleKind::IidGaussian,
                                       n % 2 ? n + 1 : n, Rational::make(num, 2), 0};
        const auto s = esd_from_matrix(sample(spec, {99, static_cast<std::uint64_t>(k)}));
        values.assign(s.eigenvalues().begin(), s.eigenvalues().end());
      }
      std::sort(values.begin(), values.end());
      const double exact = kolmogorov_distance(ESD(values), law);
      CHECK(std::abs(exact - oracle::grid_kolmogorov(values, grid)) <= 1e-5);
    }
  }
}

TEST_CASE("average_esd") {
  const auto a = SpectralSample::from_eigenvalues({1.0});
  const auto b = SpectralSample::from_eigenvalues({3.0});
  const std::vector<SpectralSample> pair{a, b};
  const ESD avg = average_esd(pair);
  CHECK(avg(1.0) == 0.5);
  CHECK(avg(2.9) == 0.5);
  CHECK(avg(3.0) == 1.0);
  CHECK(avg.left_limit(1.0) == 0.0);

  const auto s = SpectralSample::from_eigenvalues({0.5, 1.5, 2.0});
  const std::vector<SpectralSample> copies(4, s);
  const ESD pooled = average_esd(copies);
  const ESD single(s);
  for (double x : {0.0, 0.5, 1.0, 1.5, 1.9, 2.0, 3.0}) CHECK(pooled(x) == single(x));

  const std::vector<SpectralSample> mismatched{a, s};
  CHECK_THROWS_AS(average_esd(mismatched), DomainError);
  CHECK_THROWS_AS(average_esd(std::span<const SpectralSample>{}), DomainError);
}

TEST_CASE("averaging beats the median single trial and never exceeds the worst one") {
  const auto spec = gaussian(256, 2, 1);
  const auto law = MPLaw::with_ratio(2.0);
  std::vector<SpectralSample> samples;
  std::vector<double> singles;
  for (std::uint64_t t = 0; t < 50; ++t) {
    samples.push_back(esd_from_matrix(sample(spec, {2718, t})));
    singles.push_back(kolmogorov_distance(ESD(samples.back()), law));
  }
  const double averaged = kolmogorov_distance(average_esd(samples), law);
  auto sorted = singles;
  std::sort(sorted.begin(), sorted.end());
  CHECK(averaged < 0.5 * (sorted[24] + sorted[25]));
  CHECK(averaged <= sorted.back());
}

TEST_CASE("ESD1 cache round trip and layout") {
  const auto spec = gaussian(8, 3, 2);
  const auto original = esd_from_matrix(sample(spec, {0x0102030405060708ULL, 9}));
  const auto path = scratch("round.esd");
  write_spectral_sample(path, original);
  const auto bytes = slurp(path);
  REQUIRE(bytes.size() == 4 + 4 + 5 * 8 + 8 * 8);
  CHECK(std::memcmp(bytes.data(), "ESD1", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 8);   // n, little-endian
  CHECK(bytes[16] == 12); // N
  CHECK(static_cast<unsigned char>(bytes[24]) == 0x08);  // master seed low byte
  CHECK(static_cast<unsigned char>(bytes[31]) == 0x01);
  CHECK(bytes[32] == 9);  // trial
  CHECK(bytes[40] == 8);  // count

  const auto back = read_spectral_sample(path, spec);
  CHECK(back == original);

  SUBCASE("rejects corruption") {
    auto bad = bytes;
    bad[3] = '2';
    dump(path, bad);
    CHECK_THROWS_AS(read_spectral_sample(path, spec), IoError);

    bad = bytes;
    bad[4] = 2;
    dump(path, bad);
    CHECK_THROWS_AS(read_spectral_sample(path, spec), IoError);

    bad = bytes;
    bad.resize(bad.size() - 3);
    dump(path, bad);
    CHECK_THROWS_AS(read_spectral_sample(path, spec), IoError);

    dump(path, bytes);
    CHECK_THROWS_AS(read_spectral_sample(path, gaussian(8, 1, 1)), IoError);

    // Swap the two largest eigenvalues' bytes to break the ordering.
    bad = bytes;
    std::swap_ranges(bad.end() - 16, bad.end() - 8, bad.end() - 8);
    dump(path, bad);
    CHECK_THROWS_AS(read_spectral_sample(path, spec), IoError);
  }
  CHECK_THROWS_AS(read_spectral_sample(scratch("missing.esd"), spec), IoError);
}
