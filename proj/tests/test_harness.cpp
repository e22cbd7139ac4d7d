#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpspectra/error.hpp"
#include "mpspectra/harness.hpp"

using namespace mpspectra;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1})";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const char* name) {
  const auto dir = fs::temp_directory_path() / "mpspectra_test_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string expect_validation_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal config gets documented defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.experiment == Experiment::Sweep);
  CHECK(cfg.kind == EnsembleKind::IidGaussian);
  CHECK(cfg.aspect == Rational{2, 1});
  CHECK(cfg.n_list == std::vector<std::size_t>{64});
  CHECK(cfg.master_seed == 1);
  CHECK(cfg.trials == 20);
  CHECK(cfg.alpha == 8.0);
  CHECK(cfg.v == 0.5);
  CHECK(cfg.points == 33);
  CHECK(cfg.reference == ReferenceLaw::LawAtCn);
  CHECK(cfg.beta == 0);
  CHECK(cfg.output == "-");
  CHECK(cfg.format == OutputFormat::Csv);
  CHECK_FALSE(cfg.cache_dir.has_value());
}

TEST_CASE("config round-trips through json") {
  const auto cfg = parse_config(
      R"({"experiment":"RESIDUAL","kind":"IID_RADEMACHER","aspect":"3/2","n_list":[4,8],
          "master_seed":18446744073709551615,"trials":3,"alpha":2.5,"v":0.25,"points":5,
          "reference":"LAW_AT_C","limit_c":1.5,"format":"json","output":"x.json"})");
  CHECK(cfg.master_seed == 18446744073709551615ULL);
  const auto again = parse_config(to_json(cfg).dump());
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("config validation names the offending key") {
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"SUM_ZERO_BERNOULLI_ROWS","aspect":"1/2","n_list":[5],"master_seed":1})") ==
        "n_list");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1,"colour":3})") ==
        "colour");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64,32],"master_seed":1})") ==
        "n_list");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[],"master_seed":1})") ==
        "n_list");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":-1})") ==
        "master_seed");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1,"trials":0})") ==
        "trials");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64]})") ==
        "master_seed");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"GAUSS","aspect":"2/1","n_list":[64],"master_seed":1})") ==
        "kind");
  CHECK(expect_validation_key(
            R"({"experiment":"VARCHECK","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1})") ==
        "kind");
  CHECK(expect_validation_key(
            R"({"experiment":"RESIDUAL","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1,"v":2})") ==
        "v");
  CHECK(expect_validation_key(
            R"({"experiment":"SWEEP","kind":"MOVING_AVERAGE_ROWS","aspect":"1/1","n_list":[4],"beta":4,"master_seed":1})") ==
        "n_list");
  CHECK(expect_validation_key(R"([1,2])") == "");
}

TEST_CASE("duplicate keys and malformed text") {
  CHECK_THROWS_AS(
      parse_config(
          R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[64],"master_seed":1,"master_seed":2})"),
      ValidationError);
  try {
    parse_config("{\n  \"experiment\": \"SWEEP\",\n  oops\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 1);
  }
}

TEST_CASE("reference law selection") {
  auto cfg = parse_config(
      R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"3/2","n_list":[4],"master_seed":1})");
  CHECK(cfg.reference_law(4).c == 1.5);
  cfg = parse_config(
      R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"3/2","n_list":[4],"master_seed":1,"reference":"LAW_AT_C","limit_c":2})");
  CHECK(cfg.reference_law(4).c == 2.0);
}

TEST_CASE("smoke sweep at n = 1") {
  for (const char* kind : {"IID_GAUSSIAN", "IID_RADEMACHER", "SUM_ZERO_BERNOULLI_ROWS"}) {
    const auto cfg = parse_config(std::string(R"({"experiment":"SWEEP","kind":")") + kind +
                                  R"(","aspect":"2/1","n_list":[1],"trials":1,"master_seed":3})");
    const auto result = run_sweep(cfg);
    REQUIRE(result.rows.size() == 1);
    const auto& row = result.rows[0];
    CHECK(row.error.empty());
    CHECK(row.n == 1);
    CHECK(row.cols == 2);
    CHECK(row.kdist_of_average >= 0.0);
    CHECK(row.kdist_of_average <= 1.0);
    CHECK(row.kdist_mean_single == row.kdist_of_average);
    CHECK(row.se == 0.0);
  }
}

TEST_CASE("sweep properties") {
  const auto cfg = parse_config(
      R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[16,64],"trials":6,"master_seed":9})");
  const auto result = run_sweep(cfg);
  REQUIRE(result.rows.size() == 2);
  for (const auto& row : result.rows) {
    CHECK(row.kdist_of_average >= 0.0);
    CHECK(row.kdist_of_average <= row.kdist_mean_single + 1e-12);
    CHECK(row.kdist_mean_single <= 1.0);
    CHECK(row.se_of_average > 0.0);
    CHECK(row.wall_time_s >= 0.0);
  }
  CHECK(result.rows[1].kdist_mean_single < result.rows[0].kdist_mean_single);
  const auto table = to_metrics(result);
  CHECK(table.size() == 4);
  for (const auto& m : table) {
    CHECK(m.c_num == 2);
    CHECK(m.c_den == 1);
    CHECK(m.metric_value >= 0.0);
    CHECK(m.metric_value <= 1.0);
  }
}

TEST_CASE("capacity failure at one n does not stop the others") {
  const auto cfg = parse_config(
      R"({"experiment":"SWEEP","kind":"IID_GAUSSIAN","aspect":"1/4097","n_list":[4097,8194],"trials":1,"master_seed":1})");
  // A 4097-row request is rejected before any work is done.
  const auto result = run_sweep(cfg);
  REQUIRE(result.rows.size() == 2);
  CHECK_FALSE(result.rows[0].error.empty());
  CHECK_FALSE(result.rows[1].error.empty());
  const auto outcome = run_experiment(cfg);
  CHECK(outcome.errors.size() == 2);
  CHECK(outcome.table.empty());
}

TEST_CASE("cache coherence") {
  const auto dir = scratch_dir("cache");
  const std::string base =
      R"({"experiment":"SWEEP","kind":"SUM_ZERO_BERNOULLI_ROWS","aspect":"2/1","n_list":[8,16],"trials":3,"master_seed":21)";
  const auto cold = format_csv(run_experiment(parse_config(base + "}")).table);
  const auto cached_cfg = parse_config(base + R"(,"cache_dir":")" + dir.string() + "\"}");
  const auto first = format_csv(run_experiment(cached_cfg).table);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    CHECK(entry.path().extension() == ".esd");
    ++files;
  }
  CHECK(files == 6);
  const auto warm = format_csv(run_experiment(cached_cfg).table);
  CHECK(first == cold);
  CHECK(warm == cold);
}

TEST_CASE("cache names are content addressed") {
  const EnsembleSpec a{EnsembleKind::IidGaussian, 8, Rational::make(2, 1), 0};
  auto b = a;
  b.kind = EnsembleKind::IidRademacher;
  const auto name = cache_file_name(a, {1, 2});
  CHECK(name.size() == 16 + 4);
  CHECK(name.ends_with(".esd"));
  CHECK(name == cache_file_name(a, {1, 2}));
  CHECK(name != cache_file_name(a, {1, 3}));
  CHECK(name != cache_file_name(b, {1, 2}));
}

TEST_CASE("rate fit") {
  const std::vector<double> ns{100, 400, 1600, 6400};
  std::vector<double> ds;
  for (double n : ns) ds.push_back(3.0 / std::sqrt(n));
  const auto fit = rate_fit(ns, ds);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.used_rows == 4);

  const std::vector<double> flat{0.1, 0.1, 0.1, 0.1};
  CHECK(rate_fit(ns, flat).slope == doctest::Approx(0.0));

  const std::vector<double> two{100, 200};
  const std::vector<double> two_d{0.1, 0.05};
  CHECK_THROWS_AS(rate_fit(two, two_d), InsufficientDataError);
  const std::vector<double> zeros{0.1, 0.0, 0.0, 0.05};
  CHECK_THROWS_AS(rate_fit(ns, zeros), InsufficientDataError);
}

TEST_CASE("csv schema") {
  CHECK(format_csv({}) == std::string(kCsvHeader) + "\n");
  MetricRow r{"SWEEP", "IID_GAUSSIAN", 4, 8, 2, 1, 0, 3, 5, "kdist_of_average", 0.1, 1.0 / 3.0};
  const auto csv = format_csv({r});
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv == std::string(kCsvHeader) +
                   "\nSWEEP,IID_GAUSSIAN,4,8,2,1,0,3,5,kdist_of_average,0.10000000000000001,"
                   "0.33333333333333331\n");
}

TEST_CASE("json mirror round trip") {
  const auto cfg = parse_config(
      R"({"experiment":"SWEEP","kind":"IID_RADEMACHER","aspect":"1/2","n_list":[8,16],"trials":4,"master_seed":12})");
  const auto result = run_sweep(cfg);
  const auto table = to_metrics(result);
  const auto back = parse_metrics_json(format_json(table));
  CHECK(back == table);
  const auto rebuilt = sweep_from_metrics(back);
  REQUIRE(rebuilt.rows.size() == result.rows.size());
  for (std::size_t i = 0; i < rebuilt.rows.size(); ++i) {
    CHECK(rebuilt.rows[i].n == result.rows[i].n);
    CHECK(rebuilt.rows[i].cols == result.rows[i].cols);
    CHECK(rebuilt.rows[i].kdist_of_average == result.rows[i].kdist_of_average);
    CHECK(rebuilt.rows[i].kdist_mean_single == result.rows[i].kdist_mean_single);
    CHECK(rebuilt.rows[i].se == result.rows[i].se);
  }
  const auto j = nlohmann::json::parse(format_json(table));
  for (const char* key : {"experiment", "kind", "n", "N", "c_num", "c_den", "beta", "trials",
                          "master_seed", "metric_name", "metric_value", "stderr"}) {
    CHECK(j[0].contains(key));
  }
}

TEST_CASE("emit writes files and reports bad paths") {
  const auto dir = scratch_dir("emit");
  MetricRow r{"NORMCHECK", "IID_GAUSSIAN", 4, 4, 1, 1, 0, 2, 0, "max_norm", 3.5, 0.0};
  emit({r}, (dir / "out.csv").string(), OutputFormat::Csv);
  CHECK(read_file(dir / "out.csv") == format_csv({r}));
  emit({r}, (dir / "out.json").string(), OutputFormat::Json);
  CHECK(parse_metrics_json(read_file(dir / "out.json")) == MetricTable{r});
  CHECK_THROWS_AS(emit({r}, (dir / "missing" / "x.csv").string(), OutputFormat::Csv), IoError);
}

TEST_CASE("every experiment produces its metrics") {
  const auto run = [](const std::string& text) { return run_experiment(parse_config(text)); };
  const auto diag = run(
      R"({"experiment":"DIAGNOSE","kind":"IID_RADEMACHER","aspect":"2/1","n_list":[8],"trials":3,"master_seed":1})");
  CHECK(diag.table.size() == 7);
  CHECK(diag.table[0].metric_name == "q_hat");
  CHECK(diag.table[0].metric_value == 0.0);

  const auto res = run(
      R"({"experiment":"RESIDUAL","kind":"IID_GAUSSIAN","aspect":"2/1","n_list":[8],"trials":2,"points":3,"alpha":1,"master_seed":1})");
  REQUIRE(res.table.size() == 4);
  CHECK(res.table[0].metric_name == "sup_residual");
  CHECK(res.table[1].metric_name == "residual@u=-1");
  CHECK(res.table[2].metric_name == "residual@u=0");

  const auto var = run(
      R"({"experiment":"VARCHECK","kind":"MOVING_AVERAGE_ROWS","aspect":"2/1","n_list":[4,8],"beta_list":[0,2],"trials":2,"master_seed":1})");
  REQUIRE(var.table.size() == 8);
  CHECK(var.table[0].metric_name == "var_hat");
  CHECK(var.table[1].metric_name == "normalized");
  CHECK(var.table[4].beta == 2);

  const auto norm = run(
      R"({"experiment":"NORMCHECK","kind":"IID_GAUSSIAN","aspect":"1/1","n_list":[8],"trials":2,"master_seed":1})");
  REQUIRE(norm.table.size() == 2);
  CHECK(norm.table[1].metric_name == "max_norm");
  CHECK(norm.errors.empty());
}

TEST_CASE("mp-eval") {
  const auto cfg = parse_mp_eval_config(R"({"c":1,"x_min":0,"x_max":4,"points":5})");
  const auto csv = format_mp_eval(cfg);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,density,cdf,stieltjes_re,stieltjes_im");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  CHECK(csv.find("\n2,0.15915494309189535,") != std::string::npos);
  CHECK_THROWS_AS(parse_mp_eval_config(R"({"c":-1})"), ValidationError);
  CHECK_THROWS_AS(parse_mp_eval_config(R"({"c":1,"bogus":1})"), ValidationError);
  CHECK_THROWS_AS(parse_mp_eval_config(R"({"c":1,)"), ParseError);
}
