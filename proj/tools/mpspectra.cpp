// Command-line front end: one subcommand per experiment plus pointwise law evaluation.
//
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure, 1 anything else.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mpspectra/error.hpp"
#include "mpspectra/harness.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mpspectra::IoError(path, "cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

mpspectra::OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return mpspectra::OutputFormat::Csv;
  if (text == "json") return mpspectra::OutputFormat::Json;
  throw mpspectra::ValidationError("--format", "must be csv or json");
}

struct Overrides {
  std::string config;
  std::string out;
  std::string format;
};

int run_experiment(mpspectra::Experiment expected, const Overrides& opts) {
  auto cfg = mpspectra::parse_config(read_file(opts.config));
  if (cfg.experiment != expected) {
    throw mpspectra::ValidationError(
        "experiment", "config requests " + std::string(mpspectra::to_string(cfg.experiment)) +
                          " but the subcommand runs " + std::string(mpspectra::to_string(expected)));
  }
  if (!opts.out.empty()) cfg.output = opts.out;
  if (!opts.format.empty()) cfg.format = parse_format(opts.format);
  const auto outcome = mpspectra::run_experiment(cfg);
  mpspectra::emit(outcome.table, cfg.output, cfg.format);
  for (const auto& e : outcome.errors) std::cerr << "mpspectra: " << e << '\n';
  return outcome.errors.empty() ? 0 : kExitNumerical;
}

int run_mp_eval(const Overrides& opts) {
  auto cfg = mpspectra::parse_mp_eval_config(read_file(opts.config));
  if (!opts.out.empty()) cfg.output = opts.out;
  if (!opts.format.empty()) cfg.format = parse_format(opts.format);
  const std::string text = mpspectra::format_mp_eval(cfg);
  if (cfg.output == "-") {
    std::cout << text;
  } else {
    std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
    if (!out) throw mpspectra::IoError(cfg.output, "cannot open for writing");
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marchenko-Pastur spectral statistics"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    mpspectra::Experiment experiment;
  };
  const Entry entries[] = {
      {"sweep", "Kolmogorov distance to the MP law across n", mpspectra::Experiment::Sweep},
      {"diagnose", "Estimate row-dependence statistics", mpspectra::Experiment::Diagnose},
      {"varcheck", "Variance of s_n(z) across n and beta", mpspectra::Experiment::VarCheck},
      {"residual", "Self-consistency residual of E s_n on a grid", mpspectra::Experiment::Residual},
      {"normcheck", "Spectral norm of (1/n) A A^T", mpspectra::Experiment::NormCheck},
  };

  Overrides opts;
  std::vector<std::pair<CLI::App*, const Entry*>> commands;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", opts.config, "JSON config file")->required();
    sub->add_option("--out", opts.out, "Output path, '-' for stdout");
    sub->add_option("--format", opts.format, "csv or json");
    commands.emplace_back(sub, &e);
  }
  auto* mp_eval = app.add_subcommand("mp-eval", "Evaluate density, CDF and Stieltjes transform");
  mp_eval->add_option("--config", opts.config, "JSON config file")->required();
  mp_eval->add_option("--out", opts.out, "Output path, '-' for stdout");
  mp_eval->add_option("--format", opts.format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (mp_eval->parsed()) return run_mp_eval(opts);
    for (const auto& [sub, entry] : commands) {
      if (sub->parsed()) return run_experiment(entry->experiment, opts);
    }
  } catch (const mpspectra::ValidationError& e) {
    std::cerr << "mpspectra: invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mpspectra::ParseError& e) {
    std::cerr << "mpspectra: cannot parse config: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mpspectra::SpecError& e) {
    std::cerr << "mpspectra: invalid ensemble: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mpspectra::NumericalError& e) {
    std::cerr << "mpspectra: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const mpspectra::ConvergenceError& e) {
    std::cerr << "mpspectra: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const mpspectra::CapacityError& e) {
    std::cerr << "mpspectra: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "mpspectra: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
