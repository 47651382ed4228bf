#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gencal/cli.hpp"
#include "gencal/csv.hpp"

namespace {

struct FlagTable {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App& app, const std::string& key, const std::string& help) {
    options[key] = app.add_option("--" + key, values[key], help);
  }
  void add_flag(CLI::App& app, const std::string& key, const std::string& help) {
    options[key] = app.add_flag("--" + key, help);
  }
  void apply(gencal::RunConfig& config) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      if (opt->get_expected_min() == 0) {
        gencal::set_option(config, key, "true");
      } else {
        gencal::set_option(config, key, values.at(key));
      }
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gencal: calibration curves, calibration slope and intercept"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  FlagTable common;
  app.add_option("--config", config_file, "key = value file applied before flags");
  common.add(app, "seed", "master seed");
  common.add(app, "out-dir", "output directory");
  common.add(app, "threads", "worker threads (outputs do not depend on it)");

  auto* sim = app.add_subcommand("simulate", "generate the Poisson population and samples");
  FlagTable sim_flags;
  for (auto* sub : {sim}) {
    sim_flags.add(*sub, "n-population", "population size");
    sim_flags.add(*sub, "n-train", "training sample size");
    sim_flags.add(*sub, "n-valid", "validation sample size");
  }

  auto* assess = app.add_subcommand("assess", "assess a y,mu_hat prediction file");
  FlagTable assess_flags;
  std::string pred_file;
  assess->add_option("predictions", pred_file, "CSV with columns y and mu_hat")->required();
  assess_flags.add(*assess, "family", "bernoulli, poisson, gaussian or gamma");
  assess_flags.add(*assess, "link", "logit, log, identity or inverse (default canonical)");
  assess_flags.add(*assess, "name", "output file stem");
  assess_flags.add(*assess, "span", "loess span");
  assess_flags.add(*assess, "degree", "loess degree (1 or 2)");
  assess_flags.add(*assess, "bins", "number of bins");
  assess_flags.add(*assess, "grid-points", "evaluation grid size");
  assess_flags.add(*assess, "histogram-bins", "histogram bins");

  auto* demo = app.add_subcommand("demo", "full simulation: models 1-3, GBMs 1-3, comparison table");
  FlagTable demo_flags;
  demo_flags.add(*demo, "n-population", "population size");
  demo_flags.add(*demo, "n-train", "training sample size");
  demo_flags.add(*demo, "n-valid", "validation sample size");
  demo_flags.add(*demo, "cv-folds", "folds for the GBM-1 grid search");
  demo_flags.add(*demo, "span", "loess span");
  demo_flags.add(*demo, "degree", "loess degree (1 or 2)");
  demo_flags.add(*demo, "bins", "number of bins");
  demo_flags.add(*demo, "grid-points", "evaluation grid size");
  demo_flags.add_flag(*demo, "skip-gbm", "fit only the GLMs");
  demo_flags.add_flag(*demo, "full-grid", "search T in 100..5000 and d in 1..10");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gencal::kExitValidation;
  }

  try {
    gencal::RunConfig config;
    if (!config_file.empty()) gencal::apply_config_text(config, gencal::read_text_file(config_file));
    common.apply(config);
    if (sim->parsed()) {
      config.command = "simulate";
      sim_flags.apply(config);
      return gencal::cmd_simulate(config, std::cout);
    }
    if (assess->parsed()) {
      config.command = "assess";
      config.pred_file = pred_file;
      assess_flags.apply(config);
      return gencal::cmd_assess(config, std::cout);
    }
    config.command = "demo";
    demo_flags.apply(config);
    return gencal::cmd_demo(config, std::cout);
  } catch (...) {
    return gencal::report_exception(std::cerr);
  }
}
