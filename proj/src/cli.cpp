#include "gencal/cli.hpp"

#include <charconv>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "gencal/boosting.hpp"
#include "gencal/calibration.hpp"
#include "gencal/csv.hpp"
#include "gencal/datagen.hpp"
#include "gencal/error.hpp"
#include "gencal/modelzoo.hpp"
#include "gencal/parallel.hpp"
#include "gencal/report.hpp"

namespace gencal {

namespace {

std::string normalize_key(std::string_view key) {
  std::string k(key);
  for (char& c : k) {
    if (c == '_') c = '-';
  }
  return k;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ValidationError("option '" + std::string(key) + "': expected an integer, got '" +
                          std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ValidationError("option '" + std::string(key) + "': expected a number, got '" +
                          std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError("option '" + std::string(key) + "': expected true or false, got '" +
                        std::string(value) + "'");
}

AssessOptions assess_options(const RunConfig& c) {
  AssessOptions o;
  o.span = c.span;
  o.degree = c.degree;
  o.n_bins = c.bins;
  o.grid_points = c.grid_points;
  o.histogram_bins = c.histogram_bins;
  return o;
}

void write_assessment(const std::filesystem::path& dir, const std::string& stem,
                      const CalibrationAssessment& a) {
  const SummaryTexts texts = export_summary(a);
  write_text_file(dir / (stem + ".svg"), render_svg(a));
  write_text_file(dir / (stem + ".json"), texts.json);
  write_text_file(dir / (stem + "_curves.csv"), texts.curves_csv);
  write_text_file(dir / (stem + "_bins.csv"), texts.binned_csv);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s;
  s.n_population = c.n_population;
  s.n_train = c.n_train;
  s.n_valid = c.n_valid;
  s.seed = c.seed;
  return s;
}

void validate_options(const RunConfig& c) {
  if (!(c.span > 0.0 && c.span <= 1.0)) throw ValidationError("span must be in (0, 1]");
  if (c.degree != 1 && c.degree != 2) throw ValidationError("degree must be 1 or 2");
  if (c.bins < 1) throw ValidationError("bins must be at least 1");
  if (c.grid_points < 2) throw ValidationError("grid-points must be at least 2");
  if (c.histogram_bins < 1) throw ValidationError("histogram-bins must be at least 1");
  if (c.cv_folds < 2) throw ValidationError("cv-folds must be at least 2");
  if (c.threads < 1) throw ValidationError("threads must be at least 1");
  parse_family(c.family);
  if (!c.link.empty()) parse_link(c.link);
}

void log_status(std::ostream& log, const CalibrationAssessment& a) {
  for (const auto& [name, st] : a.status) {
    if (!st.ok) log << "  " << name << ": FAILED: " << st.error << "\n";
  }
  for (const auto& w : a.warnings) log << "  warning: " << w << "\n";
}

}  // namespace

void set_option(RunConfig& c, std::string_view raw_key, std::string_view raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string_view value = trim(raw_value);
  if (key == "command") c.command = value;
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "out-dir") c.out_dir = std::string(value);
  else if (key == "n-population") c.n_population = parse_integer<std::size_t>(key, value);
  else if (key == "n-train") c.n_train = parse_integer<std::size_t>(key, value);
  else if (key == "n-valid") c.n_valid = parse_integer<std::size_t>(key, value);
  else if (key == "skip-gbm") c.skip_gbm = parse_bool(key, value);
  else if (key == "full-grid") c.full_grid = parse_bool(key, value);
  else if (key == "cv-folds") c.cv_folds = parse_integer<int>(key, value);
  else if (key == "pred-file") c.pred_file = std::string(value);
  else if (key == "family") c.family = value;
  else if (key == "link") c.link = value;
  else if (key == "name") c.name = value;
  else if (key == "span") c.span = parse_real(key, value);
  else if (key == "degree") c.degree = parse_integer<int>(key, value);
  else if (key == "bins") c.bins = parse_integer<int>(key, value);
  else if (key == "grid-points") c.grid_points = parse_integer<int>(key, value);
  else if (key == "histogram-bins") c.histogram_bins = parse_integer<int>(key, value);
  else if (key == "threads") c.threads = parse_integer<unsigned>(key, value);
  else throw ValidationError("unknown option '" + key + "'");
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_option(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string manifest_text(const RunConfig& c) {
  std::ostringstream os;
  os << "# gencal run manifest; rerun with: gencal " << c.command << " --config <this file>\n";
  os << "command = " << c.command << "\n";
  os << "seed = " << c.seed << "\n";
  os << "out-dir = " << c.out_dir.string() << "\n";
  os << "n-population = " << c.n_population << "\n";
  os << "n-train = " << c.n_train << "\n";
  os << "n-valid = " << c.n_valid << "\n";
  os << "skip-gbm = " << (c.skip_gbm ? "true" : "false") << "\n";
  os << "full-grid = " << (c.full_grid ? "true" : "false") << "\n";
  os << "cv-folds = " << c.cv_folds << "\n";
  os << "pred-file = " << c.pred_file.string() << "\n";
  os << "family = " << c.family << "\n";
  os << "link = " << c.link << "\n";
  os << "name = " << c.name << "\n";
  os << "span = " << format_double(c.span) << "\n";
  os << "degree = " << c.degree << "\n";
  os << "bins = " << c.bins << "\n";
  os << "grid-points = " << c.grid_points << "\n";
  os << "histogram-bins = " << c.histogram_bins << "\n";
  return os.str();
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  validate_options(config);
  const SimConfig sc = sim_config(config);
  sc.validate();
  ensure_dir(config.out_dir);
  const SimData data = generate(sc, config.threads);
  for (const SimDataset* d : {&data.population, &data.train, &data.valid}) {
    const std::string file = std::string(role_name(d->role)) + ".csv";
    write_text_file(config.out_dir / file, dataset_csv(*d));
    log << std::left << std::setw(11) << role_name(d->role) << " n = " << d->size()
        << "  mean y = " << format_double(d->y.mean())
        << "  mean lambda = " << format_double(d->lambda.mean()) << "\n";
  }
  RunConfig m = config;
  m.command = "simulate";
  write_text_file(config.out_dir / "run-manifest.txt", manifest_text(m));
  return kExitOk;
}

int cmd_assess(const RunConfig& config, std::ostream& log) {
  if (config.pred_file.empty()) throw ValidationError("assess: no prediction file given");
  validate_options(config);
  const FamilySpec family = parse_family(config.family);
  const std::optional<LinkSpec> link =
      config.link.empty() ? std::nullopt : std::optional(parse_link(config.link));
  const PredictionColumns cols = parse_prediction_csv(read_text_file(config.pred_file));
  const PredictionSet preds = make_prediction_set(cols.y, cols.mu_hat, family, link);
  ensure_dir(config.out_dir);
  const CalibrationAssessment a = assess(preds, assess_options(config), config.name);
  write_assessment(config.out_dir, config.name, a);
  RunConfig m = config;
  m.command = "assess";
  write_text_file(config.out_dir / "run-manifest.txt", manifest_text(m));

  log << "n = " << a.n << "  family = " << a.family.name() << "  link = " << a.link.name() << "\n";
  log << "clamped predictions: " << a.clamped_count << "\n";
  if (a.slope) log << "calibration slope zeta = " << format_double(a.slope->zeta) << "\n";
  if (a.intercept) log << "calibration intercept alpha_c = " << format_double(a.intercept->alpha_c) << "\n";
  log_status(log, a);
  return a.all_ok() ? kExitOk : kExitNumerical;
}

std::vector<int> demo_tree_grid(bool full) {
  if (!full) return {100, 200, 400, 800, 1600, 3200};
  std::vector<int> g;
  for (int t = 100; t <= 5000; t += 100) g.push_back(t);
  return g;
}

std::vector<int> demo_depth_grid(bool full) {
  if (!full) return {1, 2, 3, 5};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
}

std::vector<DemoRow> run_demo(const RunConfig& config, std::ostream& log) {
  validate_options(config);
  const SimConfig sc = sim_config(config);
  sc.validate();
  ensure_dir(config.out_dir);
  log << "[simulate] population " << sc.n_population << ", train " << sc.n_train << ", valid "
      << sc.n_valid << ", seed " << sc.seed << "\n";
  const SimData data = generate(sc, config.threads);

  const std::vector<std::string> labels = {"true-lambda", "model-1", "model-2", "model-3",
                                           "gbm-1", "gbm-2", "gbm-3"};
  std::vector<std::optional<PredictionSet>> preds(labels.size());
  preds[0] = true_mean_predictions(data.valid);

  BoostConfig base;
  base.seed = derive_seed(config.seed, 101);
  std::vector<BoostConfig> gbm(3, base);
  std::optional<CvGridResult> cv;
  if (!config.skip_gbm) {
    log << "[gbm-1] " << config.cv_folds << "-fold CV over "
        << demo_tree_grid(config.full_grid).size() * demo_depth_grid(config.full_grid).size()
        << " configurations\n";
    try {
      cv = cv_grid_search(data.train.X, data.train.y, demo_tree_grid(config.full_grid),
                          demo_depth_grid(config.full_grid), config.cv_folds, base,
                          config.threads);
    } catch (const Error& e) {
      throw NumericalError(std::string("[gbm-1 cv] ") + e.what());
    }
    log << "[gbm-1] selected T = " << cv->best_trees << ", d = " << cv->best_depth << "\n";
    gbm[0].n_trees = cv->best_trees;
    gbm[0].depth = cv->best_depth;
    gbm[1].n_trees = 5000;
    gbm[1].depth = 5;
    gbm[2].n_trees = 200;
    gbm[2].depth = 1;
    std::string grid_csv = "n_trees,depth,mean_deviance,selected\n";
    for (const auto& p : cv->grid) {
      grid_csv += std::to_string(p.n_trees) + ',' + std::to_string(p.depth) + ',' +
                  format_double(p.mean_deviance) + ',' +
                  (p.n_trees == cv->best_trees && p.depth == cv->best_depth ? "1" : "0") + '\n';
    }
    write_text_file(config.out_dir / "gbm-1_cv_grid.csv", grid_csv);
  }

  const std::size_t n_tasks = config.skip_gbm ? 3 : 6;
  parallel_for(n_tasks, config.threads, [&](std::size_t task) {
    const std::string& label = labels[task + 1];
    try {
      if (task < 3) {
        const ModelFit fit = fit_model(ModelSpec::make(static_cast<ModelId>(task)), data.train);
        preds[task + 1] = predict_validation(fit, data.valid);
      } else {
        const BoostModel model = boost_fit(data.train.X, data.train.y, gbm[task - 3]);
        preds[task + 1] =
            make_prediction_set(data.valid.y, boost_predict(model, data.valid.X),
                                FamilySpec(FamilyKind::poisson), LinkSpec(LinkKind::log));
      }
    } catch (const NumericalError& e) {
      throw NumericalError("[" + label + "] " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("[" + label + "] " + e.what());
    }
  });

  std::vector<std::optional<CalibrationAssessment>> assessments(labels.size());
  parallel_for(labels.size(), config.threads, [&](std::size_t i) {
    if (preds[i]) assessments[i] = assess(*preds[i], assess_options(config), labels[i]);
  });

  std::vector<DemoRow> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    DemoRow row;
    row.model = labels[i];
    if (!assessments[i]) {
      row.skipped = true;
      row.note = "skipped";
      rows.push_back(row);
      continue;
    }
    const CalibrationAssessment& a = *assessments[i];
    write_assessment(config.out_dir, labels[i], a);
    write_text_file(config.out_dir / (labels[i] + "_predictions.csv"),
                    prediction_csv(preds[i]->y_obs, preds[i]->mu_hat));
    row.ok = a.slope.has_value() && a.intercept.has_value();
    if (a.slope) {
      row.zeta = a.slope->zeta;
      row.zeta_se = a.slope->zeta_se;
    }
    if (a.intercept) {
      row.alpha_c = a.intercept->alpha_c;
      row.alpha_c_se = a.intercept->se;
    }
    row.note = a.all_ok() ? "ok" : "partial";
    if (labels[i] == "gbm-1" && cv) {
      row.note += " (T=" + std::to_string(cv->best_trees) + " d=" + std::to_string(cv->best_depth) + ")";
    }
    log << "[assess] " << labels[i] << ": zeta = " << format_fixed2(row.zeta)
        << ", alpha_c = " << format_fixed2(row.alpha_c) << "\n";
    log_status(log, a);
    rows.push_back(row);
  }

  std::string table = "model,zeta,zeta_se,alpha_c,alpha_c_se,status\n";
  for (const auto& r : rows) {
    if (r.skipped) {
      table += r.model + ",NA,NA,NA,NA,skipped\n";
      continue;
    }
    table += r.model + ',' + format_double(r.zeta) + ',' + format_double(r.zeta_se) + ',' +
             format_double(r.alpha_c) + ',' + format_double(r.alpha_c_se) + ',' + r.note + '\n';
  }
  write_text_file(config.out_dir / "comparison.csv", table);
  RunConfig m = config;
  m.command = "demo";
  write_text_file(config.out_dir / "run-manifest.txt", manifest_text(m));
  return rows;
}

int cmd_demo(const RunConfig& config, std::ostream& log) {
  const auto rows = run_demo(config, log);
  log << "\n" << std::left << std::setw(13) << "model" << std::setw(10) << "zeta" << std::setw(10)
      << "alpha_c" << "status\n";
  for (const auto& r : rows) {
    log << std::setw(13) << r.model;
    if (r.skipped) {
      log << std::setw(10) << "-" << std::setw(10) << "-" << "skipped\n";
    } else {
      log << std::setw(10) << format_fixed2(r.zeta) << std::setw(10) << format_fixed2(r.alpha_c)
          << r.note << "\n";
    }
  }
  const bool all_ok = std::all_of(rows.begin(), rows.end(),
                                  [](const DemoRow& r) { return r.skipped || r.ok; });
  return all_ok ? kExitOk : kExitNumerical;
}

}  // namespace gencal
