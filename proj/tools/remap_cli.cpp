#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <numeric>

#include "remap/io.hpp"
#include "remap/log.hpp"
#include "remap/pipeline.hpp"

using namespace remap;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  bool quiet = false;
};

struct Options {
  std::string scene;
  std::string candidates;
  std::string samples;
  std::string model;
  std::string test;
  std::string strategy;
  std::size_t n = 0;
  int passes = 0;
  double threshold = -1.0;
  std::string name = "reveal_mt";
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : read_experiment(g.config);
  if (g.seed) c.seed = *g.seed;
  c.out = g.out;
  return c;
}

fs::path out_path(const ExperimentConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  return c.out / name;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void report_eval(const MetricsRow& r) {
  log_info(r.model + ": rmse " + fmt("%.3f", r.eval.rmse) + " dB, mae " + fmt("%.3f", r.eval.mae) + " dB, r2 " +
           fmt("%.3f", r.eval.r_squared));
}

// Candidate pool for sample/train: explicit CSV, else the config truth source.
Experiment experiment_for(const ExperimentConfig& c, const Options& o) {
  if (!o.samples.empty()) {
    Dataset s = read_measurements(o.samples, c.latlon);
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return experiment_from_selection(std::move(s), std::move(idx));
  }
  if (!o.candidates.empty()) {
    ExperimentConfig cc = c;
    cc.scene.reset();
    cc.dataset = o.candidates;
    return prepare_experiment(cc);
  }
  return prepare_experiment(c);
}

int cmd_simulate(const ExperimentConfig& c, const Options& o) {
  SceneSpec s = !o.scene.empty() ? read_scene(o.scene) : c.scene ? read_scene(*c.scene) : demo_scene();
  const RemRaster truth = truth_raster(s);
  Dataset cand(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) cand[k] = {truth.cell_center(k), truth.value[k]};
  write_raster(out_path(c, "truth"), truth);
  write_measurements(out_path(c, "candidates.csv"), cand);
  write_text(out_path(c, "scene.ini"), format_scene(s));
  log_info("simulated " + std::to_string(cand.size()) + " candidates from " + std::to_string(s.scene.size()) +
           " transmitters into " + c.out.string());
  return 0;
}

int cmd_sample(ExperimentConfig c, const Options& o) {
  if (!o.strategy.empty()) c.strategy = o.strategy;
  if (o.n > 0) c.n_samples = o.n;
  Options oo = o;
  oo.samples.clear();
  const Experiment e = experiment_for(c, oo);
  write_selection(out_path(c, "selection.csv"), e.selected, locations(e.candidates));
  write_measurements(out_path(c, "samples.csv"), e.train);
  if (e.train.size() >= 2) {
    const auto pts = locations(e.train);
    log_info(c.strategy + ": " + std::to_string(e.train.size()) + " samples, balance " +
             fmt("%.4f", balance_metric(pts)));
  }
  return 0;
}

int cmd_train(const ExperimentConfig& c, const Options& o) {
  const Experiment e = experiment_for(c, o);
  const TrainConfig tc = effective_train_config(c, e);
  log_info("training on " + std::to_string(e.train.size()) + " samples, lambda " + fmt("%.3f", tc.lambda));
  const TrainResult r = train(e.train, tc);
  save_model(out_path(c, "model.json"), {r.model, r.transmitters, r.propagation, raster_bounds(c, e)});
  write_train_report(out_path(c, "loss_history.csv"), r.report);
  const RemRaster rem = predict_raster(r.model, raster_bounds(c, e), c.raster.nx, c.raster.ny);
  write_raster(out_path(c, "rem"), rem);
  log_info("stopped (" + std::string(to_string(r.report.stop)) + ") after " +
           std::to_string(r.report.history.size()) + " epochs, best " + std::to_string(r.report.best_epoch));
  if (!e.test.empty()) {
    const auto row = metrics_row(o.name, e.train.size(), predict_points(r.model, e.test), e.test, r.report.seconds,
                                 c.record_timing);
    write_metrics(out_path(c, "metrics.csv"), {row});
    report_eval(row);
  }
  return 0;
}

Bounds model_bounds(const ExperimentConfig& c, const ModelArtifact& a) {
  if (c.raster.bounds) return *c.raster.bounds;
  return a.domain ? *a.domain : a.model.normalization().input;
}

int cmd_predict(const ExperimentConfig& c, const Options& o) {
  if (o.model.empty()) throw UsageError("predict needs --model");
  const ModelArtifact a = load_model(o.model);
  write_raster(out_path(c, "rem"), predict_raster(a.model, model_bounds(c, a), c.raster.nx, c.raster.ny));
  return 0;
}

int cmd_uncertainty(ExperimentConfig c, const Options& o) {
  if (o.model.empty()) throw UsageError("uncertainty needs --model");
  if (o.passes > 0) c.mc_passes = o.passes;
  if (o.threshold >= 0.0) c.mc_threshold_db = o.threshold;
  const ModelArtifact a = load_model(o.model);
  const RemRaster r = uncertainty_raster(a.model, model_bounds(c, a), c.raster.nx, c.raster.ny, c.mc_passes,
                                         c.mc_threshold_db, derive_seed(c.seed, "mc-pass"));
  write_raster_csv(out_path(c, "uncertainty.csv"), r, r.std);
  write_pgm(out_path(c, "uncertainty.pgm"), r.nx, r.ny, r.std);
  std::vector<double> mask(r.mask.begin(), r.mask.end());
  write_raster_csv(out_path(c, "mask.csv"), r, mask);
  write_pgm(out_path(c, "mask.pgm"), r.nx, r.ny, mask);
  const auto flagged = std::count(r.mask.begin(), r.mask.end(), 1);
  log_info(std::to_string(flagged) + " of " + std::to_string(r.size()) + " cells above " +
           fmt("%.2f", c.mc_threshold_db) + " dB");
  return 0;
}

int cmd_evaluate(const ExperimentConfig& c, const Options& o) {
  if (o.model.empty()) throw UsageError("evaluate needs --model");
  const ModelArtifact a = load_model(o.model);
  Dataset test;
  if (!o.test.empty()) {
    test = read_measurements(o.test, c.latlon);
  } else {
    test = prepare_experiment(c).test;
  }
  if (test.empty()) throw DataError("no held-out measurements to evaluate on");
  const auto row = metrics_row(o.name, 0, predict_points(a.model, test), test, 0.0, false);
  write_metrics(out_path(c, "metrics.csv"), {row});
  report_eval(row);
  return 0;
}

int cmd_compare(const ExperimentConfig& c, const Options& o) {
  const Experiment e = experiment_for(c, o);
  const auto r = compare_models(e, c);
  write_selection(out_path(c, "selection.csv"), e.selected, locations(e.candidates));
  write_metrics(out_path(c, "metrics.csv"), r.rows);
  save_model(out_path(c, "model.json"), {r.pinn.model, r.pinn.transmitters, r.pinn.propagation, raster_bounds(c, e)});
  write_train_report(out_path(c, "loss_history.csv"), r.pinn.report);
  for (const auto& row : r.rows) report_eval(row);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radio environment map estimation with a physics-informed network"};
  app.require_subcommand(1);
  Globals g;
  Options o;
  app.add_option("--config", g.config, "experiment config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "suppress progress messages");

  auto* sim = app.add_subcommand("simulate", "write a truth raster and candidate pool");
  sim->add_option("--scene", o.scene, "scene file (default: config scene, else the demo scene)");

  auto* sam = app.add_subcommand("sample", "select n candidates");
  sam->add_option("--candidates", o.candidates, "candidate CSV (default: config truth source)");
  sam->add_option("--strategy", o.strategy, "lpm, random, uniform, lhs, density or cluster");
  sam->add_option("-n", o.n, "number of samples");

  auto* tr = app.add_subcommand("train", "train the physics-informed model");
  tr->add_option("--samples", o.samples, "train on exactly these measurements");
  tr->add_option("--candidates", o.candidates, "candidate CSV to sample from");

  auto* pr = app.add_subcommand("predict", "evaluate a model artifact on the raster grid");
  pr->add_option("--model", o.model, "model artifact")->required();

  auto* un = app.add_subcommand("uncertainty", "MC-dropout std raster and threshold mask");
  un->add_option("--model", o.model, "model artifact")->required();
  un->add_option("--passes", o.passes, "stochastic passes");
  un->add_option("--threshold", o.threshold, "mask threshold in dB");

  auto* ev = app.add_subcommand("evaluate", "score a model artifact on measurements");
  ev->add_option("--model", o.model, "model artifact")->required();
  ev->add_option("--test", o.test, "test measurement CSV (default: held-out set from the config)");
  ev->add_option("--name", o.name, "model name in the metrics row");

  auto* cmp = app.add_subcommand("compare", "run every model on identical samples");
  cmp->add_option("--samples", o.samples, "use exactly these measurements for training");
  cmp->add_option("--candidates", o.candidates, "candidate CSV to sample from");

  for (auto* sub : {sim, sam, tr, pr, un, ev, cmp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  quiet_flag() = g.quiet;

  try {
    const ExperimentConfig c = load_config(g);
    if (*sim) return cmd_simulate(c, o);
    if (*sam) return cmd_sample(c, o);
    if (*tr) return cmd_train(c, o);
    if (*pr) return cmd_predict(c, o);
    if (*un) return cmd_uncertainty(c, o);
    if (*ev) return cmd_evaluate(c, o);
    if (*cmp) return cmd_compare(c, o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
