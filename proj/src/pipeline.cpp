#include "remap/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "remap/log.hpp"
#include "remap/shadow_field.hpp"

namespace remap {

RemRaster truth_raster(const SceneSpec& spec) {
  SyntheticField field(spec.scene, spec.domain);
  RemRaster r = make_raster(spec.domain, spec.nx, spec.ny);
  for (std::size_t k = 0; k < r.size(); ++k) r.value[k] = field.power_db(r.cell_center(k));
  return r;
}

Dataset simulate_candidates(const SceneSpec& spec) {
  const RemRaster r = truth_raster(spec);
  Dataset out(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    out[k].location = r.cell_center(k);
    out[k].rssi_db = r.value[k];
  }
  return out;
}

CandidatePool pool_of(const Dataset& candidates) {
  CandidatePool pool;
  pool.points = locations(candidates);
  return pool;
}

Experiment experiment_from_selection(Dataset candidates, std::vector<std::size_t> selected,
                                     std::optional<Bounds> domain) {
  Experiment e;
  e.candidates = std::move(candidates);
  e.domain = domain ? *domain : bounding_box(e.candidates);
  e.selected = std::move(selected);
  std::vector<char> used(e.candidates.size(), 0);
  for (auto i : e.selected) {
    if (i >= e.candidates.size()) throw DataError("selected index " + std::to_string(i) + " is outside the pool");
    if (used[i]) throw DataError("selected index " + std::to_string(i) + " appears twice");
    used[i] = 1;
    e.train.push_back(e.candidates[i]);
  }
  for (std::size_t i = 0; i < e.candidates.size(); ++i)
    if (!used[i]) e.test.push_back(e.candidates[i]);
  return e;
}

Experiment prepare_experiment(const ExperimentConfig& config) {
  std::optional<SceneSpec> scene;
  Dataset candidates;
  if (config.scene) {
    scene = read_scene(*config.scene);
    candidates = simulate_candidates(*scene);
  } else if (config.dataset) {
    candidates = read_measurements(*config.dataset, config.latlon);
  } else {
    scene = demo_scene();
    candidates = simulate_candidates(*scene);
  }
  if (config.n_samples > candidates.size())
    throw DataError("cannot draw " + std::to_string(config.n_samples) + " samples from a pool of " +
                    std::to_string(candidates.size()));
  auto idx = sample_by_name(config.strategy, pool_of(candidates), config.n_samples,
                            derive_seed(config.seed, "sample"));
  std::optional<Bounds> domain;
  if (scene) domain = scene->domain;
  Experiment e = experiment_from_selection(std::move(candidates), std::move(idx), domain);
  e.scene = std::move(scene);
  return e;
}

TrainConfig effective_train_config(const ExperimentConfig& config, const Experiment& e) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  if (!t.domain) t.domain = e.domain;
  return t;
}

Bounds raster_bounds(const ExperimentConfig& config, const Experiment& e) {
  return config.raster.bounds ? *config.raster.bounds : e.domain;
}

std::vector<double> predict_points(const NetModel& model, const Dataset& test) {
  constexpr std::size_t kChunk = 4096;
  const auto pts = locations(test);
  std::vector<double> out(pts.size());
  for (std::size_t lo = 0; lo < pts.size(); lo += kChunk) {
    const std::size_t hi = std::min(lo + kChunk, pts.size());
    const auto y = model.forward_batch(std::span<const Point>(pts).subspan(lo, hi - lo));
    for (std::size_t k = lo; k < hi; ++k) out[k] = y(static_cast<Eigen::Index>(k - lo));
  }
  return out;
}

MetricsRow metrics_row(const std::string& model, std::size_t n_samples, const std::vector<double>& pred,
                       const Dataset& test, double seconds, bool record_timing) {
  MetricsRow row;
  row.model = model;
  row.n_samples = n_samples;
  const auto obs = observations(test);
  row.eval = evaluate(pred, obs);
  row.train_seconds = record_timing ? seconds : 0.0;
  return row;
}

CompareResult compare_models(const Experiment& e, const ExperimentConfig& config) {
  if (e.test.empty()) throw DataError("compare needs at least one held-out candidate");
  using clock = std::chrono::steady_clock;
  const TrainConfig tc = effective_train_config(config, e);
  const std::size_t n = e.train.size();

  CompareResult out{{}, train(e.train, tc), fcnn_train(e.train, tc)};
  out.rows.push_back(metrics_row("reveal_mt", n, predict_points(out.pinn.model, e.test), e.test,
                                 out.pinn.report.seconds, config.record_timing));
  out.rows.push_back(metrics_row("fcnn", n, predict_points(out.fcnn.model, e.test), e.test, out.fcnn.report.seconds,
                                 config.record_timing));

  {
    const auto t0 = clock::now();
    const VariogramModel vm = fit_variogram(e.train, config.variogram);
    const OrdinaryKriging ok(e.train, vm);
    const double fit_s = std::chrono::duration<double>(clock::now() - t0).count();
    std::vector<double> pred;
    pred.reserve(e.test.size());
    for (const auto& m : e.test) pred.push_back(ok.predict(m.location).mean);
    out.rows.push_back(metrics_row("kriging", n, pred, e.test, fit_s, config.record_timing));
  }
  {
    const auto t0 = clock::now();
    const auto strongest = std::max_element(e.train.begin(), e.train.end(),
                                            [](const auto& a, const auto& b) { return a.rssi_db < b.rssi_db; });
    const LogDistanceModel ld =
        logdistance_fit(e.train, strongest->location, tc.propagation.d0, tc.propagation.r_min);
    const double fit_s = std::chrono::duration<double>(clock::now() - t0).count();
    std::vector<double> pred;
    pred.reserve(e.test.size());
    for (const auto& m : e.test) pred.push_back(ld.predict(m.location));
    out.rows.push_back(metrics_row("logdistance", n, pred, e.test, fit_s, config.record_timing));
  }
  return out;
}

}  // namespace remap
