#pragma once

// Experiment orchestration: truth source -> candidate pool -> selected
// samples -> trained models -> metrics on the held-out candidates.

#include <optional>
#include <string>
#include <vector>

#include "remap/io.hpp"
#include "remap/sampling.hpp"

namespace remap {

/// Candidate pool of a scene: one measurement per grid cell center, shadowing
/// applied. Cell order matches RemRaster (row-major from the south-west).
Dataset simulate_candidates(const SceneSpec& spec);

/// Truth raster on the scene grid; values equal simulate_candidates().
RemRaster truth_raster(const SceneSpec& spec);

CandidatePool pool_of(const Dataset& candidates);

struct Experiment {
  std::optional<SceneSpec> scene;
  Dataset candidates;
  Bounds domain;                       ///< scene domain, or the candidate bounding box
  std::vector<std::size_t> selected;   ///< indices into candidates
  Dataset train;                       ///< candidates[selected]
  Dataset test;                        ///< every other candidate
};

/// Loads or simulates the candidate pool and draws config.n_samples with
/// config.strategy. The sampling seed is derive_seed(config.seed, "sample").
Experiment prepare_experiment(const ExperimentConfig& config);

/// Splits candidates into the given selection and its complement.
Experiment experiment_from_selection(Dataset candidates, std::vector<std::size_t> selected,
                                     std::optional<Bounds> domain = std::nullopt);

/// config.train with the root seed and the collocation domain filled in.
TrainConfig effective_train_config(const ExperimentConfig& config, const Experiment& e);

/// Raster bounds: config.raster.bounds, else the experiment domain.
Bounds raster_bounds(const ExperimentConfig& config, const Experiment& e);

MetricsRow metrics_row(const std::string& model, std::size_t n_samples, const std::vector<double>& pred,
                       const Dataset& test, double seconds, bool record_timing);

std::vector<double> predict_points(const NetModel& model, const Dataset& test);

struct CompareResult {
  std::vector<MetricsRow> rows;  ///< reveal_mt, fcnn, kriging, logdistance
  TrainResult pinn;
  TrainResult fcnn;
};

/// All four models on the identical training set, scored on e.test.
CompareResult compare_models(const Experiment& e, const ExperimentConfig& config);

}  // namespace remap
