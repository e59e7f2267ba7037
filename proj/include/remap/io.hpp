#pragma once

// File formats: INI-style config and scene files, measurement / candidate /
// selection CSVs, raster CSV + PGM, model artifact, loss history and metrics.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "remap/baselines.hpp"
#include "remap/dataset.hpp"
#include "remap/field_model.hpp"
#include "remap/metrics.hpp"
#include "remap/trainer.hpp"

namespace remap {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// key = value files with [section] headers. Sections may repeat; keys before
// the first header belong to section "". '#' and ';' start comments.

struct IniSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  int line = 0;

  const std::string* find(const std::string& key) const;
};

struct IniDocument {
  std::vector<IniSection> sections;

  std::vector<const IniSection*> all(const std::string& name) const;
  /// First section with the name, or nullptr.
  const IniSection* first(const std::string& name) const;
};

/// Throws UsageError with a line number on malformed input.
IniDocument parse_ini(const std::string& text, const std::string& origin = "<config>");
IniDocument read_ini(const fs::path& path);

// ---------------------------------------------------------------------------

struct SceneSpec {
  FieldScene scene;
  Bounds domain{0, 0, 10000, 10000};
  int nx = 200;  ///< simulation grid (candidate pool) cells along x
  int ny = 200;
};

/// Sections: [domain] xmin ymin xmax ymax; [grid] nx ny; [propagation] eta d0
/// r_min; [shadow] sigma_db corr_length seed (transmitter i gets seed + i);
/// one [transmitter] per source with x y power_db and optional per-source
/// sigma_db / corr_length / shadow_seed overrides.
SceneSpec parse_scene(const IniDocument& doc);
SceneSpec read_scene(const fs::path& path);
std::string format_scene(const SceneSpec& s);

/// The 10 km x 10 km, three-transmitter, 6 dB / 500 m shadowing demo scene on
/// a 200 x 200 grid.
SceneSpec demo_scene();

// ---------------------------------------------------------------------------

struct RasterSpec {
  std::optional<Bounds> bounds;  ///< default: scene domain or data bounding box
  int nx = 200;
  int ny = 200;
};

struct ExperimentConfig {
  std::optional<fs::path> scene;    ///< synthetic truth source
  std::optional<fs::path> dataset;  ///< measurement CSV truth source
  TrainConfig train;
  std::string strategy = "lpm";
  std::size_t n_samples = 45;
  RasterSpec raster;
  int mc_passes = 50;
  double mc_threshold_db = 3.0;
  VariogramKind variogram = VariogramKind::exponential;
  bool latlon = false;          ///< dataset columns are lat/lon degrees
  bool record_timing = true;    ///< false writes train_seconds as 0
  fs::path out = ".";
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sections [experiment], [train], [net], [sampling], [raster], [uncertainty],
/// [kriging]. Relative paths resolve against `base_dir`. Unknown keys are
/// usage errors.
ExperimentConfig parse_experiment(const IniDocument& doc, const fs::path& base_dir = {});
ExperimentConfig read_experiment(const fs::path& path);

// ---------------------------------------------------------------------------
// CSV

/// Header must name x,y,rssi_db (or lat,lon,rssi_db with latlon = true);
/// channel and elevation columns are optional. Throws DataError.
Dataset read_measurements(const fs::path& path, bool latlon = false);
Dataset parse_measurements(const std::string& text, bool latlon = false, const std::string& origin = "<csv>");
void write_measurements(const fs::path& path, const Dataset& data);

/// Local equirectangular projection anchored at the centroid of the points;
/// (lat, lon) degrees in, planar meters out.
std::vector<Point> project_latlon(const std::vector<std::pair<double, double>>& lat_lon);

void write_selection(const fs::path& path, const std::vector<std::size_t>& idx, const std::vector<Point>& pts);
std::vector<std::size_t> read_selection(const fs::path& path);

/// CSV "x,y,value" with 6 decimals, row-major from the south-west corner.
void write_raster_csv(const fs::path& path, const RemRaster& r, const std::vector<double>& values);
/// 8-bit P5 graymap, north row first, linearly scaled between min and max.
/// A constant raster is written as all 255.
void write_pgm(const fs::path& path, int nx, int ny, const std::vector<double>& values);
/// <stem>.csv and <stem>.pgm
void write_raster(const fs::path& stem, const RemRaster& r);

struct RasterTable {
  std::vector<Point> centers;
  std::vector<double> values;
};
RasterTable read_raster_csv(const fs::path& path);

// ---------------------------------------------------------------------------

struct ModelArtifact {
  NetModel model;
  std::vector<Transmitter> transmitters;
  PropagationParams propagation;
  std::optional<Bounds> domain;  ///< raster extent used at training time
};

void save_model(const fs::path& path, const ModelArtifact& a);
ModelArtifact load_model(const fs::path& path);

void write_train_report(const fs::path& path, const TrainReport& r);

struct MetricsRow {
  std::string model;
  std::size_t n_samples = 0;
  EvalReport eval;
  double train_seconds = 0.0;
};

std::string format_metrics(const std::vector<MetricsRow>& rows);
void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace remap
