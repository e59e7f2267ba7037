#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "remap/common.hpp"

namespace remap {

struct Measurement {
  Point location;
  double rssi_db = 0.0;
  std::string channel = "ch0";
  std::optional<double> elevation;
};

using Dataset = std::vector<Measurement>;

/// Bounding box of the sample locations (may be degenerate).
Bounds bounding_box(std::span<const Measurement> data);
Bounds bounding_box(std::span<const Point> pts);

std::vector<Point> locations(std::span<const Measurement> data);
std::vector<double> observations(std::span<const Measurement> data);

}  // namespace remap
