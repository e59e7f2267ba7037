#include "remap/dataset.hpp"

#include <algorithm>
#include <limits>

namespace remap {

Bounds bounding_box(std::span<const Point> pts) {
  if (pts.empty()) return {0, 0, 0, 0};
  Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Point p : pts) {
    b.xmin = std::min(b.xmin, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.xmax = std::max(b.xmax, p.x);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

Bounds bounding_box(std::span<const Measurement> data) {
  const auto pts = locations(data);
  return bounding_box(std::span<const Point>(pts));
}

std::vector<Point> locations(std::span<const Measurement> data) {
  std::vector<Point> pts;
  pts.reserve(data.size());
  for (const auto& m : data) pts.push_back(m.location);
  return pts;
}

std::vector<double> observations(std::span<const Measurement> data) {
  std::vector<double> v;
  v.reserve(data.size());
  for (const auto& m : data) v.push_back(m.rssi_db);
  return v;
}

}  // namespace remap
