#include "remap/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace remap {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) return std::nullopt;
  return v;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Typed accessors over one INI section.
class Keys {
 public:
  Keys(const IniSection* s, std::string where) : s_(s), where_(std::move(where)) {}

  template <class F>
  void each(F&& f) const {
    if (!s_) return;
    for (const auto& [k, v] : s_->entries) f(k, v);
  }

  [[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) const {
    throw UsageError(where_ + " [" + (s_ ? s_->name : "") + "] " + key + " = " + value + ": " + what);
  }

  double num(const std::string& key, const std::string& v) const {
    auto d = to_double(v);
    if (!d || !std::isfinite(*d)) bad(key, v, "expected a number");
    return *d;
  }

  long integer(const std::string& key, const std::string& v) const {
    long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad(key, v, "expected an integer");
    return out;
  }

  std::uint64_t u64(const std::string& key, const std::string& v) const {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
    return out;
  }

  bool boolean(const std::string& key, const std::string& v) const {
    const auto l = lower(v);
    if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
    if (l == "false" || l == "0" || l == "no" || l == "off") return false;
    bad(key, v, "expected true or false");
  }

  [[noreturn]] void unknown(const std::string& key) const {
    throw UsageError(where_ + ": unknown key '" + key + "' in [" + (s_ ? s_->name : "") + "]");
  }

 private:
  const IniSection* s_;
  std::string where_;
};

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::string* IniSection::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

std::vector<const IniSection*> IniDocument::all(const std::string& name) const {
  std::vector<const IniSection*> out;
  for (const auto& s : sections)
    if (s.name == name) out.push_back(&s);
  return out;
}

const IniSection* IniDocument::first(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

IniDocument parse_ini(const std::string& text, const std::string& origin) {
  IniDocument doc;
  doc.sections.push_back({"", {}, 0});
  int lineno = 0;
  for (const auto& raw : lines_of(text)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      doc.sections.push_back({lower(trim(line.substr(1, line.size() - 2))), {}, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    if (key.empty()) throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
    doc.sections.back().entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return doc;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

IniDocument read_ini(const fs::path& path) {
  std::ifstream probe(path);
  if (!probe) throw UsageError("cannot open config " + path.string());
  return parse_ini(read_text(path), path.string());
}

// ---------------------------------------------------------------------------

SceneSpec demo_scene() {
  SceneSpec s;
  s.domain = {0, 0, 10000, 10000};
  s.nx = s.ny = 200;
  s.scene.params = {3.0, 1.0, 1.0};
  s.scene.transmitters = {{{2500, 3000}, 30.0, true}, {{7500, 2500}, 27.0, true}, {{5000, 7800}, 32.0, true}};
  for (std::uint64_t i = 0; i < 3; ++i) s.scene.shadow.push_back(ShadowFieldSpec{6.0, 500.0, 100 + i});
  return s;
}

SceneSpec parse_scene(const IniDocument& doc) {
  SceneSpec s;
  s.scene.transmitters.clear();
  std::optional<ShadowFieldSpec> shadow;
  for (const auto& sec : doc.sections) {
    Keys k(&sec, "scene");
    if (sec.name.empty()) {
      k.each([&](const std::string& key, const std::string&) { k.unknown(key); });
    } else if (sec.name == "domain") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "xmin") s.domain.xmin = k.num(key, v);
        else if (key == "ymin") s.domain.ymin = k.num(key, v);
        else if (key == "xmax") s.domain.xmax = k.num(key, v);
        else if (key == "ymax") s.domain.ymax = k.num(key, v);
        else k.unknown(key);
      });
    } else if (sec.name == "grid") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "nx") s.nx = static_cast<int>(k.integer(key, v));
        else if (key == "ny") s.ny = static_cast<int>(k.integer(key, v));
        else k.unknown(key);
      });
    } else if (sec.name == "propagation") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "eta") s.scene.params.eta = k.num(key, v);
        else if (key == "d0") s.scene.params.d0 = k.num(key, v);
        else if (key == "r_min") s.scene.params.r_min = k.num(key, v);
        else k.unknown(key);
      });
    } else if (sec.name == "shadow") {
      shadow.emplace();
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "sigma_db") shadow->sigma_db = k.num(key, v);
        else if (key == "corr_length") shadow->corr_length = k.num(key, v);
        else if (key == "seed") shadow->seed = k.u64(key, v);
        else k.unknown(key);
      });
    }
  }
  for (const auto& sec : doc.sections) {
    if (sec.name != "transmitter") continue;
    Keys k(&sec, "scene");
    Transmitter t;
    bool has_x = false, has_y = false, has_p = false;
    const std::size_t index = s.scene.transmitters.size();
    std::optional<ShadowFieldSpec> own;
    if (shadow) own = ShadowFieldSpec{shadow->sigma_db, shadow->corr_length, shadow->seed + index};
    k.each([&](const std::string& key, const std::string& v) {
      if (key == "x") t.position.x = k.num(key, v), has_x = true;
      else if (key == "y") t.position.y = k.num(key, v), has_y = true;
      else if (key == "power_db") t.power_db = k.num(key, v), has_p = true;
      else if (key == "sigma_db") (own ? *own : own.emplace()).sigma_db = k.num(key, v);
      else if (key == "corr_length") (own ? *own : own.emplace()).corr_length = k.num(key, v);
      else if (key == "shadow_seed") (own ? *own : own.emplace()).seed = k.u64(key, v);
      else k.unknown(key);
    });
    if (!has_x || !has_y || !has_p)
      throw UsageError("scene: [transmitter] at line " + std::to_string(sec.line) + " needs x, y and power_db");
    s.scene.transmitters.push_back(t);
    s.scene.shadow.push_back(own);
  }
  for (const auto& sec : doc.sections)
    if (!sec.name.empty() && sec.name != "domain" && sec.name != "grid" && sec.name != "propagation" &&
        sec.name != "shadow" && sec.name != "transmitter")
      throw UsageError("scene: unknown section [" + sec.name + "]");
  if (s.scene.transmitters.empty()) throw UsageError("scene: no [transmitter] sections");
  if (s.domain.degenerate()) throw UsageError("scene: degenerate [domain]");
  if (s.nx < 1 || s.ny < 1) throw UsageError("scene: [grid] nx and ny must be >= 1");
  try {
    s.scene.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("scene: ") + e.what());
  }
  return s;
}

SceneSpec read_scene(const fs::path& path) { return parse_scene(read_ini(path)); }

std::string format_scene(const SceneSpec& s) {
  std::ostringstream o;
  o.precision(17);
  o << "[domain]\nxmin = " << s.domain.xmin << "\nymin = " << s.domain.ymin << "\nxmax = " << s.domain.xmax
    << "\nymax = " << s.domain.ymax << "\n\n[grid]\nnx = " << s.nx << "\nny = " << s.ny << "\n\n[propagation]\neta = "
    << s.scene.params.eta << "\nd0 = " << s.scene.params.d0 << "\nr_min = " << s.scene.params.r_min << "\n";
  for (std::size_t i = 0; i < s.scene.size(); ++i) {
    const auto& t = s.scene.transmitters[i];
    o << "\n[transmitter]\nx = " << t.position.x << "\ny = " << t.position.y << "\npower_db = " << t.power_db << "\n";
    if (i < s.scene.shadow.size() && s.scene.shadow[i])
      o << "sigma_db = " << s.scene.shadow[i]->sigma_db << "\ncorr_length = " << s.scene.shadow[i]->corr_length
        << "\nshadow_seed = " << s.scene.shadow[i]->seed << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (scene && dataset) throw UsageError("config: give either a scene or a dataset, not both");
  if (n_samples < 1) throw UsageError("config: sampling n must be >= 1");
  if (raster.nx < 1 || raster.ny < 1) throw UsageError("config: raster nx and ny must be >= 1");
  if (raster.bounds && raster.bounds->degenerate()) throw UsageError("config: raster bounds are degenerate");
  if (mc_passes < 2) throw UsageError("config: uncertainty passes must be >= 2");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

ExperimentConfig parse_experiment(const IniDocument& doc, const fs::path& base_dir) {
  ExperimentConfig c;
  auto& t = c.train;
  for (const auto& sec : doc.sections) {
    Keys k(&sec, "config");
    if (sec.name.empty() || sec.name == "experiment") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "scene") c.scene = resolve(base_dir, v);
        else if (key == "dataset") c.dataset = resolve(base_dir, v);
        else if (key == "out") c.out = resolve(base_dir, v);
        else if (key == "seed") c.seed = k.u64(key, v);
        else if (key == "latlon") c.latlon = k.boolean(key, v);
        else if (key == "record_timing") c.record_timing = k.boolean(key, v);
        else k.unknown(key);
      });
    } else if (sec.name == "train") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "lambda") t.lambda = k.num(key, v);
        else if (key == "learning_rate") t.learning_rate = k.num(key, v);
        else if (key == "max_epochs") t.max_epochs = static_cast<int>(k.integer(key, v));
        else if (key == "batch_size") t.batch_size = static_cast<int>(k.integer(key, v));
        else if (key == "patience") t.patience = static_cast<int>(k.integer(key, v));
        else if (key == "min_delta") t.min_delta = k.num(key, v);
        else if (key == "collocation_count") t.collocation_count = static_cast<int>(k.integer(key, v));
        else if (key == "collocation") {
          try {
            t.collocation = parse_collocation_mode(v);
          } catch (const std::invalid_argument& e) {
            k.bad(key, v, e.what());
          }
        } else if (key == "num_transmitters") t.num_transmitters = static_cast<int>(k.integer(key, v));
        else if (key == "eta") t.propagation.eta = k.num(key, v);
        else if (key == "d0") t.propagation.d0 = k.num(key, v);
        else if (key == "r_min") t.propagation.r_min = k.num(key, v);
        else if (key == "train_eta") t.train_eta = k.boolean(key, v);
        else if (key == "train_transmitters") t.train_transmitters = k.boolean(key, v);
        else if (key == "validation_fraction") t.validation_fraction = k.num(key, v);
        else if (key == "stencil_step") t.stencil_step = k.num(key, v);
        else if (key == "residual_length_unit") t.residual_length_unit = k.num(key, v);
        else k.unknown(key);
      });
    } else if (sec.name == "net") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "hidden_layers") t.net.hidden_layers = static_cast<int>(k.integer(key, v));
        else if (key == "hidden_width") t.net.hidden_width = static_cast<int>(k.integer(key, v));
        else if (key == "dropout_rate") t.net.dropout_rate = k.num(key, v);
        else if (key == "activation") {
          try {
            t.net.activation = parse_activation(v);
          } catch (const std::invalid_argument& e) {
            k.bad(key, v, e.what());
          }
        } else k.unknown(key);
      });
    } else if (sec.name == "sampling") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "strategy") c.strategy = v;
        else if (key == "n") c.n_samples = static_cast<std::size_t>(k.u64(key, v));
        else k.unknown(key);
      });
    } else if (sec.name == "raster") {
      Bounds b;
      int got = 0;
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "nx") c.raster.nx = static_cast<int>(k.integer(key, v));
        else if (key == "ny") c.raster.ny = static_cast<int>(k.integer(key, v));
        else if (key == "xmin") b.xmin = k.num(key, v), ++got;
        else if (key == "ymin") b.ymin = k.num(key, v), ++got;
        else if (key == "xmax") b.xmax = k.num(key, v), ++got;
        else if (key == "ymax") b.ymax = k.num(key, v), ++got;
        else k.unknown(key);
      });
      if (got == 4) c.raster.bounds = b;
      else if (got != 0) throw UsageError("config: [raster] needs all of xmin, ymin, xmax, ymax or none");
    } else if (sec.name == "uncertainty") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "passes") c.mc_passes = static_cast<int>(k.integer(key, v));
        else if (key == "threshold_db") c.mc_threshold_db = k.num(key, v);
        else k.unknown(key);
      });
    } else if (sec.name == "kriging") {
      k.each([&](const std::string& key, const std::string& v) {
        if (key == "variogram") {
          try {
            c.variogram = parse_variogram_kind(v);
          } catch (const std::invalid_argument& e) {
            k.bad(key, v, e.what());
          }
        } else k.unknown(key);
      });
    } else {
      throw UsageError("config: unknown section [" + sec.name + "]");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig read_experiment(const fs::path& path) {
  return parse_experiment(read_ini(path), path.has_parent_path() ? path.parent_path() : fs::path{});
}

// ---------------------------------------------------------------------------

std::vector<Point> project_latlon(const std::vector<std::pair<double, double>>& lat_lon) {
  constexpr double kEarthRadius = 6371008.8;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  if (lat_lon.empty()) return {};
  double lat0 = 0.0, lon0 = 0.0;
  for (const auto& [la, lo] : lat_lon) {
    lat0 += la;
    lon0 += lo;
  }
  lat0 /= static_cast<double>(lat_lon.size());
  lon0 /= static_cast<double>(lat_lon.size());
  const double kx = kEarthRadius * std::cos(lat0 * kDeg) * kDeg;
  const double ky = kEarthRadius * kDeg;
  std::vector<Point> out;
  out.reserve(lat_lon.size());
  for (const auto& [la, lo] : lat_lon) out.push_back({(lo - lon0) * kx, (la - lat0) * ky});
  return out;
}

Dataset parse_measurements(const std::string& text, bool latlon, const std::string& origin) {
  const auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw DataError(origin + ": empty file");
  auto header = split_csv(lines[first]);
  for (auto& h : header) h = lower(h);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int cx = col(latlon ? "lon" : "x"), cy = col(latlon ? "lat" : "y");
  int cr = col("rssi_db");
  if (cr < 0) cr = col("rssi");
  const int cc = col("channel"), ce = col("elevation");
  if (cx < 0 || cy < 0 || cr < 0)
    throw DataError(origin + ": header must contain " + (latlon ? "lat,lon" : "x,y") + ",rssi_db");

  Dataset out;
  std::vector<std::pair<double, double>> ll;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto f = split_csv(lines[li]);
    const std::string where = origin + ":" + std::to_string(li + 1);
    if (f.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    auto num = [&](int c, const char* what) {
      auto v = to_double(f[static_cast<std::size_t>(c)]);
      if (!v || !std::isfinite(*v)) throw DataError(where + ": bad " + std::string(what) + " '" + f[static_cast<std::size_t>(c)] + "'");
      return *v;
    };
    Measurement m;
    const double a = num(cx, latlon ? "lon" : "x"), b = num(cy, latlon ? "lat" : "y");
    m.location = {a, b};
    if (latlon) ll.emplace_back(b, a);
    m.rssi_db = num(cr, "rssi_db");
    if (cc >= 0) {
      m.channel = f[static_cast<std::size_t>(cc)];
      if (m.channel.empty()) throw DataError(where + ": empty channel label");
    }
    if (ce >= 0 && !f[static_cast<std::size_t>(ce)].empty()) m.elevation = num(ce, "elevation");
    out.push_back(std::move(m));
  }
  if (out.empty()) throw DataError(origin + ": no measurements");
  if (latlon) {
    const auto pts = project_latlon(ll);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].location = pts[i];
  }
  return out;
}

Dataset read_measurements(const fs::path& path, bool latlon) {
  return parse_measurements(read_text(path), latlon, path.string());
}

void write_measurements(const fs::path& path, const Dataset& data) {
  const bool elev = std::any_of(data.begin(), data.end(), [](const auto& m) { return m.elevation.has_value(); });
  std::string s = elev ? "x,y,rssi_db,channel,elevation\n" : "x,y,rssi_db,channel\n";
  for (const auto& m : data) {
    s += fmt6(m.location.x) + "," + fmt6(m.location.y) + "," + fmt6(m.rssi_db) + "," + m.channel;
    if (elev) s += "," + (m.elevation ? fmt6(*m.elevation) : std::string());
    s += "\n";
  }
  write_text(path, s);
}

void write_selection(const fs::path& path, const std::vector<std::size_t>& idx, const std::vector<Point>& pts) {
  std::string s = "index,x,y\n";
  for (auto i : idx) s += std::to_string(i) + "," + fmt6(pts.at(i).x) + "," + fmt6(pts.at(i).y) + "\n";
  write_text(path, s);
}

std::vector<std::size_t> read_selection(const fs::path& path) {
  const auto lines = lines_of(read_text(path));
  std::vector<std::size_t> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto f = split_csv(lines[li]);
    std::size_t v = 0;
    const auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), v);
    if (res.ec != std::errc() || res.ptr != f[0].data() + f[0].size())
      throw DataError(path.string() + ":" + std::to_string(li + 1) + ": bad index");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_raster_csv(const fs::path& path, const RemRaster& r, const std::vector<double>& values) {
  if (values.size() != r.size()) throw std::invalid_argument("write_raster_csv: value count does not match raster");
  std::string s = "x,y,value\n";
  s.reserve(40 * values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Point c = r.cell_center(k);
    s += fmt6(c.x) + "," + fmt6(c.y) + "," + fmt6(values[k]) + "\n";
  }
  write_text(path, s);
}

void write_pgm(const fs::path& path, int nx, int ny, const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw std::invalid_argument("write_pgm: value count does not match the size");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::string s = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  for (int j = ny - 1; j >= 0; --j)
    for (int i = 0; i < nx; ++i) {
      const double v = values[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i)];
      const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
      s.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  write_text(path, s);
}

void write_raster(const fs::path& stem, const RemRaster& r) {
  write_raster_csv(fs::path(stem.string() + ".csv"), r, r.value);
  write_pgm(fs::path(stem.string() + ".pgm"), r.nx, r.ny, r.value);
}

RasterTable read_raster_csv(const fs::path& path) {
  const auto lines = lines_of(read_text(path));
  if (lines.empty() || lower(trim(lines[0])) != "x,y,value") throw DataError(path.string() + ": expected header x,y,value");
  RasterTable t;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto f = split_csv(lines[li]);
    if (f.size() != 3) throw DataError(path.string() + ":" + std::to_string(li + 1) + ": expected 3 fields");
    auto x = to_double(f[0]), y = to_double(f[1]), v = to_double(f[2]);
    if (!x || !y || !v) throw DataError(path.string() + ":" + std::to_string(li + 1) + ": bad number");
    t.centers.push_back({*x, *y});
    t.values.push_back(*v);
  }
  return t;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kModelFormat = "remap-model";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const fs::path& path, const ModelArtifact& a) {
  using nlohmann::json;
  const auto& m = a.model;
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["net"] = {{"input_dim", m.spec().input_dim},
              {"hidden_layers", m.spec().hidden_layers},
              {"hidden_width", m.spec().hidden_width},
              {"activation", std::string(to_string(m.spec().activation))},
              {"dropout_rate", m.spec().dropout_rate},
              {"output_dim", m.spec().output_dim},
              {"seed", m.spec().seed}};
  const auto& n = m.normalization();
  j["normalization"] = {{"xmin", n.input.xmin}, {"ymin", n.input.ymin}, {"xmax", n.input.xmax},
                        {"ymax", n.input.ymax}, {"out_mean", n.out_mean}, {"out_std", n.out_std}};
  j["propagation"] = {{"eta", a.propagation.eta}, {"d0", a.propagation.d0}, {"r_min", a.propagation.r_min}};
  if (a.domain)
    j["domain"] = {{"xmin", a.domain->xmin}, {"ymin", a.domain->ymin}, {"xmax", a.domain->xmax}, {"ymax", a.domain->ymax}};
  j["transmitters"] = json::array();
  for (const auto& t : a.transmitters)
    j["transmitters"].push_back({{"x", t.position.x}, {"y", t.position.y}, {"power_db", t.power_db}});
  j["layers"] = json::array();
  for (const auto& l : m.layers()) {
    json jl;
    jl["rows"] = l.weight.rows();
    jl["cols"] = l.weight.cols();
    // Row-major weights.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    jl["weight"] = w;
    jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    j["layers"].push_back(std::move(jl));
  }
  write_text(path, j.dump() + "\n");
}

ModelArtifact load_model(const fs::path& path) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": not a model artifact (" + e.what() + ")");
  }
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw DataError(path.string() + ": wrong format tag");
    if (j.at("version").get<int>() != kModelVersion)
      throw DataError(path.string() + ": unsupported model version " + std::to_string(j.at("version").get<int>()));
    NetSpec spec;
    const auto& jn = j.at("net");
    spec.input_dim = jn.at("input_dim").get<int>();
    spec.hidden_layers = jn.at("hidden_layers").get<int>();
    spec.hidden_width = jn.at("hidden_width").get<int>();
    spec.activation = parse_activation(jn.at("activation").get<std::string>());
    spec.dropout_rate = jn.at("dropout_rate").get<double>();
    spec.output_dim = jn.at("output_dim").get<int>();
    spec.seed = jn.at("seed").get<std::uint64_t>();
    ModelArtifact a{NetModel(spec), {}, {}};
    const auto& jz = j.at("normalization");
    Normalization norm;
    norm.input = {jz.at("xmin").get<double>(), jz.at("ymin").get<double>(), jz.at("xmax").get<double>(),
                  jz.at("ymax").get<double>()};
    norm.out_mean = jz.at("out_mean").get<double>();
    norm.out_std = jz.at("out_std").get<double>();
    a.model.set_normalization(norm);
    const auto& jp = j.at("propagation");
    a.propagation = {jp.at("eta").get<double>(), jp.at("d0").get<double>(), jp.at("r_min").get<double>()};
    if (j.contains("domain")) {
      const auto& jd = j.at("domain");
      a.domain = Bounds{jd.at("xmin").get<double>(), jd.at("ymin").get<double>(), jd.at("xmax").get<double>(),
                        jd.at("ymax").get<double>()};
    }
    for (const auto& jt : j.at("transmitters"))
      a.transmitters.push_back({{jt.at("x").get<double>(), jt.at("y").get<double>()}, jt.at("power_db").get<double>(), true});
    const auto& jl = j.at("layers");
    auto& layers = a.model.layers();
    if (jl.size() != layers.size()) throw DataError(path.string() + ": layer count does not match the net spec");
    for (std::size_t li = 0; li < layers.size(); ++li) {
      auto& l = layers[li];
      const auto w = jl[li].at("weight").get<std::vector<double>>();
      const auto b = jl[li].at("bias").get<std::vector<double>>();
      if (jl[li].at("rows").get<Eigen::Index>() != l.weight.rows() ||
          jl[li].at("cols").get<Eigen::Index>() != l.weight.cols() ||
          w.size() != static_cast<std::size_t>(l.weight.size()) || b.size() != static_cast<std::size_t>(l.bias.size()))
        throw DataError(path.string() + ": layer " + std::to_string(li) + " has the wrong shape");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w[k++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = b[static_cast<std::size_t>(r)];
    }
    return a;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed model artifact (" + e.what() + ")");
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": invalid model artifact (" + e.what() + ")");
  }
}

void write_train_report(const fs::path& path, const TrainReport& r) {
  std::string s = "epoch,L_d,L_p,L_total,val_mae\n";
  for (const auto& e : r.history)
    s += std::to_string(e.epoch) + "," + fmt6(e.data_loss) + "," + fmt6(e.physics_loss) + "," + fmt6(e.total_loss) +
         "," + fmt6(e.val_mae) + "\n";
  write_text(path, s);
}

std::string format_metrics(const std::vector<MetricsRow>& rows) {
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : fmt6(v); };
  std::string s = "model_name,n_samples,rmse_db,mae_db,r2,p25,p50,p75,train_seconds\n";
  for (const auto& r : rows)
    s += r.model + "," + std::to_string(r.n_samples) + "," + num(r.eval.rmse) + "," + num(r.eval.mae) + "," +
         num(r.eval.r_squared) + "," + num(r.eval.p25) + "," + num(r.eval.p50) + "," + num(r.eval.p75) + "," +
         num(r.train_seconds) + "\n";
  return s;
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) { write_text(path, format_metrics(rows)); }

}  // namespace remap
