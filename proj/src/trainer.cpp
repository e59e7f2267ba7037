#include "remap/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <sstream>

#include "remap/log.hpp"
#include "remap/optim.hpp"

namespace remap {

CollocationMode parse_collocation_mode(std::string_view name) {
  if (name == "domain") return CollocationMode::domain;
  if (name == "sensors") return CollocationMode::sensors;
  throw std::invalid_argument("unknown collocation mode: " + std::string(name));
}

std::string_view to_string(CollocationMode m) { return m == CollocationMode::domain ? "domain" : "sensors"; }

std::string_view to_string(StopReason r) { return r == StopReason::max_epochs ? "max_epochs" : "early_stop"; }

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be >= 0");
  if (patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (collocation_count < 0) throw std::invalid_argument("collocation_count must be >= 0");
  if (num_transmitters < 1) throw std::invalid_argument("num_transmitters must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");
  if (stencil_step < 0.0) throw std::invalid_argument("stencil_step must be >= 0");
  if (!(residual_length_unit > 0.0)) throw std::invalid_argument("residual_length_unit must be positive");
  if (domain && domain->degenerate()) throw std::invalid_argument("collocation domain is degenerate");
  if (!initial_transmitters.empty() && initial_transmitters.size() != static_cast<std::size_t>(num_transmitters))
    throw std::invalid_argument("initial_transmitters must have num_transmitters entries");
  propagation.validate();
  net.validate();
}

double data_loss(const NetModel& model, std::span<const Measurement> batch) {
  if (batch.empty()) throw std::invalid_argument("data_loss: empty batch");
  const auto pts = locations(batch);
  const auto pred = model.forward_batch(pts);
  double s = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) s += std::abs(pred(static_cast<Eigen::Index>(i)) - batch[i].rssi_db);
  return s / static_cast<double>(batch.size());
}

double physics_loss(const std::function<double(Point)>& field, const FieldScene& scene_estimate,
                    std::span<const Point> collocation, double h) {
  if (collocation.empty()) {
    log_warn("physics_loss: no collocation points, loss defined as 0");
    return 0.0;
  }
  double s = 0.0;
  for (const Point p : collocation) s += std::abs(stencil_laplacian(field, p, h) - pde_rhs(scene_estimate, p));
  return s / static_cast<double>(collocation.size());
}

double physics_loss(const NetModel& model, const FieldScene& scene_estimate, std::span<const Point> collocation,
                    double h) {
  if (collocation.empty()) {
    log_warn("physics_loss: no collocation points, loss defined as 0");
    return 0.0;
  }
  const auto lap = stencil_combine(model.forward_batch(stencil_points(collocation, h)), h);
  double s = 0.0;
  for (std::size_t k = 0; k < collocation.size(); ++k)
    s += std::abs(lap(static_cast<Eigen::Index>(k)) - pde_rhs(scene_estimate, collocation[k]));
  return s / static_cast<double>(collocation.size());
}

double total_loss(double ld, double lp, double lambda) { return (1.0 - lambda) * ld + lambda * lp; }

std::vector<Transmitter> initial_transmitters(std::span<const Measurement> data, int m) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].rssi_db > data[b].rssi_db; });
  const double max_rssi = data[order.front()].rssi_db;
  const double min_sep = 0.1 * bounding_box(data).diagonal();

  std::vector<std::size_t> picked;
  for (std::size_t idx : order) {
    if (picked.size() == static_cast<std::size_t>(m)) break;
    const bool far = std::all_of(picked.begin(), picked.end(), [&](std::size_t q) {
      return distance(data[q].location, data[idx].location) >= min_sep;
    });
    if (far) picked.push_back(idx);
  }
  // Not enough well-separated samples: fill with the next strongest ones.
  for (std::size_t idx : order) {
    if (picked.size() == static_cast<std::size_t>(m)) break;
    if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
  }

  std::vector<Transmitter> tx;
  for (std::size_t idx : picked) tx.push_back({data[idx].location, max_rssi + 20.0, true});
  return tx;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(std::size_t n, double fraction,
                                                                                    std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (fraction > 0.0 && n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

namespace {

// Transmitter parameters in optimizer units: positions relative to the
// input box center in half-spans, powers in 10 dB steps from the initial value.
struct TxParams {
  Point center;
  double half_w = 1.0;
  double half_h = 1.0;
  double power_ref = 0.0;
  std::vector<double> theta;  // [u_0, v_0, q_0, u_1, ...] then eta if trained

  void from(const std::vector<Transmitter>& tx, double eta, bool with_eta) {
    theta.clear();
    for (const auto& t : tx) {
      theta.push_back((t.position.x - center.x) / half_w);
      theta.push_back((t.position.y - center.y) / half_h);
      theta.push_back((t.power_db - power_ref) / 10.0);
    }
    if (with_eta) theta.push_back(eta);
  }

  void to(std::vector<Transmitter>& tx, PropagationParams& prm, bool with_eta) const {
    for (std::size_t i = 0; i < tx.size(); ++i) {
      tx[i].position = {center.x + theta[3 * i] * half_w, center.y + theta[3 * i + 1] * half_h};
      tx[i].power_db = power_ref + 10.0 * theta[3 * i + 2];
    }
    if (with_eta) prm.eta = std::max(theta.back(), 1e-3);
  }
};

struct Snapshot {
  std::vector<DenseLayer> layers;
  std::vector<Transmitter> tx;
  PropagationParams prm;
};

Bounds widen_degenerate(Bounds b) {
  const double span = std::max({b.width(), b.height(), 1.0});
  if (!(b.width() > 0.0)) {
    b.xmin -= 0.5 * span;
    b.xmax += 0.5 * span;
  }
  if (!(b.height() > 0.0)) {
    b.ymin -= 0.5 * span;
    b.ymax += 0.5 * span;
  }
  return b;
}

}  // namespace

TrainResult train(std::span<const Measurement> dataset, const TrainConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t n = dataset.size();
  const int m_tx = config.num_transmitters;
  if (n < static_cast<std::size_t>(m_tx) + 3)
    throw DataError("training needs at least num_transmitters + 3 samples, got " + std::to_string(n));
  const Bounds raw_box = bounding_box(dataset);
  if (raw_box.width() == 0.0 && raw_box.height() == 0.0) throw DataError("all sample locations are identical");
  for (const auto& s : dataset)
    if (!std::isfinite(s.rssi_db) || !std::isfinite(s.location.x) || !std::isfinite(s.location.y))
      throw DataError("non-finite sample");

  const auto [train_idx, val_idx] =
      train_validation_split(n, config.validation_fraction, derive_seed(config.seed, "split"));
  Dataset train_set, val_set;
  for (auto i : train_idx) train_set.push_back(dataset[i]);
  for (auto i : val_idx) val_set.push_back(dataset[i]);

  NetSpec spec = config.net;
  spec.seed = derive_seed(config.seed, "net");
  NetModel model(spec);

  Normalization norm;
  norm.input = widen_degenerate(raw_box);
  {
    const auto obs = observations(train_set);
    const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
    double var = 0.0;
    for (double o : obs) var += (o - mean) * (o - mean);
    var /= static_cast<double>(obs.size());
    norm.out_mean = mean;
    norm.out_std = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  model.set_normalization(norm);

  const Bounds domain = config.domain.value_or(norm.input);
  const double h = config.stencil_step > 0.0 ? config.stencil_step : default_stencil_step(domain);
  const double unit2 = config.residual_length_unit * config.residual_length_unit;
  const double lambda = config.lambda;
  const bool use_physics = lambda > 0.0;
  const bool train_tx = use_physics && config.train_transmitters;
  const bool train_eta = train_tx && config.train_eta;

  FieldScene scene;
  scene.transmitters =
      config.initial_transmitters.empty() ? initial_transmitters(dataset, m_tx) : config.initial_transmitters;
  scene.params = config.propagation;

  TxParams txp;
  txp.center = norm.input.center();
  txp.half_w = 0.5 * norm.input.width();
  txp.half_h = 0.5 * norm.input.height();
  txp.power_ref = scene.transmitters.front().power_db;
  txp.from(scene.transmitters, scene.params.eta, train_eta);

  Adam adam(config.learning_rate);
  for (const auto& l : model.layers()) {
    adam.add_block(l.weight.size());
    adam.add_block(l.bias.size());
  }
  if (train_tx) adam.add_block(static_cast<Eigen::Index>(txp.theta.size()));

  std::mt19937_64 dropout_rng(derive_seed(config.seed, "dropout"));
  std::mt19937_64 colloc_rng(derive_seed(config.seed, "collocation"));
  std::mt19937_64 batch_rng(derive_seed(config.seed, "batches"));

  const std::vector<Point> val_pts = locations(val_set);
  const std::vector<double> val_obs = observations(val_set);

  const std::size_t n_train = train_set.size();
  const std::size_t batch = config.batch_size > 0 ? std::min<std::size_t>(config.batch_size, n_train) : n_train;
  const std::size_t n_batches = (n_train + batch - 1) / batch;
  const int colloc_per_step =
      static_cast<int>((static_cast<std::size_t>(config.collocation_count) + n_batches - 1) / n_batches);

  TrainReport report;
  Snapshot best{model.layers(), scene.transmitters, scene.params};
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  std::uniform_real_distribution<double> ux(domain.xmin, domain.xmax), uy(domain.ymin, domain.ymax);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (n_batches > 1) std::shuffle(order.begin(), order.end(), batch_rng);
    double ep_ld = 0.0, ep_lp = 0.0;

    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(lo + batch, n_train);
      const auto nb = static_cast<Eigen::Index>(hi - lo);
      std::vector<Point> pts;
      std::vector<double> obs;
      for (std::size_t k = lo; k < hi; ++k) {
        pts.push_back(train_set[order[k]].location);
        obs.push_back(train_set[order[k]].rssi_db);
      }

      // Data term.
      const auto masks = model.spec().dropout_rate > 0.0 ? model.sample_masks(nb, dropout_rng) : DropoutMasks{};
      const Tape tape_d = model.record(pts, masks);
      double ld = 0.0;
      Eigen::RowVectorXd cot_d(nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        const double e = tape_d.output(k) - obs[static_cast<std::size_t>(k)];
        ld += std::abs(e);
        cot_d(k) = (e > 0.0) - (e < 0.0);
      }
      ld /= static_cast<double>(nb);
      cot_d *= (1.0 - lambda) / static_cast<double>(nb);
      ParamGrads grads = model.backward(tape_d, cot_d);

      // Physics term.
      double lp = 0.0;
      std::vector<double> tx_grad(txp.theta.size(), 0.0);
      if (use_physics) {
        std::vector<Point> colloc;
        if (config.collocation == CollocationMode::sensors) {
          colloc = pts;
        } else {
          while (static_cast<int>(colloc.size()) < colloc_per_step) {
            const Point c{ux(colloc_rng), uy(colloc_rng)};
            const bool clear = std::all_of(scene.transmitters.begin(), scene.transmitters.end(), [&](const auto& t) {
              return distance(c, t.position) >= scene.params.r_min;
            });
            if (clear) colloc.push_back(c);
          }
        }
        if (!colloc.empty()) {
          const auto spts = stencil_points(colloc, h);
          const Tape tape_p = model.record(spts);
          const Eigen::VectorXd lap = stencil_combine(tape_p.output, h);
          const auto nc = static_cast<double>(colloc.size());
          Eigen::RowVectorXd cot_p = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(spts.size()));
          const double inv_h2 = 1.0 / (h * h);
          for (std::size_t k = 0; k < colloc.size(); ++k) {
            const auto g = pde_rhs_with_gradient(scene, colloc[k]);
            const double r = lap(static_cast<Eigen::Index>(k)) - g.value;
            lp += std::abs(r);
            const double s = ((r > 0.0) - (r < 0.0)) * lambda * unit2 / nc;
            const auto c = static_cast<Eigen::Index>(5 * k);
            cot_p(c) = -4.0 * s * inv_h2;
            for (int j = 1; j < 5; ++j) cot_p(c + j) = s * inv_h2;
            if (train_tx) {
              for (std::size_t i = 0; i < scene.size(); ++i) {
                tx_grad[3 * i] -= s * g.d_position[i][0] * txp.half_w;
                tx_grad[3 * i + 1] -= s * g.d_position[i][1] * txp.half_h;
                tx_grad[3 * i + 2] -= s * g.d_power[i] * 10.0;
              }
              if (train_eta) tx_grad.back() -= s * g.d_eta;
            }
          }
          lp = unit2 * lp / nc;
          grads += model.backward(tape_p, cot_p);
        }
      }

      const double total = total_loss(ld, lp, lambda);
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " (L_d=" << ld << ", L_p=" << lp << ")";
        throw NumericalError(msg.str());
      }

      adam.begin_step();
      std::size_t block = 0;
      for (std::size_t l = 0; l < model.layers().size(); ++l) {
        adam.update(block++, model.layers()[l].weight.data(), grads.layers[l].weight.data());
        adam.update(block++, model.layers()[l].bias.data(), grads.layers[l].bias.data());
      }
      if (train_tx) {
        for (std::size_t i = 0; i < scene.size(); ++i)
          if (!scene.transmitters[i].trainable) std::fill_n(tx_grad.begin() + static_cast<std::ptrdiff_t>(3 * i), 3, 0.0);
        adam.update(block, txp.theta.data(), tx_grad.data());
        txp.to(scene.transmitters, scene.params, train_eta);
      }
      ep_ld += ld;
      ep_lp += lp;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.data_loss = ep_ld / static_cast<double>(n_batches);
    rec.physics_loss = ep_lp / static_cast<double>(n_batches);
    rec.total_loss = total_loss(rec.data_loss, rec.physics_loss, lambda);
    if (!val_pts.empty()) {
      const auto pred = model.forward_batch(val_pts);
      double s = 0.0;
      for (std::size_t k = 0; k < val_pts.size(); ++k) s += std::abs(pred(static_cast<Eigen::Index>(k)) - val_obs[k]);
      rec.val_mae = s / static_cast<double>(val_pts.size());
    }
    if (!std::isfinite(rec.val_mae)) throw NumericalError("non-finite validation error at epoch " + std::to_string(epoch));
    report.history.push_back(rec);

    if (val_pts.empty() || config.patience == 0) {
      best = {model.layers(), scene.transmitters, scene.params};
      report.best_epoch = epoch;
      continue;
    }
    if (rec.val_mae < best_val - config.min_delta) {
      best_val = rec.val_mae;
      best = {model.layers(), scene.transmitters, scene.params};
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stop = StopReason::early_stop;
      break;
    }
  }

  model.layers() = best.layers;
  report.transmitters = best.tx;
  report.eta = best.prm.eta;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return TrainResult{std::move(model), best.tx, best.prm, std::move(report)};
}

Point RemRaster::cell_center(std::size_t k) const {
  const auto i = static_cast<double>(k % static_cast<std::size_t>(nx));
  const auto j = static_cast<double>(k / static_cast<std::size_t>(nx));
  return {bounds.xmin + (i + 0.5) * bounds.width() / nx, bounds.ymin + (j + 0.5) * bounds.height() / ny};
}

std::vector<Point> RemRaster::cell_centers() const {
  std::vector<Point> pts(size());
  for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = cell_center(k);
  return pts;
}

RemRaster make_raster(const Bounds& bounds, int nx, int ny) {
  if (bounds.degenerate()) throw std::invalid_argument("raster bounds are degenerate");
  if (nx < 1 || ny < 1) throw std::invalid_argument("raster needs at least one cell per axis");
  RemRaster r;
  r.bounds = bounds;
  r.nx = nx;
  r.ny = ny;
  r.value.assign(r.size(), 0.0);
  return r;
}

namespace {
constexpr std::size_t kChunk = 2048;
}

RemRaster predict_raster(const NetModel& model, const Bounds& bounds, int nx, int ny) {
  RemRaster r = make_raster(bounds, nx, ny);
  const auto pts = r.cell_centers();
  for (std::size_t lo = 0; lo < pts.size(); lo += kChunk) {
    const std::size_t hi = std::min(lo + kChunk, pts.size());
    const auto y = model.forward_batch(std::span<const Point>(pts).subspan(lo, hi - lo));
    for (std::size_t k = lo; k < hi; ++k) r.value[k] = y(static_cast<Eigen::Index>(k - lo));
  }
  return r;
}

RemRaster uncertainty_raster(const NetModel& model, const Bounds& bounds, int nx, int ny, int passes,
                             double threshold_db, std::uint64_t seed) {
  if (passes < 2) throw std::invalid_argument("uncertainty_raster needs at least 2 passes");
  RemRaster r = predict_raster(model, bounds, nx, ny);
  r.std.assign(r.size(), 0.0);
  r.mask.assign(r.size(), 0);
  if (model.spec().dropout_rate == 0.0) {
    log_warn("uncertainty_raster: dropout rate is 0, uncertainty is identically zero");
    return r;
  }
  const auto pts = r.cell_centers();
  // draws[pass * cells + k]
  std::vector<double> draws(static_cast<std::size_t>(passes) * pts.size());
  for (int p = 0; p < passes; ++p) {
    std::mt19937_64 rng(derive_seed(seed, "mc-pass", static_cast<std::uint64_t>(p)));
    for (std::size_t lo = 0; lo < pts.size(); lo += kChunk) {
      const std::size_t hi = std::min(lo + kChunk, pts.size());
      const auto masks = model.sample_masks(static_cast<Eigen::Index>(hi - lo), rng);
      const auto y = model.forward_batch(std::span<const Point>(pts).subspan(lo, hi - lo), masks);
      for (std::size_t k = lo; k < hi; ++k)
        draws[static_cast<std::size_t>(p) * pts.size() + k] = y(static_cast<Eigen::Index>(k - lo));
    }
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double shift = draws[k];
    double sum = 0.0;
    for (int p = 0; p < passes; ++p) sum += draws[static_cast<std::size_t>(p) * pts.size() + k] - shift;
    const double mean = sum / passes;
    double ss = 0.0;
    for (int p = 0; p < passes; ++p) {
      const double d = draws[static_cast<std::size_t>(p) * pts.size() + k] - shift - mean;
      ss += d * d;
    }
    r.std[k] = std::sqrt(ss / passes);
    r.mask[k] = r.std[k] > threshold_db ? 1 : 0;
  }
  return r;
}

}  // namespace remap
