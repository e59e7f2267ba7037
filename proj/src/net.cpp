#include "remap/net.hpp"

#include <stdexcept>

namespace remap {

Activation parse_activation(std::string_view name) {
  if (name == "tanh" || name == "smooth_tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

void NetSpec::validate() const {
  if (input_dim != 2) throw std::invalid_argument("input_dim must be 2");
  if (output_dim != 1) throw std::invalid_argument("output_dim must be 1");
  if (hidden_layers < 1) throw std::invalid_argument("hidden_layers must be >= 1");
  if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must lie in [0, 1)");
}

void Normalization::validate() const {
  if (input.degenerate()) throw std::invalid_argument("input normalization box is degenerate");
  if (!std::isfinite(out_mean) || !(out_std > 0.0) || !std::isfinite(out_std))
    throw std::invalid_argument("output normalization must be finite with positive scale");
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

double ParamGrads::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::tanh:
      // 1 - 2 / (e^{2z} + 1) vectorizes; std::tanh does not.
      z = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
      break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::identity: break;
  }
}

// Multiplies delta in place by the activation derivative, given activated values.
void activation_backward(Eigen::MatrixXd& delta, const Eigen::MatrixXd& act, Activation a) {
  switch (a) {
    case Activation::tanh: delta.array() *= 1.0 - act.array().square(); break;
    case Activation::relu: delta.array() *= (act.array() > 0.0).cast<double>(); break;
    case Activation::identity: break;
  }
}

}  // namespace

NetModel::NetModel(const NetSpec& spec) : spec_(spec) {
  spec_.validate();
  std::mt19937_64 rng(spec_.seed);
  int fan_in = spec_.input_dim;
  auto make = [&](int out, int in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = u(rng);
    for (int r = 0; r < out; ++r) l.bias(r) = u(rng);
    return l;
  };
  for (int h = 0; h < spec_.hidden_layers; ++h) {
    layers_.push_back(make(spec_.hidden_width, fan_in));
    fan_in = spec_.hidden_width;
  }
  layers_.push_back(make(spec_.output_dim, fan_in));
}

void NetModel::set_normalization(const Normalization& n) {
  n.validate();
  norm_ = n;
}

std::size_t NetModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::Matrix2Xd NetModel::normalize(std::span<const Point> pts) const {
  Eigen::Matrix2Xd x(2, static_cast<Eigen::Index>(pts.size()));
  const auto& b = norm_.input;
  const double sx = 2.0 / b.width();
  const double sy = 2.0 / b.height();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x(0, static_cast<Eigen::Index>(i)) = (pts[i].x - b.xmin) * sx - 1.0;
    x(1, static_cast<Eigen::Index>(i)) = (pts[i].y - b.ymin) * sy - 1.0;
  }
  return x;
}

DropoutMasks NetModel::sample_masks(Eigen::Index batch, std::mt19937_64& rng) const {
  DropoutMasks masks;
  const double keep = 1.0 - spec_.dropout_rate;
  const double scale = 1.0 / keep;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int h = 0; h < spec_.hidden_layers; ++h) {
    Eigen::MatrixXd m(spec_.hidden_width, batch);
    double* d = m.data();
    for (Eigen::Index k = 0; k < m.size(); ++k) d[k] = u(rng) < keep ? scale : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

Tape NetModel::record(std::span<const Point> pts, const DropoutMasks& masks) const {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (!masks.empty()) {
    if (masks.size() != layers_.size() - 1) throw std::invalid_argument("one dropout mask per hidden layer required");
    for (const auto& m : masks)
      if (m.cols() != n || m.rows() != spec_.hidden_width) throw std::invalid_argument("dropout mask shape mismatch");
  }
  Tape tape;
  tape.input = normalize(pts);
  tape.masks = masks;
  Eigen::MatrixXd h = tape.input;
  const std::size_t hidden = layers_.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    activate(z, spec_.activation);
    tape.activated.push_back(z);
    h = masks.empty() ? std::move(z) : Eigen::MatrixXd(z.cwiseProduct(masks[l]));
  }
  const auto& out = layers_.back();
  Eigen::RowVectorXd y = out.weight * h;
  y.array() += out.bias(0);
  tape.output = (norm_.out_mean + norm_.out_std * y.array()).matrix();
  return tape;
}

Eigen::RowVectorXd NetModel::forward_batch(std::span<const Point> pts, const DropoutMasks& masks) const {
  return record(pts, masks).output;
}

double NetModel::forward(Point p) const { return forward_batch(std::span<const Point>(&p, 1))(0); }

double NetModel::forward(Point p, bool dropout_on, std::mt19937_64& rng) const {
  if (!dropout_on) return forward(p);
  return forward_batch(std::span<const Point>(&p, 1), sample_masks(1, rng))(0);
}

ParamGrads NetModel::zero_grads() const {
  ParamGrads g;
  for (const auto& l : layers_)
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  return g;
}

ParamGrads NetModel::backward(const Tape& tape, const Eigen::RowVectorXd& d_output) const {
  if (d_output.size() != tape.output.size()) throw std::invalid_argument("cotangent size mismatch");
  ParamGrads g;
  g.layers.resize(layers_.size());
  auto layer_input = [&](std::size_t l) -> Eigen::MatrixXd {
    if (l == 0) return tape.input;
    const auto& a = tape.activated[l - 1];
    return tape.masks.empty() ? a : Eigen::MatrixXd(a.cwiseProduct(tape.masks[l - 1]));
  };

  Eigen::MatrixXd delta = norm_.out_std * d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd in = layer_input(l);
    g.layers[l].weight = delta * in.transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
    if (!tape.masks.empty()) back.array() *= tape.masks[l - 1].array();
    activation_backward(back, tape.activated[l - 1], spec_.activation);
    delta = std::move(back);
  }
  return g;
}

double default_stencil_step(const Bounds& domain) { return 0.01 * 0.5 * domain.diagonal(); }

double laplacian(const NetModel& model, Point p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("stencil step must be positive");
  const auto pts = stencil_points(std::span<const Point>(&p, 1), h);
  return stencil_combine(model.forward_batch(pts), h)(0);
}

std::vector<Point> stencil_points(std::span<const Point> centers, double h) {
  std::vector<Point> pts;
  pts.reserve(centers.size() * 5);
  for (const Point c : centers) {
    pts.push_back(c);
    pts.push_back({c.x + h, c.y});
    pts.push_back({c.x - h, c.y});
    pts.push_back({c.x, c.y + h});
    pts.push_back({c.x, c.y - h});
  }
  return pts;
}

Eigen::VectorXd stencil_combine(const Eigen::RowVectorXd& values, double h) {
  const Eigen::Index n = values.size() / 5;
  Eigen::VectorXd lap(n);
  const double inv = 1.0 / (h * h);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double c = values(5 * k);
    lap(k) = ((values(5 * k + 1) - c) + (values(5 * k + 2) - c) + (values(5 * k + 3) - c) + (values(5 * k + 4) - c)) *
             inv;
  }
  return lap;
}

McEstimate mc_forward(const NetModel& model, Point p, int passes, std::uint64_t seed) {
  if (passes < 2) throw std::invalid_argument("mc_forward needs at least 2 passes");
  std::mt19937_64 rng(seed);
  std::vector<double> v(static_cast<std::size_t>(passes));
  for (auto& x : v) x = model.forward(p, true, rng);
  // Shift by the first draw so identical draws give exactly zero spread.
  const double shift = v.front();
  double sum = 0.0;
  for (double x : v) sum += x - shift;
  const double mean_shifted = sum / passes;
  double ss = 0.0;
  for (double x : v) ss += (x - shift - mean_shifted) * (x - shift - mean_shifted);
  McEstimate est;
  est.mean = shift + mean_shifted;
  est.std = std::sqrt(ss / passes);
  return est;
}

}  // namespace remap
