#include "rheo/mlp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "rheo/errors.hpp"

namespace rheo::nn {

namespace {

void activate(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::Tanh) z = z.array().tanh().matrix();
}

// d activation / d pre-activation, written in terms of the activation output.
Eigen::MatrixXd activation_slope(Activation act, const Eigen::MatrixXd& a) {
  if (act == Activation::Identity) return Eigen::MatrixXd::Ones(a.rows(), a.cols());
  return (1.0 - a.array().square()).matrix();
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                             std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - rate;
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng) < keep ? 1.0 / keep : 0.0;
  }
  return m;
}

template <class T>
bool one_of(T v, std::initializer_list<T> allowed) {
  return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

}  // namespace

std::string_view to_string(NetKind kind) { return kind == NetKind::PENN ? "penn" : "ann"; }

NetKind parse_net_kind(std::string_view name) {
  std::string s(name);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "penn") return NetKind::PENN;
  if (s == "ann") return NetKind::ANN;
  throw ValidationError("unknown network kind '" + std::string(name) + "'");
}

bool in_search_grid(const MlpConfig& c) {
  const std::initializer_list<std::size_t> sizes{64, 128, 256, 512};
  const std::initializer_list<double> drops{0.0, 0.01, 0.015, 0.02, 0.025, 0.03};
  return one_of(c.layer1_size, sizes) && one_of(c.layer2_size, sizes) &&
         one_of(c.layer1_dropout, drops) && one_of(c.layer2_dropout, drops) &&
         one_of(c.weight_decay, {1e-5, 5e-5, 1e-4, 5e-4, 1e-3}) &&
         one_of(c.w_alpha, {0.001, 0.005, 0.01, 0.03, 0.05});
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_width()) {
    throw DimensionMismatch("network expects " + std::to_string(input_width()) +
                            " inputs, got " + std::to_string(x.rows()));
  }
  Eigen::MatrixXd h = (layers[0].w * x).colwise() + layers[0].b;
  activate(activation, h);
  Eigen::MatrixXd h2 = (layers[1].w * h).colwise() + layers[1].b;
  activate(activation, h2);
  return (layers[2].w * h2).colwise() + layers[2].b;
}

Eigen::VectorXd Mlp::pack() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    flat.segment(at, l.w.size()) = l.w.reshaped();
    at += l.w.size();
    flat.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
  return flat;
}

void Mlp::unpack(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw DimensionMismatch("parameter vector length does not match the network");
  }
  Eigen::Index at = 0;
  for (auto& l : layers) {
    l.w.reshaped() = flat.segment(at, l.w.size());
    at += l.w.size();
    l.b = flat.segment(at, l.b.size());
    at += l.b.size();
  }
}

Mlp make_mlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out,
             std::uint64_t seed, Activation act) {
  Mlp net;
  net.activation = act;
  std::mt19937_64 rng(seed);
  const std::array<std::pair<std::size_t, std::size_t>, 3> dims{{{h1, in}, {h2, h1}, {out, h2}}};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto [rows, cols] = dims[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto& l = net.layers[k];
    l.w.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    l.b.resize(static_cast<Eigen::Index>(rows));
    for (Eigen::Index j = 0; j < l.w.cols(); ++j) {
      for (Eigen::Index i = 0; i < l.w.rows(); ++i) l.w(i, j) = u(rng);
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = u(rng);
  }
  return net;
}

void check_shapes(const Mlp& net) {
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& l = net.layers[k];
    if (l.w.rows() != l.b.size()) throw DimensionMismatch("bias length differs from layer width");
    if (k > 0 && l.w.cols() != net.layers[k - 1].w.rows()) {
      throw DimensionMismatch("layer " + std::to_string(k) + " input width does not chain");
    }
  }
}

Eigen::MatrixXd forward_train(const Mlp& net, const Eigen::MatrixXd& x, std::mt19937_64* rng,
                              ForwardCache& cache) {
  if (static_cast<std::size_t>(x.rows()) != net.input_width()) {
    throw DimensionMismatch("network expects " + std::to_string(net.input_width()) +
                            " inputs, got " + std::to_string(x.rows()));
  }
  cache.x = x;
  cache.a1 = (net.layers[0].w * x).colwise() + net.layers[0].b;
  activate(net.activation, cache.a1);
  Eigen::MatrixXd h1 = cache.a1;
  if (rng && net.dropout1 > 0.0) {
    cache.mask1 = dropout_mask(h1.rows(), h1.cols(), net.dropout1, *rng);
    h1 = h1.cwiseProduct(cache.mask1);
  } else {
    cache.mask1.resize(0, 0);
  }
  cache.a2 = (net.layers[1].w * h1).colwise() + net.layers[1].b;
  activate(net.activation, cache.a2);
  Eigen::MatrixXd h2 = cache.a2;
  if (rng && net.dropout2 > 0.0) {
    cache.mask2 = dropout_mask(h2.rows(), h2.cols(), net.dropout2, *rng);
    h2 = h2.cwiseProduct(cache.mask2);
  } else {
    cache.mask2.resize(0, 0);
  }
  return (net.layers[2].w * h2).colwise() + net.layers[2].b;
}

Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& d_out) {
  Eigen::MatrixXd h1 = cache.mask1.size() ? cache.a1.cwiseProduct(cache.mask1) : cache.a1;
  Eigen::MatrixXd h2 = cache.mask2.size() ? cache.a2.cwiseProduct(cache.mask2) : cache.a2;

  std::array<Eigen::MatrixXd, 3> gw;
  std::array<Eigen::VectorXd, 3> gb;
  gw[2] = d_out * h2.transpose();
  gb[2] = d_out.rowwise().sum();

  Eigen::MatrixXd d = net.layers[2].w.transpose() * d_out;
  if (cache.mask2.size()) d = d.cwiseProduct(cache.mask2);
  d = d.cwiseProduct(activation_slope(net.activation, cache.a2));
  gw[1] = d * h1.transpose();
  gb[1] = d.rowwise().sum();

  d = net.layers[1].w.transpose() * d;
  if (cache.mask1.size()) d = d.cwiseProduct(cache.mask1);
  d = d.cwiseProduct(activation_slope(net.activation, cache.a1));
  gw[0] = d * cache.x.transpose();
  gb[0] = d.rowwise().sum();

  Eigen::VectorXd flat(static_cast<Eigen::Index>(net.num_parameters()));
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    flat.segment(at, gw[k].size()) = gw[k].reshaped();
    at += gw[k].size();
    flat.segment(at, gb[k].size()) = gb[k];
    at += gb[k].size();
  }
  return flat;
}

double loss_penn(std::span<const double> pred, std::span<const double> target,
                 std::span<const double> alpha1, std::span<const double> alpha2, double w_alpha) {
  if (pred.empty()) throw EmptyBatch("loss needs at least one sample");
  if (pred.size() != target.size()) throw LengthMismatch("predictions and targets differ in length");
  if (alpha1.size() != alpha2.size() || (!alpha1.empty() && alpha1.size() != pred.size())) {
    throw LengthMismatch("alpha vectors must match the batch");
  }
  const double n = static_cast<double>(pred.size());
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) mse += (pred[i] - target[i]) * (pred[i] - target[i]);
  double pen = 0.0;
  for (std::size_t i = 0; i < alpha1.size(); ++i) {
    pen += (alpha1[i] - kAlpha1Target) * (alpha1[i] - kAlpha1Target) +
           (alpha2[i] - kAlpha2Target) * (alpha2[i] - kAlpha2Target);
  }
  return mse / n + w_alpha * pen / n;
}

physics::EmpiricalParams raw_to_params(const Eigen::Ref<const Eigen::VectorXd>& raw) {
  return physics::bound_params(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())));
}

}  // namespace rheo::nn
