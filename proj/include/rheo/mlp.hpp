#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rheo/physics.hpp"

namespace rheo::nn {

/// PENN predicts the ten bounded law parameters and evaluates the physics
/// graph; ANN predicts scaled log10 viscosity directly.
enum class NetKind { PENN, ANN };

std::string_view to_string(NetKind kind);
/// Accepts "penn" / "ann" in any case. Throws ValidationError.
NetKind parse_net_kind(std::string_view name);

enum class Activation { Tanh, Identity };

struct MlpConfig {
  std::size_t layer1_size = 128;
  double layer1_dropout = 0.0;
  std::size_t layer2_size = 128;
  double layer2_dropout = 0.0;
  double weight_decay = 1e-5;
  double w_alpha = 0.01;
  double initial_lr = 1e-3;
  std::uint64_t seed = 0;

  std::size_t batch_size = 64;
  std::size_t max_epochs = 1000;
  std::size_t lr_patience = 20;
  double lr_factor = 0.5;
  std::size_t stop_patience = 25;

  bool operator==(const MlpConfig&) const = default;
};

/// Learning rates used when a caller does not pick one.
inline constexpr double kDefaultPennLr = 1e-4;
inline constexpr double kDefaultAnnLr = 1e-3;

/// True when every searchable field takes one of the grid values.
bool in_search_grid(const MlpConfig& c);

struct Dense {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

/// Input, two hidden layers, output: three dense maps.
struct Mlp {
  std::array<Dense, 3> layers;
  Activation activation = Activation::Tanh;
  double dropout1 = 0.0;
  double dropout2 = 0.0;

  std::size_t input_width() const { return static_cast<std::size_t>(layers[0].w.cols()); }
  std::size_t output_width() const { return static_cast<std::size_t>(layers[2].w.rows()); }
  std::size_t num_parameters() const;

  /// Inference pass on column-major samples (width x n); dropout is off.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& flat);
};

/// Weights and biases uniform in +-1/sqrt(fan_in).
Mlp make_mlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out,
             std::uint64_t seed, Activation act = Activation::Tanh);

/// Throws DimensionMismatch when layer shapes do not chain.
void check_shapes(const Mlp& net);

/// Intermediate values kept for the backward pass.
struct ForwardCache {
  Eigen::MatrixXd x, a1, a2, mask1, mask2;
};

/// Training-mode pass. Applies inverted dropout when rng is non-null.
Eigen::MatrixXd forward_train(const Mlp& net, const Eigen::MatrixXd& x, std::mt19937_64* rng,
                              ForwardCache& cache);

/// Gradient of the loss with respect to every packed parameter, given
/// d loss / d output (out x n).
Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& d_out);

/// Mean squared error plus the alpha penalty, both averaged over the batch.
/// alpha1 / alpha2 may be empty (ANN), which drops the penalty.
double loss_penn(std::span<const double> pred, std::span<const double> target,
                 std::span<const double> alpha1, std::span<const double> alpha2, double w_alpha);

inline constexpr double kAlpha1Target = 1.0;
inline constexpr double kAlpha2Target = 3.4;

/// Raw network output column to bounded parameters.
physics::EmpiricalParams raw_to_params(const Eigen::Ref<const Eigen::VectorXd>& raw);

}  // namespace rheo::nn
