#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rheo/data.hpp"
#include "rheo/mlp.hpp"
#include "rheo/physics.hpp"
#include "rheo/random.hpp"
#include "rheo/scaling.hpp"

namespace rheo::nn {

/// Scaled network inputs, graph conditions and targets, one column per sample.
/// PENN inputs are [fingerprint, pdi]; ANN inputs append log Mw, T and
/// log shear in graph coordinates.
struct Prepared {
  Eigen::MatrixXd inputs;
  std::vector<physics::PhysicalConditions> cond;
  Eigen::VectorXd target;

  std::size_t size() const { return static_cast<std::size_t>(target.size()); }
};

Prepared prepare(const data::Dataset& ds, const data::ScalingSpec& scaling, NetKind kind);
Eigen::VectorXd network_input(std::span<const double> fingerprint, double pdi,
                              const physics::PhysicalConditions& cond, NetKind kind);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

struct TrainedModel {
  NetKind kind = NetKind::PENN;
  Mlp net;
  MlpConfig config;
  data::ScalingSpec scaling;
  TrainingLog log;
};

/// Scaled inputs in, scaled log10 viscosity and the bounded parameters out.
/// Dropout is never applied here. Throws DimensionMismatch, or
/// DenominatorTooSmall outside the temperature window.
struct PennOutput {
  double log_eta = 0.0;
  physics::EmpiricalParams params;
};
PennOutput penn_forward(std::span<const double> fingerprint, double pdi,
                        const physics::PhysicalConditions& cond, const TrainedModel& model);
double ann_forward(std::span<const double> fingerprint, double pdi,
                   const physics::PhysicalConditions& cond, const TrainedModel& model);

/// Scaled predictions for every prepared sample.
Eigen::VectorXd predict_scaled(const Mlp& net, NetKind kind, const Prepared& data,
                               physics::WlfGuard guard = physics::WlfGuard::Throw);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Batch loss (viscosity MSE plus, for PENN, the alpha penalty) and its
/// gradient with respect to the packed network parameters. The WLF
/// denominator is floored rather than raising.
LossGrad loss_and_grad(const Mlp& net, NetKind kind, const Prepared& data,
                       std::span<const std::size_t> batch, double w_alpha,
                       std::mt19937_64* dropout_rng = nullptr);

/// Viscosity-only mean squared error in scaled units, no dropout.
double viscosity_loss(const Mlp& net, NetKind kind, const Prepared& data);

/// Adam with L2 weight decay folded into the gradient.
class Adam {
 public:
  Adam(std::size_t n, double lr, double weight_decay = 0.0, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct TrainResult {
  Mlp net;
  TrainingLog log;
};

/// Minibatch Adam. Halves the learning rate after lr_patience epochs without
/// validation improvement, stops after stop_patience, and returns the weights
/// of the best validation epoch. An empty validation set falls back to the
/// training set. Throws EmptyDataset or NonFiniteLoss.
TrainResult train(const Prepared& train, const Prepared& val, const MlpConfig& config,
                  NetKind kind);

/// Fits scaling on the training records, then trains.
TrainedModel train_model(const data::Dataset& train, const data::Dataset& val,
                         const MlpConfig& config, NetKind kind);

/// Holds out a seeded fraction of the records for scheduling and early
/// stopping; scaling is fitted on all records.
TrainedModel train_with_holdout(const data::Dataset& ds, const MlpConfig& config, NetKind kind,
                                double val_fraction = 0.1);

/// k disjoint folds from a seeded shuffle; sizes differ by at most one.
/// Throws TooFewSamples when k < 2 or n < k.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  /// Best held-out viscosity loss, scaled units of the fold's own scaling.
  double val_loss = 0.0;
  std::size_t best_epoch = 0;
};

std::vector<FoldResult> cross_validate(const data::Dataset& ds, const MlpConfig& config,
                                       NetKind kind, std::size_t k = 10);
double mean_val_loss(std::span<const FoldResult> folds);

using rheo::derive_seed;

}  // namespace rheo::nn
