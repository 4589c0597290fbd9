#include "rheo/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rheo/errors.hpp"

namespace rheo::nn {

namespace {

constexpr std::size_t kCondRows = physics::kNumConditions;

std::size_t input_width(std::size_t fp_width, NetKind kind) {
  return fp_width + 1 + (kind == NetKind::ANN ? kCondRows : 0);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Prepared subset(const Prepared& p, std::span<const std::size_t> idx) {
  Prepared out;
  out.inputs.resize(p.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
  out.target.resize(static_cast<Eigen::Index>(idx.size()));
  out.cond.reserve(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto s = static_cast<Eigen::Index>(idx[j]);
    out.inputs.col(static_cast<Eigen::Index>(j)) = p.inputs.col(s);
    out.target[static_cast<Eigen::Index>(j)] = p.target[s];
    out.cond.push_back(p.cond[idx[j]]);
  }
  return out;
}

data::Dataset pick(const data::Dataset& ds, std::span<const std::size_t> idx) {
  data::Dataset out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds[i]);
  return out;
}

}  // namespace

Eigen::VectorXd network_input(std::span<const double> fingerprint, double pdi,
                              const physics::PhysicalConditions& cond, NetKind kind) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(input_width(fingerprint.size(), kind)));
  Eigen::Index i = 0;
  for (double v : fingerprint) x[i++] = v;
  x[i++] = pdi;
  if (kind == NetKind::ANN) {
    x[i++] = cond.log_mw;
    x[i++] = cond.temp;
    x[i++] = cond.log_shear;
  }
  return x;
}

Prepared prepare(const data::Dataset& ds, const data::ScalingSpec& scaling, NetKind kind) {
  Prepared p;
  const std::size_t width = input_width(scaling.fingerprint.size(), kind);
  p.inputs.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(ds.size()));
  p.target.resize(static_cast<Eigen::Index>(ds.size()));
  p.cond.reserve(ds.size());
  for (std::size_t j = 0; j < ds.size(); ++j) {
    const auto& s = ds[j];
    const auto fp = scaling.scale_fingerprint(s.fingerprint);
    const auto cond = scaling.conditions(s);
    p.inputs.col(static_cast<Eigen::Index>(j)) =
        network_input(fp, scaling.scale_pdi(s.pdi_value()), cond, kind);
    p.cond.push_back(cond);
    p.target[static_cast<Eigen::Index>(j)] = scaling.scale_log_eta(s.log10_eta);
  }
  return p;
}

PennOutput penn_forward(std::span<const double> fingerprint, double pdi,
                        const physics::PhysicalConditions& cond, const TrainedModel& model) {
  if (model.kind != NetKind::PENN) throw ValidationError("penn_forward needs a PENN model");
  const Eigen::MatrixXd raw = model.net.forward(network_input(fingerprint, pdi, cond, NetKind::PENN));
  PennOutput out;
  out.params = raw_to_params(raw.col(0));
  out.log_eta = physics::log_eta(cond, out.params);
  return out;
}

double ann_forward(std::span<const double> fingerprint, double pdi,
                   const physics::PhysicalConditions& cond, const TrainedModel& model) {
  if (model.kind != NetKind::ANN) throw ValidationError("ann_forward needs an ANN model");
  return model.net.forward(network_input(fingerprint, pdi, cond, NetKind::ANN))(0, 0);
}

Eigen::VectorXd predict_scaled(const Mlp& net, NetKind kind, const Prepared& data,
                               physics::WlfGuard guard) {
  const Eigen::MatrixXd out = net.forward(data.inputs);
  if (kind == NetKind::ANN) return out.row(0).transpose();
  Eigen::VectorXd pred(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto p = raw_to_params(out.col(j));
    pred[j] = physics::log_eta_with_grad(data.cond[static_cast<std::size_t>(j)], p, guard).value;
  }
  return pred;
}

LossGrad loss_and_grad(const Mlp& net, NetKind kind, const Prepared& data,
                       std::span<const std::size_t> batch, double w_alpha,
                       std::mt19937_64* dropout_rng) {
  if (batch.empty()) throw EmptyBatch("loss_and_grad needs at least one sample");
  const Prepared b = subset(data, batch);
  ForwardCache cache;
  const Eigen::MatrixXd out = forward_train(net, b.inputs, dropout_rng, cache);
  const auto n = static_cast<double>(batch.size());
  Eigen::MatrixXd d_out(out.rows(), out.cols());
  double loss = 0.0;

  if (kind == NetKind::ANN) {
    const Eigen::VectorXd r = out.row(0).transpose() - b.target;
    loss = r.squaredNorm() / n;
    d_out.row(0) = (2.0 / n) * r.transpose();
  } else {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const auto raw = out.col(j);
      const auto p = raw_to_params(raw);
      const auto jac = physics::bound_params_jacobian(
          std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())));
      const auto g = physics::log_eta_with_grad(b.cond[static_cast<std::size_t>(j)], p,
                                                physics::WlfGuard::Floor);
      const double r = g.value - b.target[j];
      const double e1 = p.alpha1 - kAlpha1Target;
      const double e2 = p.alpha2 - kAlpha2Target;
      loss += (r * r + w_alpha * (e1 * e1 + e2 * e2)) / n;
      for (std::size_t i = 0; i < physics::kNumLearned; ++i) {
        double d = 2.0 * r * g.d_params[i];
        if (i == physics::idx(physics::Param::Alpha1)) d += 2.0 * w_alpha * e1;
        if (i == physics::idx(physics::Param::Alpha2)) d += 2.0 * w_alpha * e2;
        d_out(static_cast<Eigen::Index>(i), j) = d * jac[i] / n;
      }
    }
  }
  return {loss, backward(net, cache, d_out)};
}

double viscosity_loss(const Mlp& net, NetKind kind, const Prepared& data) {
  if (data.size() == 0) throw EmptyBatch("viscosity loss needs at least one sample");
  const Eigen::VectorXd pred = predict_scaled(net, kind, data, physics::WlfGuard::Floor);
  return (pred - data.target).squaredNorm() / static_cast<double>(data.size());
}

Adam::Adam(std::size_t n, double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr),
      wd_(weight_decay),
      b1_(beta1),
      b2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw DimensionMismatch("optimizer state does not match the parameter vector");
  }
  ++t_;
  const Eigen::VectorXd g = grad + wd_ * params;
  m_ = b1_ * m_ + (1.0 - b1_) * g;
  v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainResult train(const Prepared& tr, const Prepared& val, const MlpConfig& config, NetKind kind) {
  if (tr.size() == 0) throw EmptyDataset("no training samples");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  const std::size_t out_width = kind == NetKind::PENN ? physics::kNumLearned : 1;
  Mlp net = make_mlp(static_cast<std::size_t>(tr.inputs.rows()), config.layer1_size,
                     config.layer2_size, out_width, derive_seed(config.seed, 0));
  net.dropout1 = config.layer1_dropout;
  net.dropout2 = config.layer2_dropout;
  const Prepared& monitor = val.size() > 0 ? val : tr;

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, 2));
  Eigen::VectorXd params = net.pack();
  Adam opt(static_cast<std::size_t>(params.size()), config.initial_lr, config.weight_decay);

  TrainResult result;
  Eigen::VectorXd best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0, plateau = 0;
  std::vector<std::size_t> order = iota(tr.size());
  const double w_alpha = kind == NetKind::PENN ? config.w_alpha : 0.0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const auto lg = loss_and_grad(net, kind, tr, batch, w_alpha, &dropout_rng);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        throw NonFiniteLoss("training loss became non-finite at epoch " + std::to_string(epoch));
      }
      total += lg.loss * static_cast<double>(batch.size());
      opt.step(params, lg.grad);
      net.unpack(params);
    }
    const double val_loss = viscosity_loss(net, kind, monitor);
    if (!std::isfinite(val_loss)) {
      throw NonFiniteLoss("validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(
        {epoch, total / static_cast<double>(tr.size()), val_loss, opt.lr()});
    spdlog::debug("epoch {} train {:.6g} val {:.6g} lr {:.3g}", epoch,
                  result.log.epochs.back().train_loss, val_loss, opt.lr());

    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params;
      result.log.best_epoch = epoch;
      stale = 0;
      plateau = 0;
    } else {
      ++stale;
      if (++plateau > config.lr_patience) {
        opt.set_lr(opt.lr() * config.lr_factor);
        plateau = 0;
      }
      if (stale >= config.stop_patience) break;
    }
  }
  net.unpack(best);
  result.net = std::move(net);
  result.log.best_val_loss = best_loss;
  return result;
}

TrainedModel train_model(const data::Dataset& tr, const data::Dataset& val,
                         const MlpConfig& config, NetKind kind) {
  TrainedModel m;
  m.kind = kind;
  m.config = config;
  m.scaling = data::fit_scaling(tr);
  const Prepared ptr = prepare(tr, m.scaling, kind);
  const Prepared pval = prepare(val, m.scaling, kind);
  auto res = train(ptr, pval, config, kind);
  m.net = std::move(res.net);
  m.log = std::move(res.log);
  return m;
}

TrainedModel train_with_holdout(const data::Dataset& ds, const MlpConfig& config, NetKind kind,
                                double val_fraction) {
  if (ds.empty()) throw EmptyDataset("no training records");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ValidationError("validation fraction must lie in [0, 1)");
  }
  auto order = iota(ds.size());
  std::mt19937_64 rng(derive_seed(config.seed, 3));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(ds.size())));
  const std::span<const std::size_t> val_idx(order.data(), n_val);
  const std::span<const std::size_t> tr_idx(order.data() + n_val, order.size() - n_val);

  TrainedModel m;
  m.kind = kind;
  m.config = config;
  m.scaling = data::fit_scaling(ds);
  const Prepared all = prepare(ds, m.scaling, kind);
  auto res = train(subset(all, tr_idx), subset(all, val_idx), config, kind);
  m.net = std::move(res.net);
  m.log = std::move(res.log);
  return m;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw TooFewSamples("cross-validation needs k >= 2");
  if (n < k) {
    throw TooFewSamples(std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  }
  auto order = iota(n);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<FoldResult> cross_validate(const data::Dataset& ds, const MlpConfig& config,
                                       NetKind kind, std::size_t k) {
  const auto folds = kfold(ds.size(), k, derive_seed(config.seed, 4));
  std::vector<FoldResult> out;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr_idx;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) tr_idx.insert(tr_idx.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(tr_idx.begin(), tr_idx.end());
    MlpConfig c = config;
    c.seed = derive_seed(config.seed, 100 + f);
    const auto m = train_model(pick(ds, tr_idx), pick(ds, folds[f]), c, kind);
    out.push_back({tr_idx.size(), folds[f].size(), m.log.best_val_loss, m.log.best_epoch});
  }
  return out;
}

double mean_val_loss(std::span<const FoldResult> folds) {
  if (folds.empty()) throw EmptyInput("no folds");
  double s = 0.0;
  for (const auto& f : folds) s += f.val_loss;
  return s / static_cast<double>(folds.size());
}

}  // namespace rheo::nn
