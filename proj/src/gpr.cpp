#include "rheo/gpr.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rheo/errors.hpp"
#include "rheo/training.hpp"

namespace rheo::gpr {

namespace {

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             const GprHyperparams& hp) {
  // |a - b|^2 = |a|^2 + |b|^2 - 2 a.b
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  const double s = -0.5 / (hp.length_scale * hp.length_scale);
  return hp.constant_value * (d2.array().max(0.0) * s).exp().matrix();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

Eigen::MatrixXd rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd entries(const Eigen::VectorXd& y, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
  return out;
}

}  // namespace

bool in_range(const GprHyperparams& hp) {
  return hp.alpha >= kAlphaLo && hp.alpha <= kAlphaHi && hp.length_scale >= kLengthLo &&
         hp.length_scale <= kLengthHi && hp.constant_value >= kConstLo &&
         hp.constant_value <= kConstHi;
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GprHyperparams& hp) {
  return hp.constant_value *
         std::exp(-(a - b).squaredNorm() / (2.0 * hp.length_scale * hp.length_scale));
}

GprModel gpr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GprHyperparams& hp) {
  if (x.rows() == 0) throw EmptyDataset("GPR needs at least one training point");
  if (x.rows() != y.size()) throw LengthMismatch("GPR inputs and targets differ in length");
  if (!(hp.alpha > 0.0 && hp.length_scale > 0.0 && hp.constant_value > 0.0)) {
    throw ValidationError("GPR hyperparameters must be positive");
  }
  GprModel m;
  m.x = x;
  m.y = y;
  m.hp = hp;
  Eigen::MatrixXd k = cross_kernel(x, x, hp);
  k.diagonal().array() += hp.alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("kernel matrix with alpha = " + std::to_string(hp.alpha) +
                              " is not positive definite");
  }
  m.chol = llt.matrixL();
  m.dual = llt.solve(y);
  return m;
}

double factorization_residual(const GprModel& m) {
  Eigen::MatrixXd k = cross_kernel(m.x, m.x, m.hp);
  k.diagonal().array() += m.hp.alpha;
  return (m.chol * m.chol.transpose() - k).cwiseAbs().maxCoeff();
}

GprPrediction gpr_predict(const GprModel& m, const Eigen::MatrixXd& x_star) {
  if (x_star.cols() != m.x.cols()) {
    throw DimensionMismatch("GPR was trained on " + std::to_string(m.x.cols()) +
                            " features, got " + std::to_string(x_star.cols()));
  }
  const Eigen::MatrixXd ks = cross_kernel(m.x, x_star, m.hp);  // n x m
  GprPrediction p;
  p.mean = ks.transpose() * m.dual;
  const Eigen::MatrixXd v = m.chol.triangularView<Eigen::Lower>().solve(ks);
  p.variance = (m.hp.constant_value - v.colwise().squaredNorm().array()).matrix().transpose();
  for (Eigen::Index i = 0; i < p.variance.size(); ++i) {
    if (p.variance[i] < 0.0) {
      if (p.variance[i] < -1e-12) spdlog::debug("GPR variance {} clamped to 0", p.variance[i]);
      p.variance[i] = 0.0;
    }
  }
  return p;
}

GprSearchResult gpr_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const GprSearchOptions& options) {
  if (options.iterations == 0) throw ValidationError("GPR search needs at least one iteration");
  const auto folds = nn::kfold(static_cast<std::size_t>(x.rows()), options.folds,
                               nn::derive_seed(options.seed, 1));
  std::mt19937_64 rng(options.seed);
  GprSearchResult res;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.iterations; ++it) {
    GprTrial t;
    t.hp.alpha = log_uniform(rng, kAlphaLo, kAlphaHi);
    t.hp.length_scale = log_uniform(rng, kLengthLo, kLengthHi);
    t.hp.constant_value = log_uniform(rng, kConstLo, kConstHi);
    try {
      double abs_sum = 0.0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> tr;
        for (std::size_t g = 0; g < folds.size(); ++g) {
          if (g != f) tr.insert(tr.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(tr.begin(), tr.end());
        const auto m = gpr_fit(rows(x, tr), entries(y, tr), t.hp);
        const auto p = gpr_predict(m, rows(x, folds[f]));
        abs_sum += (p.mean - entries(y, folds[f])).cwiseAbs().sum();
      }
      t.score = abs_sum / static_cast<double>(x.rows());
    } catch (const ComputeError& e) {
      t.failed = true;
      t.score = std::numeric_limits<double>::infinity();
      spdlog::warn("GPR proposal {} skipped: {}", it, e.what());
    }
    spdlog::debug("GPR trial {} alpha {:.4g} length {:.4g} const {:.4g} score {:.6g}", it,
                  t.hp.alpha, t.hp.length_scale, t.hp.constant_value, t.score);
    if (!t.failed && t.score < best) {
      best = t.score;
      res.best = t.hp;
    }
    res.trials.push_back(t);
  }
  if (!std::isfinite(best)) throw ComputeError("every GPR proposal failed");
  return res;
}

}  // namespace rheo::gpr
