#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace rheo::gpr {

struct GprHyperparams {
  double alpha = 1e-2;
  double length_scale = 1.0;
  double constant_value = 1.0;

  bool operator==(const GprHyperparams&) const = default;
};

inline constexpr double kAlphaLo = 1e-2, kAlphaHi = 1e1;
inline constexpr double kLengthLo = 1e-2, kLengthHi = 1e2;
inline constexpr double kConstLo = 1e-2, kConstHi = 1e2;

bool in_range(const GprHyperparams& hp);

/// constant_value * exp(-|a - b|^2 / (2 length_scale^2))
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GprHyperparams& hp);

/// Samples are rows of x.
struct GprModel {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd chol;  // lower factor of K + alpha I
  Eigen::VectorXd dual;  // (K + alpha I)^-1 y
  GprHyperparams hp;
};

/// Throws EmptyDataset, LengthMismatch, or NotPositiveDefinite.
GprModel gpr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GprHyperparams& hp);

/// max |L L^T - (K + alpha I)|.
double factorization_residual(const GprModel& m);

struct GprPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Throws DimensionMismatch when the feature width differs from training.
GprPrediction gpr_predict(const GprModel& m, const Eigen::MatrixXd& x_star);

struct GprSearchOptions {
  std::size_t iterations = 50;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
};

struct GprTrial {
  GprHyperparams hp;
  double score = 0.0;  // mean absolute held-out error, target units
  bool failed = false;
};

struct GprSearchResult {
  GprHyperparams best;
  std::vector<GprTrial> trials;
};

/// Log-uniform random proposals over the three ranges, each scored by
/// k-fold mean absolute error; failed proposals are skipped. Throws
/// ComputeError when every proposal fails.
GprSearchResult gpr_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const GprSearchOptions& options = {});

}  // namespace rheo::gpr
