#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rheo/data.hpp"
#include "rheo/mlp.hpp"

namespace rheo::nn {

struct SearchGrid {
  std::vector<std::size_t> layer_sizes{64, 128, 256, 512};
  std::vector<double> dropouts{0.0, 0.01, 0.015, 0.02, 0.025, 0.03};
  std::vector<double> weight_decays{1e-5, 5e-5, 1e-4, 5e-4, 1e-3};
  std::vector<double> w_alphas{0.001, 0.005, 0.01, 0.03, 0.05};
};

/// Uniform draw of every searchable field; other fields come from base.
MlpConfig sample_config(const SearchGrid& grid, const MlpConfig& base, std::mt19937_64& rng);

/// Survivors per rung, starting at m and keeping ceil(m / 3) until one is left.
std::vector<std::size_t> halving_schedule(std::size_t m);

/// Scores one config trained for at most the given number of epochs; lower is better.
using Evaluator = std::function<double(const MlpConfig&, std::size_t epochs)>;

struct SearchOptions {
  std::size_t budget = 9;       // configs sampled
  std::size_t min_epochs = 20;  // first rung; each later rung triples it
  std::uint64_t seed = 0;
};

struct SearchTrial {
  std::size_t rung = 0;
  std::size_t config_index = 0;
  std::size_t epochs = 0;
  double score = 0.0;
};

struct SearchResult {
  MlpConfig best;
  std::vector<MlpConfig> sampled;
  std::vector<SearchTrial> trials;
};

/// One successive-halving bracket. Throws EmptyGrid when any grid list is
/// empty or the budget is zero.
SearchResult hyperparameter_search(const SearchGrid& grid, const MlpConfig& base,
                                   const SearchOptions& options, const Evaluator& evaluate);

/// Mean held-out viscosity loss over k folds, with max_epochs capped by the rung.
Evaluator cv_evaluator(const data::Dataset& ds, NetKind kind, std::size_t folds);

}  // namespace rheo::nn
