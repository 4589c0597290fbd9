#include "rheo/search.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

#include "rheo/errors.hpp"
#include "rheo/training.hpp"

namespace rheo::nn {

namespace {

template <class T>
const T& draw(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, v.size() - 1);
  return v[u(rng)];
}

}  // namespace

MlpConfig sample_config(const SearchGrid& grid, const MlpConfig& base, std::mt19937_64& rng) {
  MlpConfig c = base;
  c.layer1_size = draw(grid.layer_sizes, rng);
  c.layer1_dropout = draw(grid.dropouts, rng);
  c.layer2_size = draw(grid.layer_sizes, rng);
  c.layer2_dropout = draw(grid.dropouts, rng);
  c.weight_decay = draw(grid.weight_decays, rng);
  c.w_alpha = draw(grid.w_alphas, rng);
  return c;
}

std::vector<std::size_t> halving_schedule(std::size_t m) {
  std::vector<std::size_t> s;
  if (m == 0) return s;
  s.push_back(m);
  while (m > 1) {
    m = (m + 2) / 3;
    s.push_back(m);
  }
  return s;
}

SearchResult hyperparameter_search(const SearchGrid& grid, const MlpConfig& base,
                                   const SearchOptions& options, const Evaluator& evaluate) {
  if (grid.layer_sizes.empty() || grid.dropouts.empty() || grid.weight_decays.empty() ||
      grid.w_alphas.empty() || options.budget == 0) {
    throw EmptyGrid("search grid or budget is empty");
  }
  SearchResult res;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.budget; ++i) {
    res.sampled.push_back(sample_config(grid, base, rng));
  }

  std::vector<std::size_t> alive(options.budget);
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  const auto schedule = halving_schedule(options.budget);
  std::size_t epochs = options.min_epochs;
  for (std::size_t rung = 0; rung < schedule.size(); ++rung) {
    if (schedule[rung] == 1 && rung > 0) break;  // the survivor needs no further scoring
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i : alive) {
      const double score = evaluate(res.sampled[i], epochs);
      res.trials.push_back({rung, i, epochs, score});
      spdlog::debug("search rung {} config {} epochs {} score {:.6g}", rung, i, epochs, score);
      scored.emplace_back(score, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t keep = rung + 1 < schedule.size() ? schedule[rung + 1] : 1;
    alive.clear();
    for (std::size_t j = 0; j < keep; ++j) alive.push_back(scored[j].second);
    epochs *= 3;
  }
  res.best = res.sampled[alive.front()];
  return res;
}

Evaluator cv_evaluator(const data::Dataset& ds, NetKind kind, std::size_t folds) {
  return [&ds, kind, folds](const MlpConfig& config, std::size_t epochs) {
    MlpConfig c = config;
    c.max_epochs = std::min(c.max_epochs, epochs);
    const auto res = cross_validate(ds, c, kind, folds);
    return mean_val_loss(res);
  };
}

}  // namespace rheo::nn
