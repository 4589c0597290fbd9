#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rheo::fit {

// Parameter layouts, all in physical units:
//   MwLaw    (log_k1, alpha1, alpha2, log_mcr), x = log10 Mw, exact piecewise
//   ShearLaw (log_eta0, n, log_gcr), x = log10 shear rate, smoothed, beta 30
//   TempLaw  (log_eta_ref, c1, c2, t_ref), x = temperature in K
enum class Law { MwLaw, ShearLaw, TempLaw };

std::string_view to_string(Law law);
/// Accepts "mw", "shear", "temp" and the enum spellings. Throws ValidationError.
Law parse_law(std::string_view name);
std::size_t num_params(Law law);
std::vector<std::string> param_names(Law law);

struct FitPoint {
  double x = 0.0;
  double log_eta = 0.0;
};

struct Bound {
  double lo = 0.0;
  double hi = 0.0;
};

struct FitProblem {
  Law law = Law::MwLaw;
  std::vector<FitPoint> points;
  std::vector<double> initial_guess;
  std::vector<Bound> bounds;
  /// Optional; a true entry holds that parameter at its initial guess.
  std::vector<bool> fixed;
};

struct FitResult {
  std::vector<double> params;
  double residual_rms = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

struct FitOptions {
  std::size_t max_iterations = 500;
  std::size_t restarts = 3;
  std::uint64_t seed = 0x5eedULL;
};

inline constexpr std::size_t kMinFitPoints = 5;

double evaluate_law(Law law, std::span<const double> params, double x);

/// Throws TooFewPoints below kMinFitPoints.
std::vector<double> default_initial_guess(Law law, std::span<const FitPoint> points);
std::vector<Bound> default_bounds(Law law, std::span<const FitPoint> points);
/// Problem with the default guess and bounds.
FitProblem make_problem(Law law, std::vector<FitPoint> points);

/// Bounded Levenberg-Marquardt on the sum of squared residuals, restarted
/// from jittered guesses; the best run wins. Hitting the iteration cap
/// returns the best point found with converged = false.
FitResult fit(const FitProblem& problem, const FitOptions& options = {});

}  // namespace rheo::fit
