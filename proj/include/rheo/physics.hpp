#pragma once

// Differentiable melt-viscosity graph.
//
// log10 viscosity is composed from three laws evaluated in scaled graph
// coordinates:
//   Mw law     piecewise power law with a logistic switch at log_mcr
//   WLF shift  -c1 (T - t_ref) / (c2 + T - t_ref), added in log space
//   shear law  zero-shear plateau switching to slope (n - 1) past log_gcr
// Every function here is pure. The same formulas are used in physical units
// (log10 g/mol, K, log10 1/s) by the synthetic generator.

#include <array>
#include <cstddef>
#include <span>

namespace rheo::physics {

inline constexpr std::size_t kNumParams = 11;
inline constexpr std::size_t kNumLearned = 10;
inline constexpr std::size_t kNumConditions = 3;

/// Transition sharpness of the shear switch; never learned.
inline constexpr double kShearBeta = 30.0;
/// Smallest admissible WLF denominator c2 + (T - t_ref), scaled units.
inline constexpr double kMinWlfDenominator = 1e-6;

/// Index of each parameter in array views and gradients. The first ten are
/// the raw outputs of the parameter network, in the same order.
enum class Param : std::size_t {
  LogK1 = 0,
  Alpha1,
  Alpha2,
  LogMcr,
  BetaMw,
  C1,
  C2,
  TRef,
  N,
  LogGcr,
  BetaG,
};

enum class Cond : std::size_t { LogMw = 0, Temp, LogShear };

constexpr std::size_t idx(Param p) { return static_cast<std::size_t>(p); }
constexpr std::size_t idx(Cond c) { return static_cast<std::size_t>(c); }

struct EmpiricalParams {
  double log_k1 = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 3.4;
  double log_mcr = 0.0;
  double beta_mw = 30.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double t_ref = -1.0;
  double n = 0.5;
  double log_gcr = 0.0;
  double beta_g = kShearBeta;

  std::array<double, kNumParams> to_array() const;
  static EmpiricalParams from_array(const std::array<double, kNumParams>& a);

  bool operator==(const EmpiricalParams&) const = default;
};

struct PhysicalConditions {
  double log_mw = 0.0;
  double temp = 0.0;
  double log_shear = 0.0;
};

struct Range {
  double lo;
  double hi;
};

/// Admissible range of each learned parameter in scaled units.
const std::array<Range, kNumLearned>& learned_ranges();

/// True when every field is finite, the learned fields lie in their ranges
/// (closed at the ends, since a saturated logistic reaches them in floating
/// point) and beta_g equals kShearBeta.
bool within_bounds(const EmpiricalParams& p);

/// 1 / (1 + exp(-beta x)) without overflow; saturates to exactly 0 or 1.
double smooth_heaviside(double x, double beta);

double log_eta_mw(double log_mw, const EmpiricalParams& p);

/// Throws DenominatorTooSmall when c2 + (T - t_ref) <= kMinWlfDenominator.
double wlf_log_shift(double temp, const EmpiricalParams& p);

double log_eta0(double log_mw, double temp, const EmpiricalParams& p);

double log_eta(const PhysicalConditions& cond, const EmpiricalParams& p);

struct LogEtaGradient {
  double value = 0.0;
  std::array<double, kNumParams> d_params{};
  std::array<double, kNumConditions> d_cond{};
};

/// What log_eta_with_grad does with a WLF denominator at or below
/// kMinWlfDenominator: raise DenominatorTooSmall, or hold the denominator at
/// the floor (training only; the held value has no denominator derivative).
enum class WlfGuard { Throw, Floor };

/// log_eta together with its exact partial derivatives.
LogEtaGradient log_eta_with_grad(const PhysicalConditions& cond,
                                 const EmpiricalParams& p,
                                 WlfGuard guard = WlfGuard::Throw);

/// Maps ten unconstrained network outputs into the admissible ranges with
/// lo + (hi - lo) * sigmoid(raw); beta_g is set to kShearBeta.
EmpiricalParams bound_params(std::span<const double> raw);

/// d param_i / d raw_i of bound_params (the map is diagonal).
std::array<double, kNumLearned> bound_params_jacobian(
    std::span<const double> raw);

}  // namespace rheo::physics
