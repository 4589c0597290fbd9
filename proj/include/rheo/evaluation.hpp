#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rheo/curve_fit.hpp"
#include "rheo/data.hpp"
#include "rheo/physics.hpp"
#include "rheo/predictor.hpp"

namespace rheo::eval {

// ---------------------------------------------------------------------------
// Metrics

/// Mean absolute error of log10 viscosity. Throws LengthMismatch or EmptyInput.
double ome(std::span<const double> pred, std::span<const double> truth);

/// 1 - SS_res / SS_tot. Throws LengthMismatch, EmptyInput or ZeroVariance.
double r_squared(std::span<const double> pred, std::span<const double> truth);

/// Histogram KL divergence of P from reference Q, sum P log(P / Q), natural log, on shared bins over
/// the union range with 1e-10 added to every bin before renormalising.
/// Throws EmptySamples.
double kl_divergence(std::span<const double> p, std::span<const double> q, std::size_t bins = 20);

// ---------------------------------------------------------------------------
// Physical-variable splits

enum class Variable { Mw, Shear, Temp };

std::string_view to_string(Variable v);
/// Accepts "mw", "shear", "temp". Throws ValidationError.
Variable parse_variable(std::string_view text);
fit::Law law_for(Variable v);
/// Raw value of the variable: g/mol, 1/s or K.
double variable_value(const data::PolymerSample& s, Variable v);

enum class Side { Lower, Upper };

struct SplitPlan {
  Variable variable = Variable::Mw;
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  /// Held-out monomers in selection order, with their median and the side
  /// sent to test.
  std::vector<std::string> test_monomers;
  std::map<std::string, double> medians;
  std::map<std::string, Side> test_side;
};

inline constexpr double kTestMonomerFraction = 0.1;
inline constexpr std::size_t kMinMonomers = 10;

/// Holds out a seeded tenth of the monomers. Each held-out monomer's records
/// are split at its median of the variable (records at the median count as
/// lower) and a seeded coin sends one side to test, the other to train.
/// Throws TooFewMonomers.
SplitPlan physical_split(const data::Dataset& ds, Variable variable, std::uint64_t seed);

/// Throws InvariantViolation when the plan does not describe ds.
void check_split(const data::Dataset& ds, const SplitPlan& plan);

struct SplitData {
  data::Dataset train;
  data::Dataset test;
};
SplitData apply_split(const data::Dataset& ds, const SplitPlan& plan);

nlohmann::json to_json(const SplitPlan& plan);
SplitPlan split_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr std::size_t kDefaultSweepPoints = 41;
inline constexpr double kTempSweepHalfWidth = 20.0;

/// Grid over one variable with the other conditions fixed at a base record.
struct SweepSpec {
  Variable variable = Variable::Mw;
  std::vector<double> grid;  // raw units
};

/// Mw: log-spaced over 1e2..1e7 g/mol. Shear: log-spaced over 1e-5..1e6 1/s.
/// Temperature: linear over base +- 20 K. Throws ValidationError for n = 0.
SweepSpec make_sweep(Variable variable, const data::PolymerSample& base,
                     std::size_t n = kDefaultSweepPoints);

struct Curve {
  std::string record_id;
  std::string monomer;
  Variable variable = Variable::Mw;
  std::vector<double> grid;
  std::vector<std::optional<double>> pred;
  std::vector<std::optional<double>> truth;
  /// PENN only: predicted parameters at the base record, physical units.
  std::optional<physics::EmpiricalParams> params;

  std::size_t gaps() const;
};

/// Fitting coordinate of a raw grid value: log10 Mw, log10(shear + 1e-5), K.
double sweep_x(Variable v, double raw);

/// Model evaluated at every grid point with the base record's other
/// conditions; points the model cannot evaluate are left empty.
Curve sweep_predict(const model::Predictor& model, const data::PolymerSample& base,
                    const SweepSpec& spec);

/// Fits the law of the sweep variable to the non-empty curve points.
/// Throws TooFewPoints and the curve-fit errors.
fit::FitResult estimate_params_from_sweep(const Curve& curve, fit::Law law);

// ---------------------------------------------------------------------------
// Extrapolation classification

enum class Outcome { Success, FitButWrongTrend, Fail };
std::string_view to_string(Outcome o);

struct Thresholds {
  double theta_acc = 1.0;   // held-out OME, log10 units
  double theta_fit = 0.15;  // temperature fit RMS
  double plateau_slope = 0.05;
};

struct HeldOutPoint {
  double raw = 0.0;  // variable value
  double log10_eta = 0.0;
};

struct Classification {
  Outcome outcome = Outcome::Fail;
  double held_out_ome = 0.0;
  bool accurate = false;
  bool trend = false;
  std::optional<fit::FitResult> fit;
};

/// Accuracy: OME of the curve, interpolated linearly in the fitting
/// coordinate, at the held-out points. Trend: the law-specific shape test on
/// the fitted curve. Success needs both, FitButWrongTrend only accuracy.
Classification classify_extrapolation(const Curve& curve, std::span<const HeldOutPoint> held_out,
                                      fit::Law law, const Thresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Reports

struct Tallies {
  std::size_t success = 0;
  std::size_t wrong_trend = 0;
  std::size_t fail = 0;

  std::size_t total() const { return success + wrong_trend + fail; }
  double success_rate() const;
  void add(Outcome o);
};

struct SweepOutcome {
  std::string record_id;
  std::string monomer;
  std::size_t n_held_out = 0;
  double held_out_ome = 0.0;
  Outcome outcome = Outcome::Fail;
  std::vector<double> fitted;  // empty when the fit failed
  std::size_t gaps = 0;
};

/// Per-parameter values collected across held-out monomers, physical units.
struct ParamDistribution {
  std::string name;
  std::vector<double> truth;
  std::vector<double> model;
  std::optional<double> kl;  // model measured against truth
};

struct EvaluationReport {
  std::string model_kind;
  Variable variable = Variable::Mw;
  std::uint64_t seed = 0;
  Thresholds thresholds;
  std::size_t kl_bins = 20;
  std::size_t n_test = 0;
  std::size_t n_gaps = 0;
  double ome = 0.0;
  std::optional<double> r_squared;
  Tallies tallies;
  std::vector<SweepOutcome> sweeps;
  std::vector<ParamDistribution> params;
  std::vector<Curve> curves;
};

struct EvaluateOptions {
  Thresholds thresholds;
  std::size_t kl_bins = 20;
  std::size_t sweep_points = kDefaultSweepPoints;
  std::uint64_t seed = 0;
};

/// Ground-truth parameters per monomer and an optional noiseless response,
/// used to fill distribution truth and curve truth columns.
struct Truth {
  std::map<std::string, physics::EmpiricalParams> params;
  std::function<std::optional<double>(const data::PolymerSample&)> log10_eta;
};

/// Names of the comparable parameters of a law: slopes and critical points,
/// never the intercept.
std::vector<std::string> compared_params(fit::Law law);
double param_value(const physics::EmpiricalParams& p, std::string_view name);

/// Scores test predictions, then for every held-out monomer sweeps the split
/// variable from the largest group of its test records that share the other
/// two conditions, classifies the extrapolation against that group, and
/// collects parameters (read from PENN, fitted from the sweep otherwise).
EvaluationReport evaluate(const model::Predictor& model, const data::Dataset& test,
                          Variable variable, const EvaluateOptions& options = {},
                          const Truth* truth = nullptr);

nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);

/// Columns record_id, variable, grid_value, pred_log10_eta, true_log10_eta;
/// empty cells for gaps and unknown truth.
void write_curves_csv(std::ostream& out, std::span<const Curve> curves);

}  // namespace rheo::eval
