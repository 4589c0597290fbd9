#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rheo/data.hpp"
#include "rheo/gpr.hpp"
#include "rheo/physics.hpp"
#include "rheo/scaling.hpp"
#include "rheo/training.hpp"

namespace rheo::model {

enum class ModelKind { PENN, ANN, GPR };

std::string_view to_string(ModelKind kind);
/// Accepts "penn", "ann" or "gpr". Throws ValidationError.
ModelKind parse_model_kind(std::string_view text);

struct TrainedGpr {
  gpr::GprModel model;
  data::ScalingSpec scaling;
  std::uint64_t seed = 0;
};

/// GPR design matrix, one row per sample: the ANN input vector.
Eigen::MatrixXd gpr_features(const data::Dataset& ds, const data::ScalingSpec& scaling);

/// Fits scaling on the records, then an exact GPR on scaled log viscosity.
TrainedGpr train_gpr(const data::Dataset& ds, const gpr::GprHyperparams& hp, std::uint64_t seed = 0);

/// Hyperparameter search followed by a final fit on every record.
TrainedGpr search_gpr(const data::Dataset& ds, const gpr::GprSearchOptions& options,
                      gpr::GprSearchResult* search = nullptr);

/// One prediction in physical units. `log10_eta` is empty when the model
/// cannot be evaluated there (the WLF denominator collapses); `error` then
/// says why.
struct Prediction {
  std::optional<double> log10_eta;
  std::string error;
};

/// Inference front end shared by every model kind.
class Predictor {
 public:
  explicit Predictor(nn::TrainedModel model);
  explicit Predictor(TrainedGpr model);

  ModelKind kind() const;
  const data::ScalingSpec& scaling() const;
  std::size_t fingerprint_width() const { return scaling().fingerprint.size(); }

  /// Prediction at a chemistry and condition set; mw in g/mol, temp in K,
  /// shear in 1/s. Throws DimensionMismatch on a wrong fingerprint width.
  Prediction at(std::span<const double> fingerprint, double pdi, double mw, double temp,
                double shear) const;
  Prediction operator()(const data::PolymerSample& s) const;
  std::vector<Prediction> predict(const data::Dataset& ds) const;

  /// Physical-unit parameters predicted for a chemistry; PENN only, empty
  /// otherwise.
  std::optional<physics::EmpiricalParams> params(std::span<const double> fingerprint,
                                                 double pdi) const;

  const nn::TrainedModel* network() const { return std::get_if<nn::TrainedModel>(&model_); }
  const TrainedGpr* gpr() const { return std::get_if<TrainedGpr>(&model_); }

 private:
  std::variant<nn::TrainedModel, TrainedGpr> model_;
};

}  // namespace rheo::model
