#include "rheo/predictor.hpp"

#include <fmt/format.h>

#include "rheo/errors.hpp"

namespace rheo::model {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::PENN: return "penn";
    case ModelKind::ANN: return "ann";
    case ModelKind::GPR: return "gpr";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "penn" || text == "PENN") return ModelKind::PENN;
  if (text == "ann" || text == "ANN") return ModelKind::ANN;
  if (text == "gpr" || text == "GPR") return ModelKind::GPR;
  throw ValidationError(fmt::format("unknown model kind '{}'", text));
}

Eigen::MatrixXd gpr_features(const data::Dataset& ds, const data::ScalingSpec& scaling) {
  const auto prepared = nn::prepare(ds, scaling, nn::NetKind::ANN);
  return prepared.inputs.transpose();
}

namespace {

Eigen::VectorXd scaled_targets(const data::Dataset& ds, const data::ScalingSpec& scaling) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = scaling.scale_log_eta(ds[i].log10_eta);
  }
  return y;
}

}  // namespace

TrainedGpr train_gpr(const data::Dataset& ds, const gpr::GprHyperparams& hp, std::uint64_t seed) {
  TrainedGpr out;
  out.scaling = data::fit_scaling(ds);
  out.model = gpr::gpr_fit(gpr_features(ds, out.scaling), scaled_targets(ds, out.scaling), hp);
  out.seed = seed;
  return out;
}

TrainedGpr search_gpr(const data::Dataset& ds, const gpr::GprSearchOptions& options,
                      gpr::GprSearchResult* search) {
  const auto scaling = data::fit_scaling(ds);
  const auto x = gpr_features(ds, scaling);
  const auto y = scaled_targets(ds, scaling);
  auto res = gpr::gpr_search(x, y, options);
  TrainedGpr out;
  out.scaling = scaling;
  out.model = gpr::gpr_fit(x, y, res.best);
  out.seed = options.seed;
  if (search) *search = std::move(res);
  return out;
}

Predictor::Predictor(nn::TrainedModel model) : model_(std::move(model)) {}
Predictor::Predictor(TrainedGpr model) : model_(std::move(model)) {}

ModelKind Predictor::kind() const {
  if (gpr()) return ModelKind::GPR;
  return network()->kind == nn::NetKind::PENN ? ModelKind::PENN : ModelKind::ANN;
}

const data::ScalingSpec& Predictor::scaling() const {
  return std::visit([](const auto& m) -> const data::ScalingSpec& { return m.scaling; }, model_);
}

Prediction Predictor::at(std::span<const double> fingerprint, double pdi, double mw, double temp,
                         double shear) const {
  const auto& sc = scaling();
  if (fingerprint.size() != sc.fingerprint.size()) {
    throw DimensionMismatch(fmt::format("model expects {} fingerprint components, got {}",
                                        sc.fingerprint.size(), fingerprint.size()));
  }
  const auto fp = sc.scale_fingerprint(fingerprint);
  const physics::PhysicalConditions cond{sc.scale_log_mw(mw), sc.scale_temp(temp),
                                         sc.scale_shear(shear)};
  const double p = sc.scale_pdi(pdi);
  Prediction out;
  if (const auto* g = gpr()) {
    const Eigen::VectorXd x = nn::network_input(fp, p, cond, nn::NetKind::ANN);
    out.log10_eta = sc.unscale_log_eta(gpr::gpr_predict(g->model, x.transpose()).mean[0]);
    return out;
  }
  const auto& net = *network();
  try {
    const double s = net.kind == nn::NetKind::PENN ? nn::penn_forward(fp, p, cond, net).log_eta
                                                   : nn::ann_forward(fp, p, cond, net);
    out.log10_eta = sc.unscale_log_eta(s);
  } catch (const DenominatorTooSmall& e) {
    out.error = e.what();
  }
  return out;
}

Prediction Predictor::operator()(const data::PolymerSample& s) const {
  return at(s.fingerprint, s.pdi_value(), s.mw, s.temp, s.shear);
}

std::vector<Prediction> Predictor::predict(const data::Dataset& ds) const {
  std::vector<Prediction> out;
  out.reserve(ds.size());
  if (const auto* g = gpr(); g && !ds.empty()) {
    const auto mean = gpr::gpr_predict(g->model, gpr_features(ds, g->scaling)).mean;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      out.push_back({g->scaling.unscale_log_eta(mean[i]), {}});
    }
    return out;
  }
  for (const auto& s : ds) out.push_back((*this)(s));
  return out;
}

std::optional<physics::EmpiricalParams> Predictor::params(std::span<const double> fingerprint,
                                                          double pdi) const {
  const auto* net = network();
  if (!net || net->kind != nn::NetKind::PENN) return std::nullopt;
  const auto& sc = net->scaling;
  if (fingerprint.size() != sc.fingerprint.size()) {
    throw DimensionMismatch(fmt::format("model expects {} fingerprint components, got {}",
                                        sc.fingerprint.size(), fingerprint.size()));
  }
  const auto raw = net->net.forward(
      nn::network_input(sc.scale_fingerprint(fingerprint), sc.scale_pdi(pdi), {}, nn::NetKind::PENN));
  return sc.unscale_params(nn::raw_to_params(raw.col(0)));
}

}  // namespace rheo::model
