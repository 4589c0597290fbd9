#include "rheo/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rheo/errors.hpp"

namespace rheo::data {

double MinMax::apply(double v) const {
  if (degenerate()) return 0.0;
  return -1.0 + (v - min) * slope();
}

double MinMax::invert(double s) const {
  if (degenerate()) return min;
  return min + (s + 1.0) / slope();
}

std::vector<double> ScalingSpec::scale_fingerprint(std::span<const double> fp) const {
  if (fp.size() != fingerprint.size()) {
    throw DimensionMismatch("fingerprint has " + std::to_string(fp.size()) +
                            " components, scaling expects " +
                            std::to_string(fingerprint.size()));
  }
  std::vector<double> out(fp.size());
  for (std::size_t i = 0; i < fp.size(); ++i) out[i] = fingerprint[i].apply(fp[i]);
  return out;
}

double ScalingSpec::scale_log_mw(double mw) const { return log_eta.apply(std::log10(mw)); }

double ScalingSpec::scale_shear(double shear) const {
  return log_eta.apply(std::log10(shear + kShearOffset));
}

physics::PhysicalConditions ScalingSpec::conditions(const PolymerSample& s) const {
  return {scale_log_mw(s.mw), scale_temp(s.temp), scale_shear(s.shear)};
}

physics::PhysicalConditions ScalingSpec::physical_conditions(const PolymerSample& s) {
  return {std::log10(s.mw), s.temp, std::log10(s.shear + kShearOffset)};
}

physics::EmpiricalParams ScalingSpec::unscale_params(
    const physics::EmpiricalParams& q) const {
  // Scaled log quantities: s = a y + b. Scaled temperature: s = c T + d.
  const double a = log_eta.slope();
  const double b = -1.0 - a * log_eta.min;
  const double c = temp.slope();
  const double d = -1.0 - c * temp.min;
  physics::EmpiricalParams p = q;
  p.log_k1 = (q.log_k1 + q.alpha1 * b - b) / a;
  p.log_mcr = (q.log_mcr - b) / a;
  p.beta_mw = q.beta_mw * a;
  p.c1 = q.c1 / a;
  p.c2 = q.c2 / c;
  p.t_ref = (q.t_ref - d) / c;
  p.log_gcr = (q.log_gcr - b) / a;
  p.beta_g = q.beta_g * a;
  return p;
}

physics::EmpiricalParams ScalingSpec::scale_params(
    const physics::EmpiricalParams& p) const {
  const double a = log_eta.slope();
  const double b = -1.0 - a * log_eta.min;
  const double c = temp.slope();
  const double d = -1.0 - c * temp.min;
  physics::EmpiricalParams q = p;
  q.log_k1 = a * p.log_k1 + b - p.alpha1 * b;
  q.log_mcr = a * p.log_mcr + b;
  q.beta_mw = p.beta_mw / a;
  q.c1 = p.c1 * a;
  q.c2 = p.c2 * c;
  q.t_ref = c * p.t_ref + d;
  q.log_gcr = a * p.log_gcr + b;
  q.beta_g = p.beta_g / a;
  return q;
}

ScalingSpec fit_scaling(const Dataset& training) {
  if (training.empty()) throw EmptyDataset("cannot fit scaling on an empty training set");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t width = training.front().fingerprint.size();
  ScalingSpec spec;
  spec.fingerprint.assign(width, MinMax{inf, -inf});
  spec.pdi = spec.temp = spec.log_eta = MinMax{inf, -inf};
  auto widen = [](MinMax& m, double v) {
    m.min = std::min(m.min, v);
    m.max = std::max(m.max, v);
  };
  for (const auto& s : training) {
    if (s.fingerprint.size() != width) {
      throw DimensionMismatch("fingerprint width differs within the training set");
    }
    for (std::size_t i = 0; i < width; ++i) widen(spec.fingerprint[i], s.fingerprint[i]);
    widen(spec.pdi, s.pdi_value());
    widen(spec.temp, s.temp);
    widen(spec.log_eta, s.log10_eta);
  }
  if (spec.log_eta.degenerate()) {
    throw DegenerateRange("log10 viscosity is constant over the training set");
  }
  if (spec.temp.degenerate()) {
    throw DegenerateRange("temperature is constant over the training set");
  }
  return spec;
}

}  // namespace rheo::data
