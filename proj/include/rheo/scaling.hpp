#pragma once

#include <span>
#include <vector>

#include "rheo/data.hpp"
#include "rheo/physics.hpp"

namespace rheo::data {

/// Affine map of [min, max] onto [-1, 1]. Values outside the fitted range
/// map outside [-1, 1]; nothing is clipped. A degenerate channel
/// (min == max) maps everything to 0.
struct MinMax {
  double min = 0.0;
  double max = 1.0;

  bool degenerate() const { return !(max > min); }
  double slope() const { return degenerate() ? 0.0 : 2.0 / (max - min); }
  double apply(double v) const;
  double invert(double s) const;

  bool operator==(const MinMax&) const = default;
};

/// Binds raw measurement units to the (-1, 1) graph coordinates.
///
/// Fingerprint components, PDI and temperature get their own min-max maps.
/// log10 viscosity gets one, and log10 Mw and log10(shear + 1e-5) reuse it,
/// so slopes such as alpha1, alpha2 and n - 1 mean the same thing in both
/// coordinate systems.
struct ScalingSpec {
  static constexpr double kShearOffset = 1e-5;

  std::vector<MinMax> fingerprint;
  MinMax pdi;
  MinMax temp;
  MinMax log_eta;

  std::vector<double> scale_fingerprint(std::span<const double> fp) const;
  double scale_pdi(double pdi) const { return this->pdi.apply(pdi); }
  double scale_temp(double kelvin) const { return temp.apply(kelvin); }
  double scale_log_mw(double mw) const;
  double scale_shear(double shear) const;
  double scale_log_eta(double log10_eta) const { return log_eta.apply(log10_eta); }

  double unscale_temp(double s) const { return temp.invert(s); }
  double unscale_log_eta(double s) const { return log_eta.invert(s); }
  /// Inverse of scale_log_mw, in log10 g/mol.
  double unscale_log_mw(double s) const { return log_eta.invert(s); }
  /// Inverse of scale_shear, in log10(1/s + 1e-5).
  double unscale_log_shear(double s) const { return log_eta.invert(s); }

  /// Graph coordinates of a sample's measurement conditions.
  physics::PhysicalConditions conditions(const PolymerSample& s) const;
  /// Physical-unit conditions: log10 Mw, Kelvin, log10(shear + 1e-5).
  static physics::PhysicalConditions physical_conditions(const PolymerSample& s);

  /// Converts parameters between graph units and physical units (log10
  /// g/mol, K, log10 1/s). The graph evaluated with scaled parameters on
  /// scaled conditions equals the scaled value of the physical graph.
  physics::EmpiricalParams unscale_params(const physics::EmpiricalParams& scaled) const;
  physics::EmpiricalParams scale_params(const physics::EmpiricalParams& physical) const;

  bool operator==(const ScalingSpec&) const = default;
};

/// Fits every channel on the given (training) samples. Throws EmptyDataset,
/// or DegenerateRange when viscosity or temperature is constant.
ScalingSpec fit_scaling(const Dataset& training);

}  // namespace rheo::data
