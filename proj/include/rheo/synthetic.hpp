#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rheo/data.hpp"
#include "rheo/physics.hpp"

namespace rheo::synthetic {

/// Ground truth for one generated chemistry. Parameters are in physical
/// units: log10 g/mol, K, log10 1/s, log10 viscosity.
struct SyntheticChemistry {
  std::string monomer;
  std::vector<double> fingerprint;
  physics::EmpiricalParams true_params;
  double pdi = 1.0;
  /// Series anchors: the Mw, temperature shared by the Mw and shear series.
  double base_mw = 0.0;
  double base_temp = 0.0;
};

struct SyntheticOptions {
  std::size_t n_chem = 93;
  std::size_t pts_per_chem = 20;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t fingerprint_width = 32;
};

struct SyntheticSet {
  data::Dataset samples;
  std::vector<SyntheticChemistry> truth;
};

inline constexpr double kMinTemp = 400.0;
inline constexpr double kMaxTemp = 550.0;
/// Transition sharpness of the generating laws, physical log units.
inline constexpr double kTrueBetaMw = 100.0;
inline constexpr double kTrueBetaG = physics::kShearBeta;

/// Each chemistry contributes three one-variable series: Mw at zero shear and
/// a fixed temperature, shear rate at a fixed Mw and temperature, and
/// temperature at zero shear and a fixed Mw. Throws InvalidCounts.
SyntheticSet generate(const SyntheticOptions& options);

/// Parameters of one fingerprint under the fixed fingerprint-to-parameter map.
physics::EmpiricalParams params_for(const std::vector<double>& fingerprint);

/// Physical log10 viscosity of a chemistry at a sample's conditions, no noise.
double true_log_eta(const physics::EmpiricalParams& p, double mw, double temp, double shear);

void write_truth_json(std::ostream& out, const std::vector<SyntheticChemistry>& truth);

}  // namespace rheo::synthetic
