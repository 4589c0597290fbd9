#include "rheo/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>
#include <random>

#include "rheo/errors.hpp"
#include "rheo/random.hpp"
#include "rheo/scaling.hpp"

namespace rheo::synthetic {

namespace {

// The fingerprint-to-parameter map is the same for every generation seed so
// that chemistry is learnable across datasets.
constexpr std::uint64_t kMapSeed = 0x7e0109a1ULL;
constexpr double kLogitGain = 1.5;

struct Span {
  double lo, hi;
};

// Physical ranges of the nine mapped parameters, in map output order.
constexpr std::array<Span, 9> kRanges{{
    {-3.0, 2.5},     // log_k1
    {0.9, 1.1},      // alpha1
    {3.0, 3.8},      // alpha2
    {2.5, 5.0},      // log_mcr
    {5.0, 12.0},     // c1
    {60.0, 140.0},   // c2
    {365.0, 395.0},  // t_ref
    {0.2, 0.8},      // n
    {-3.0, 4.0},     // log_gcr
}};

constexpr Span kPdi{1.2, 3.5};
constexpr Span kBaseTemp{410.0, 540.0};
constexpr Span kLogMw{2.0, 7.0};
constexpr Span kLogShear{-4.0, 6.0};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 1) return {0.5 * (lo + hi)};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> unit_vector(std::mt19937_64& rng, std::size_t width) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(width);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = g(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

physics::EmpiricalParams params_for(const std::vector<double>& fingerprint) {
  std::mt19937_64 map_rng(derive_seed(kMapSeed, fingerprint.size()));
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<double, kRanges.size()> out{};
  for (std::size_t r = 0; r < kRanges.size(); ++r) {
    double z = 0.0;
    for (double f : fingerprint) z += g(map_rng) * f;
    out[r] = kRanges[r].lo + (kRanges[r].hi - kRanges[r].lo) * sigmoid(kLogitGain * z);
  }
  physics::EmpiricalParams p;
  p.log_k1 = out[0];
  p.alpha1 = out[1];
  p.alpha2 = out[2];
  p.log_mcr = out[3];
  p.beta_mw = kTrueBetaMw;
  p.c1 = out[4];
  p.c2 = out[5];
  p.t_ref = out[6];
  p.n = out[7];
  p.log_gcr = out[8];
  p.beta_g = kTrueBetaG;
  return p;
}

double true_log_eta(const physics::EmpiricalParams& p, double mw, double temp, double shear) {
  const physics::PhysicalConditions cond{
      std::log10(mw), temp, std::log10(shear + data::ScalingSpec::kShearOffset)};
  return physics::log_eta(cond, p);
}

SyntheticSet generate(const SyntheticOptions& options) {
  if (options.n_chem == 0 || options.pts_per_chem == 0 || options.fingerprint_width == 0) {
    throw InvalidCounts(fmt::format("n_chem {}, points {}, fingerprint width {}", options.n_chem,
                                    options.pts_per_chem, options.fingerprint_width));
  }
  if (!(options.noise_sigma >= 0.0) || !std::isfinite(options.noise_sigma)) {
    throw ValidationError("noise sigma must be finite and non-negative");
  }
  const std::size_t pts = options.pts_per_chem;
  const std::size_t n_mw = (2 * pts + 4) / 5;
  const std::size_t n_shear = (pts - n_mw + 1) / 2;
  const std::size_t n_temp = pts - n_mw - n_shear;

  SyntheticSet set;
  set.samples.reserve(options.n_chem * pts);
  set.truth.reserve(options.n_chem);
  for (std::size_t c = 0; c < options.n_chem; ++c) {
    std::mt19937_64 rng(derive_seed(options.seed, c));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SyntheticChemistry chem;
    chem.monomer = fmt::format("SYN{:03}", c);
    chem.fingerprint = unit_vector(rng, options.fingerprint_width);
    chem.true_params = params_for(chem.fingerprint);
    chem.pdi = kPdi.lo + (kPdi.hi - kPdi.lo) * u01(rng);
    chem.base_temp = kBaseTemp.lo + (kBaseTemp.hi - kBaseTemp.lo) * u01(rng);
    const auto& p = chem.true_params;
    const double base_log_mw = std::min(p.log_mcr + 0.75, kLogMw.hi);
    chem.base_mw = std::pow(10.0, base_log_mw);

    struct Point {
      double mw, temp, shear;
    };
    std::vector<Point> points;
    points.reserve(pts);
    for (double x : linspace(std::max(kLogMw.lo, p.log_mcr - 1.5),
                             std::min(kLogMw.hi, p.log_mcr + 1.5), n_mw)) {
      points.push_back({std::pow(10.0, x), chem.base_temp, 0.0});
    }
    for (double x : linspace(std::max(kLogShear.lo, p.log_gcr - 2.5),
                             std::min(kLogShear.hi, p.log_gcr + 3.5), n_shear)) {
      points.push_back({chem.base_mw, chem.base_temp, std::pow(10.0, x)});
    }
    for (double t : linspace(kMinTemp, kMaxTemp, n_temp)) {
      points.push_back({chem.base_mw, t, 0.0});
    }

    std::normal_distribution<double> noise(0.0, options.noise_sigma);
    for (std::size_t i = 0; i < points.size(); ++i) {
      data::PolymerSample s;
      s.record_id = fmt::format("syn-{:03}-{:02}", c, i);
      s.kind = data::PolymerKind::Homopolymer;
      s.constituents.push_back({chem.monomer, 1.0, std::nullopt, std::nullopt});
      s.fingerprint = chem.fingerprint;
      s.mw = points[i].mw;
      s.pdi = chem.pdi;
      s.temp = points[i].temp;
      s.shear = points[i].shear;
      s.log10_eta = true_log_eta(p, s.mw, s.temp, s.shear);
      if (options.noise_sigma > 0.0) s.log10_eta += noise(rng);
      set.samples.push_back(std::move(s));
    }
    set.truth.push_back(std::move(chem));
  }
  return set;
}

void write_truth_json(std::ostream& out, const std::vector<SyntheticChemistry>& truth) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : truth) {
    const auto& p = c.true_params;
    arr.push_back({{"monomer", c.monomer},
                   {"pdi", c.pdi},
                   {"base_mw", c.base_mw},
                   {"base_temp", c.base_temp},
                   {"fingerprint", c.fingerprint},
                   {"params",
                    {{"log_k1", p.log_k1},
                     {"alpha1", p.alpha1},
                     {"alpha2", p.alpha2},
                     {"log_mcr", p.log_mcr},
                     {"beta_mw", p.beta_mw},
                     {"c1", p.c1},
                     {"c2", p.c2},
                     {"t_ref", p.t_ref},
                     {"n", p.n},
                     {"log_gcr", p.log_gcr},
                     {"beta_g", p.beta_g}}}});
  }
  out << arr.dump(2) << '\n';
}

}  // namespace rheo::synthetic
