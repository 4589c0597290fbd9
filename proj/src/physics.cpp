#include "rheo/physics.hpp"

#include <cmath>
#include <string>

#include "rheo/errors.hpp"

namespace rheo::physics {

namespace {

// Stable logistic of an already-multiplied argument.
double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// sigma'(z) = sigma(z) sigma(-z); symmetric in z.
double logistic_slope(double z) { return logistic(z) * logistic(-z); }

constexpr std::array<Range, kNumLearned> kRanges{{
    {-1.5, 0.5},  // log_k1
    {0.0, 3.0},   // alpha1
    {0.0, 6.0},   // alpha2
    {-1.0, 1.0},  // log_mcr
    {20.0, 50.0}, // beta_mw
    {0.0, 2.0},   // c1
    {0.0, 2.0},   // c2
    {-1.5, 1.0},  // t_ref
    {0.0, 1.0},   // n
    {-1.0, 1.0},  // log_gcr
}};

void check_denominator(double denom) {
  if (!(denom > kMinWlfDenominator)) {
    throw DenominatorTooSmall("c2 + (T - t_ref) = " + std::to_string(denom) +
                              " is outside the WLF validity window");
  }
}

}  // namespace

std::array<double, kNumParams> EmpiricalParams::to_array() const {
  return {log_k1, alpha1, alpha2, log_mcr, beta_mw, c1,
          c2,     t_ref,  n,      log_gcr, beta_g};
}

EmpiricalParams EmpiricalParams::from_array(
    const std::array<double, kNumParams>& a) {
  EmpiricalParams p;
  p.log_k1 = a[0];
  p.alpha1 = a[1];
  p.alpha2 = a[2];
  p.log_mcr = a[3];
  p.beta_mw = a[4];
  p.c1 = a[5];
  p.c2 = a[6];
  p.t_ref = a[7];
  p.n = a[8];
  p.log_gcr = a[9];
  p.beta_g = a[10];
  return p;
}

const std::array<Range, kNumLearned>& learned_ranges() { return kRanges; }

bool within_bounds(const EmpiricalParams& p) {
  const auto a = p.to_array();
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  for (std::size_t i = 0; i < kNumLearned; ++i) {
    if (a[i] < kRanges[i].lo || a[i] > kRanges[i].hi) return false;
  }
  return p.beta_g == kShearBeta;
}

double smooth_heaviside(double x, double beta) { return logistic(beta * x); }

double log_eta_mw(double log_mw, const EmpiricalParams& p) {
  const double below = smooth_heaviside(p.log_mcr - log_mw, p.beta_mw);
  const double above = smooth_heaviside(log_mw - p.log_mcr, p.beta_mw);
  const double unentangled = p.log_k1 + p.alpha1 * log_mw;
  const double entangled =
      p.log_k1 + (p.alpha1 - p.alpha2) * p.log_mcr + p.alpha2 * log_mw;
  return below * unentangled + above * entangled;
}

double wlf_log_shift(double temp, const EmpiricalParams& p) {
  const double dt = temp - p.t_ref;
  const double denom = p.c2 + dt;
  check_denominator(denom);
  return -p.c1 * dt / denom;
}

double log_eta0(double log_mw, double temp, const EmpiricalParams& p) {
  return log_eta_mw(log_mw, p) + wlf_log_shift(temp, p);
}

double log_eta(const PhysicalConditions& cond, const EmpiricalParams& p) {
  const double eta0 = log_eta0(cond.log_mw, cond.temp, p);
  const double v = cond.log_shear - p.log_gcr;
  const double plateau = smooth_heaviside(-v, p.beta_g);
  const double thinning = smooth_heaviside(v, p.beta_g);
  return plateau * eta0 + thinning * (eta0 + (p.n - 1.0) * v);
}

LogEtaGradient log_eta_with_grad(const PhysicalConditions& cond,
                                 const EmpiricalParams& p, WlfGuard guard) {
  LogEtaGradient g;

  // Mw law, as a function of u = log_mcr - log_mw.
  const double x = cond.log_mw;
  const double u = p.log_mcr - x;
  const double hb = logistic(p.beta_mw * u);   // weight of the low branch
  const double ha = logistic(-p.beta_mw * u);  // weight of the high branch
  const double sm = logistic_slope(p.beta_mw * u);
  const double low = p.log_k1 + p.alpha1 * x;
  const double high =
      p.log_k1 + (p.alpha1 - p.alpha2) * p.log_mcr + p.alpha2 * x;
  const double mw = hb * low + ha * high;
  const double d_mw_du = p.beta_mw * sm * (low - high);

  // WLF shift.
  const double dt = cond.temp - p.t_ref;
  double denom = p.c2 + dt;
  const bool floored = guard == WlfGuard::Floor && !(denom > kMinWlfDenominator);
  if (floored) {
    denom = kMinWlfDenominator;
  } else {
    check_denominator(denom);
  }
  const double shift = -p.c1 * dt / denom;
  const double d_shift_ddt =
      floored ? -p.c1 / denom : -p.c1 * p.c2 / (denom * denom);

  const double eta0 = mw + shift;

  // Shear law, as a function of v = log_shear - log_gcr.
  const double v = cond.log_shear - p.log_gcr;
  const double hp = logistic(-p.beta_g * v);
  const double ht = logistic(p.beta_g * v);
  const double sg = logistic_slope(p.beta_g * v);
  g.value = hp * eta0 + ht * (eta0 + (p.n - 1.0) * v);

  const double d_eta0 = hp + ht;
  const double d_v = p.beta_g * sg * (p.n - 1.0) * v + ht * (p.n - 1.0);

  auto& dp = g.d_params;
  dp[idx(Param::LogK1)] = d_eta0 * (hb + ha);
  dp[idx(Param::Alpha1)] = d_eta0 * (hb * x + ha * p.log_mcr);
  dp[idx(Param::Alpha2)] = d_eta0 * ha * (x - p.log_mcr);
  dp[idx(Param::LogMcr)] = d_eta0 * (d_mw_du + ha * (p.alpha1 - p.alpha2));
  dp[idx(Param::BetaMw)] = d_eta0 * u * sm * (low - high);
  dp[idx(Param::C1)] = d_eta0 * (-dt / denom);
  dp[idx(Param::C2)] = floored ? 0.0 : d_eta0 * (p.c1 * dt / (denom * denom));
  dp[idx(Param::TRef)] = d_eta0 * (-d_shift_ddt);
  dp[idx(Param::N)] = ht * v;
  dp[idx(Param::LogGcr)] = -d_v;
  dp[idx(Param::BetaG)] = v * sg * (p.n - 1.0) * v;

  auto& dc = g.d_cond;
  dc[idx(Cond::LogMw)] = d_eta0 * (-d_mw_du + hb * p.alpha1 + ha * p.alpha2);
  dc[idx(Cond::Temp)] = d_eta0 * d_shift_ddt;
  dc[idx(Cond::LogShear)] = d_v;
  return g;
}

EmpiricalParams bound_params(std::span<const double> raw) {
  if (raw.size() != kNumLearned) {
    throw DimensionMismatch("bound_params expects " +
                            std::to_string(kNumLearned) + " raw values, got " +
                            std::to_string(raw.size()));
  }
  std::array<double, kNumParams> a{};
  for (std::size_t i = 0; i < kNumLearned; ++i) {
    a[i] = kRanges[i].lo + (kRanges[i].hi - kRanges[i].lo) * logistic(raw[i]);
  }
  a[idx(Param::BetaG)] = kShearBeta;
  return EmpiricalParams::from_array(a);
}

std::array<double, kNumLearned> bound_params_jacobian(
    std::span<const double> raw) {
  if (raw.size() != kNumLearned) {
    throw DimensionMismatch("bound_params_jacobian expects " +
                            std::to_string(kNumLearned) + " raw values");
  }
  std::array<double, kNumLearned> j{};
  for (std::size_t i = 0; i < kNumLearned; ++i) {
    j[i] = (kRanges[i].hi - kRanges[i].lo) * logistic_slope(raw[i]);
  }
  return j;
}

}  // namespace rheo::physics
