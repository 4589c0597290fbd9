#pragma once

// Straight-line scalar transcription of the viscosity laws, kept apart from
// the library so tests compare two independent routes. No shared helpers,
// no stable-logistic tricks: arguments used in tests stay in a safe range.

#include <cmath>

namespace rheo::oracle {

struct Params {
  double log_k1, alpha1, alpha2, log_mcr, beta_mw, c1, c2, t_ref, n, log_gcr,
      beta_g;
};

inline double heaviside(double x, double beta) {
  return 1.0 / (1.0 + std::exp(-beta * x));
}

inline double mw_law(double lm, const Params& q) {
  double a = q.log_k1 + q.alpha1 * lm;
  double b = q.log_k1 + (q.alpha1 - q.alpha2) * q.log_mcr + q.alpha2 * lm;
  return a * heaviside(q.log_mcr - lm, q.beta_mw) +
         b * heaviside(lm - q.log_mcr, q.beta_mw);
}

inline double mw_law_exact(double lm, const Params& q) {
  if (lm < q.log_mcr) return q.log_k1 + q.alpha1 * lm;
  return q.log_k1 + (q.alpha1 - q.alpha2) * q.log_mcr + q.alpha2 * lm;
}

inline double wlf(double t, const Params& q) {
  return -q.c1 * (t - q.t_ref) / (q.c2 + (t - q.t_ref));
}

inline double eta0(double lm, double t, const Params& q) {
  return mw_law(lm, q) + wlf(t, q);
}

inline double eta(double lm, double t, double lg, const Params& q) {
  double e0 = eta0(lm, t, q);
  double thin = e0 + (q.n - 1.0) * (lg - q.log_gcr);
  return e0 * heaviside(q.log_gcr - lg, q.beta_g) +
         thin * heaviside(lg - q.log_gcr, q.beta_g);
}

inline double shear_law_exact(double e0, double lg, const Params& q) {
  if (lg < q.log_gcr) return e0;
  return e0 + (q.n - 1.0) * (lg - q.log_gcr);
}

}  // namespace rheo::oracle
