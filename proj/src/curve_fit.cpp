#include "rheo/curve_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rheo/errors.hpp"
#include "rheo/physics.hpp"

namespace rheo::fit {

namespace {

constexpr double kStepTol = 1e-10;
constexpr double kRelCostTol = 1e-12;
constexpr double kWlfC1 = 7.60;
constexpr double kWlfC2 = 227.3;

double median_x(std::span<const FitPoint> pts) {
  std::vector<double> xs;
  xs.reserve(pts.size());
  for (const auto& p : pts) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Extent {
  double xmin, xmax, ymin, ymax;
};

Extent extent(std::span<const FitPoint> pts) {
  Extent e{pts[0].x, pts[0].x, pts[0].log_eta, pts[0].log_eta};
  for (const auto& p : pts) {
    e.xmin = std::min(e.xmin, p.x);
    e.xmax = std::max(e.xmax, p.x);
    e.ymin = std::min(e.ymin, p.log_eta);
    e.ymax = std::max(e.ymax, p.log_eta);
  }
  return e;
}

void require_points(std::span<const FitPoint> pts) {
  if (pts.size() < kMinFitPoints) {
    throw TooFewPoints("curve fit needs at least " + std::to_string(kMinFitPoints) +
                       " points, got " + std::to_string(pts.size()));
  }
}

// One Levenberg-Marquardt run over the free parameters.
class Solver {
 public:
  Solver(const FitProblem& pb, std::vector<std::size_t> free, std::size_t max_iter)
      : pb_(pb), free_(std::move(free)), max_iter_(max_iter) {}

  FitResult run(std::vector<double> p) const {
    const std::size_t m = pb_.points.size();
    const std::size_t k = free_.size();
    FitResult out;
    Eigen::VectorXd r(m);
    double cost = residuals(p, r);
    double lambda = 1e-3;

    std::size_t it = 0;
    bool converged = false;
    while (!converged && it < max_iter_) {
      if (cost == 0.0 || k == 0) {
        converged = true;
        break;
      }
      ++it;
      Eigen::MatrixXd J = jacobian(p, r);
      Eigen::VectorXd g = J.transpose() * r;

      // Parameters pinned at a bound with the descent direction pointing out.
      std::vector<std::size_t> act;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& b = pb_.bounds[free_[j]];
        const double v = p[free_[j]];
        if ((v <= b.lo && g[j] > 0.0) || (v >= b.hi && g[j] < 0.0)) continue;
        act.push_back(j);
      }
      if (act.empty()) {
        converged = true;
        break;
      }
      const auto na = static_cast<Eigen::Index>(act.size());
      Eigen::MatrixXd Ja(static_cast<Eigen::Index>(m), na);
      Eigen::VectorXd ga(na);
      for (Eigen::Index j = 0; j < na; ++j) {
        Ja.col(j) = J.col(static_cast<Eigen::Index>(act[j]));
        ga[j] = g[static_cast<Eigen::Index>(act[j])];
      }
      const Eigen::MatrixXd A = Ja.transpose() * Ja;

      bool accepted = false;
      while (!accepted) {
        Eigen::MatrixXd M = A;
        for (Eigen::Index j = 0; j < na; ++j) M(j, j) += lambda * std::max(A(j, j), 1e-12);
        const Eigen::VectorXd delta = M.ldlt().solve(-ga);

        std::vector<double> trial = p;
        double step2 = 0.0;
        for (Eigen::Index j = 0; j < na; ++j) {
          const std::size_t idx = free_[act[static_cast<std::size_t>(j)]];
          const auto& b = pb_.bounds[idx];
          const double v = std::clamp(p[idx] + delta[j], b.lo, b.hi);
          step2 += (v - p[idx]) * (v - p[idx]);
          trial[idx] = v;
        }
        if (!std::isfinite(step2) || std::sqrt(step2) < kStepTol) {
          converged = true;
          break;
        }
        Eigen::VectorXd rt(m);
        const double tcost = residuals(trial, rt);
        if (std::isfinite(tcost) && tcost < cost) {
          const double rel = (cost - tcost) / cost;
          p = std::move(trial);
          r = rt;
          cost = tcost;
          lambda = std::max(lambda / 3.0, 1e-15);
          accepted = true;
          if (rel < kRelCostTol) converged = true;
        } else {
          lambda *= 4.0;
          if (lambda > 1e16) {
            converged = true;  // no descent direction left
            break;
          }
        }
      }
    }
    out.params = std::move(p);
    out.residual_rms = std::sqrt(cost / static_cast<double>(m));
    out.converged = converged;
    out.iterations = it;
    return out;
  }

  double residuals(const std::vector<double>& p, Eigen::VectorXd& r) const {
    double cost = 0.0;
    for (std::size_t i = 0; i < pb_.points.size(); ++i) {
      const auto& pt = pb_.points[i];
      const double v = evaluate_law(pb_.law, p, pt.x) - pt.log_eta;
      r[static_cast<Eigen::Index>(i)] = v;
      cost += v * v;
    }
    return cost;
  }

 private:
  Eigen::MatrixXd jacobian(const std::vector<double>& p, const Eigen::VectorXd& r) const {
    const std::size_t m = pb_.points.size();
    Eigen::MatrixXd J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(free_.size()));
    Eigen::VectorXd rp(m), rm(m);
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const std::size_t idx = free_[j];
      const auto& b = pb_.bounds[idx];
      const double h = 1e-6 * std::max(1.0, std::abs(p[idx]));
      std::vector<double> q = p;
      const double up = std::min(p[idx] + h, b.hi);
      const double dn = std::max(p[idx] - h, b.lo);
      q[idx] = up;
      residuals(q, rp);
      if (dn < p[idx]) {
        q[idx] = dn;
        residuals(q, rm);
      } else {
        rm = r;
      }
      const double span = up - dn;
      J.col(static_cast<Eigen::Index>(j)) = (rp - rm) / span;
    }
    return J;
  }

  const FitProblem& pb_;
  std::vector<std::size_t> free_;
  std::size_t max_iter_;
};

}  // namespace

std::string_view to_string(Law law) {
  switch (law) {
    case Law::MwLaw: return "MwLaw";
    case Law::ShearLaw: return "ShearLaw";
    case Law::TempLaw: return "TempLaw";
  }
  return "?";
}

Law parse_law(std::string_view name) {
  if (name == "mw" || name == "MwLaw") return Law::MwLaw;
  if (name == "shear" || name == "ShearLaw") return Law::ShearLaw;
  if (name == "temp" || name == "TempLaw") return Law::TempLaw;
  throw ValidationError("unknown law '" + std::string(name) + "' (expected mw, shear or temp)");
}

std::size_t num_params(Law law) { return law == Law::MwLaw || law == Law::TempLaw ? 4 : 3; }

std::vector<std::string> param_names(Law law) {
  switch (law) {
    case Law::MwLaw: return {"log_k1", "alpha1", "alpha2", "log_mcr"};
    case Law::ShearLaw: return {"log_eta0", "n", "log_gcr"};
    case Law::TempLaw: return {"log_eta_ref", "c1", "c2", "t_ref"};
  }
  return {};
}

double evaluate_law(Law law, std::span<const double> p, double x) {
  if (p.size() != num_params(law)) {
    throw DimensionMismatch(std::string(to_string(law)) + " takes " +
                            std::to_string(num_params(law)) + " parameters");
  }
  switch (law) {
    case Law::MwLaw:
      if (x < p[3]) return p[0] + p[1] * x;
      return p[0] + (p[1] - p[2]) * p[3] + p[2] * x;
    case Law::ShearLaw: {
      const double v = x - p[2];
      return p[0] + (p[1] - 1.0) * v * physics::smooth_heaviside(v, physics::kShearBeta);
    }
    case Law::TempLaw: {
      const double dt = x - p[3];
      return p[0] - p[1] * dt / (p[2] + dt);
    }
  }
  return 0.0;
}

std::vector<double> default_initial_guess(Law law, std::span<const FitPoint> points) {
  require_points(points);
  const auto e = extent(points);
  switch (law) {
    case Law::MwLaw: {
      const auto first = *std::min_element(points.begin(), points.end(),
                                           [](auto& a, auto& b) { return a.x < b.x; });
      return {first.log_eta - 1.0 * first.x, 1.0, 3.4, median_x(points)};
    }
    case Law::ShearLaw:
      return {e.ymax, 0.5, median_x(points)};
    case Law::TempLaw:
      return {e.ymax, kWlfC1, kWlfC2, e.xmin - 20.0};
  }
  return {};
}

std::vector<Bound> default_bounds(Law law, std::span<const FitPoint> points) {
  require_points(points);
  const auto e = extent(points);
  switch (law) {
    case Law::MwLaw:
      return {{-50.0, 50.0}, {0.0, 3.0}, {0.0, 10.0}, {e.xmin, e.xmax}};
    case Law::ShearLaw:
      return {{e.ymin - 5.0, e.ymax + 5.0}, {0.0, 1.0}, {e.xmin - 1.0, e.xmax + 1.0}};
    case Law::TempLaw:
      return {{e.ymin - 5.0, e.ymax + 40.0},
              {0.01, 100.0},
              {1.0, 2000.0},
              {e.xmin - 400.0, e.xmin - 1e-3}};
  }
  return {};
}

FitProblem make_problem(Law law, std::vector<FitPoint> points) {
  FitProblem pb;
  pb.law = law;
  pb.initial_guess = default_initial_guess(law, points);
  pb.bounds = default_bounds(law, points);
  pb.points = std::move(points);
  return pb;
}

FitResult fit(const FitProblem& problem, const FitOptions& options) {
  require_points(problem.points);
  const std::size_t np = num_params(problem.law);
  if (problem.initial_guess.size() != np || problem.bounds.size() != np) {
    throw DimensionMismatch(std::string(to_string(problem.law)) + " takes " +
                            std::to_string(np) + " parameters and bounds");
  }
  if (!problem.fixed.empty() && problem.fixed.size() != np) {
    throw DimensionMismatch("fixed mask length differs from the parameter count");
  }
  for (const auto& b : problem.bounds) {
    if (!(b.lo < b.hi)) throw ValidationError("fit bounds need lo < hi");
  }
  FitProblem pb = problem;
  std::sort(pb.points.begin(), pb.points.end(),
            [](const FitPoint& a, const FitPoint& b) { return a.x < b.x; });
  for (std::size_t i = 0; i < pb.points.size(); ++i) {
    if (!std::isfinite(pb.points[i].x) || !std::isfinite(pb.points[i].log_eta)) {
      throw ValidationError("fit points must be finite");
    }
    if (i > 0 && !(pb.points[i].x > pb.points[i - 1].x)) {
      throw ValidationError("fit points repeat x = " + std::to_string(pb.points[i].x));
    }
  }

  std::vector<std::size_t> free;
  std::vector<double> start(np);
  for (std::size_t i = 0; i < np; ++i) {
    start[i] = std::clamp(pb.initial_guess[i], pb.bounds[i].lo, pb.bounds[i].hi);
    if (pb.fixed.empty() || !pb.fixed[i]) free.push_back(i);
  }
  const Solver solver(pb, free, options.max_iterations);

  FitResult best = solver.run(start);
  std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(pb.law));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t r = 0; r < options.restarts && best.residual_rms > 0.0; ++r) {
    std::vector<double> jit = start;
    for (std::size_t i : free) {
      const auto& b = pb.bounds[i];
      jit[i] = std::clamp(start[i] * (1.0 + 0.2 * u(rng)) + 0.1 * u(rng), b.lo, b.hi);
    }
    FitResult cand = solver.run(std::move(jit));
    if (cand.residual_rms < best.residual_rms) best = std::move(cand);
  }
  return best;
}

}  // namespace rheo::fit
