#include "rheo/evaluation.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "rheo/errors.hpp"
#include "rheo/scaling.hpp"
#include "rheo/serialization.hpp"

namespace rheo::eval {

using nlohmann::json;

namespace {

constexpr double kKlEpsilon = 1e-10;

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw LengthMismatch(fmt::format("{} predictions for {} targets", a.size(), b.size()));
  }
  if (a.empty()) throw EmptyInput("metric needs at least one value");
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = std::pow(10.0, lo + (hi - lo) * t);
  }
  return v;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

data::PolymerSample with_variable(data::PolymerSample s, Variable v, double raw) {
  switch (v) {
    case Variable::Mw: s.mw = raw; break;
    case Variable::Shear: s.shear = raw; break;
    case Variable::Temp: s.temp = raw; break;
  }
  return s;
}

struct XY {
  double x, y;
};

std::vector<XY> valid_points(const Curve& c) {
  std::vector<XY> out;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (c.pred[i]) out.push_back({sweep_x(c.variable, c.grid[i]), *c.pred[i]});
  }
  std::sort(out.begin(), out.end(), [](const XY& a, const XY& b) { return a.x < b.x; });
  return out;
}

// Piecewise-linear interpolation, constant beyond the ends.
double interpolate(const std::vector<XY>& pts, double x) {
  if (x <= pts.front().x) return pts.front().y;
  if (x >= pts.back().x) return pts.back().y;
  const auto it = std::lower_bound(pts.begin(), pts.end(), x,
                                   [](const XY& p, double v) { return p.x < v; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  if (hi.x == lo.x) return hi.y;
  return lo.y + (hi.y - lo.y) * (x - lo.x) / (hi.x - lo.x);
}

bool trend_holds(fit::Law law, const std::vector<double>& p, const std::vector<XY>& pts,
                 double rms, const Thresholds& th) {
  switch (law) {
    case fit::Law::MwLaw: {
      const double a1 = p[1], a2 = p[2];
      return a1 >= 0.5 && a1 <= 1.5 && a2 >= 2.0 && a2 <= 5.0 && a2 > a1;
    }
    case fit::Law::ShearLaw: {
      const double n = p[1];
      const double x0 = pts.front().x;
      const double slope = interpolate(pts, x0 + 1.0) - interpolate(pts, x0);
      return n >= 0.2 && n <= 0.8 && std::abs(slope) < th.plateau_slope;
    }
    case fit::Law::TempLaw: {
      for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].y > pts[i - 1].y) return false;
      }
      return rms < th.theta_fit;
    }
  }
  return false;
}

json side_json(Side s) { return s == Side::Lower ? "lower" : "upper"; }

Side side_from(const std::string& s) {
  if (s == "lower") return Side::Lower;
  if (s == "upper") return Side::Upper;
  throw ValidationError(fmt::format("unknown split side '{}'", s));
}

Outcome outcome_from(const std::string& s) {
  for (auto o : {Outcome::Success, Outcome::FitButWrongTrend, Outcome::Fail}) {
    if (to_string(o) == s) return o;
  }
  throw ValidationError(fmt::format("unknown outcome '{}'", s));
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

// ---------------------------------------------------------------------------

double ome(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  const double mean =
      std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw ZeroVariance("true values are all equal");
  return 1.0 - ss_res / ss_tot;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, std::size_t bins) {
  if (p.empty() || q.empty()) throw EmptySamples("KL divergence needs samples on both sides");
  if (bins == 0) throw ValidationError("KL divergence needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto s : {p, q}) {
    for (double v : s) {
      if (!std::isfinite(v)) throw ValidationError("KL divergence samples must be finite");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  auto histogram = [&](std::span<const double> s) {
    std::vector<double> h(bins, 0.0);
    for (double v : s) {
      std::size_t b = 0;
      if (hi > lo) {
        b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        b = std::min(b, bins - 1);
      }
      h[b] += 1.0;
    }
    double total = 0.0;
    for (double& x : h) {
      x = x / static_cast<double>(s.size()) + kKlEpsilon;
      total += x;
    }
    for (double& x : h) x /= total;
    return h;
  };
  const auto hp = histogram(p);
  const auto hq = histogram(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < bins; ++i) kl += hp[i] * std::log(hp[i] / hq[i]);
  return std::max(kl, 0.0);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::Mw: return "mw";
    case Variable::Shear: return "shear";
    case Variable::Temp: return "temp";
  }
  return "?";
}

Variable parse_variable(std::string_view text) {
  if (text == "mw") return Variable::Mw;
  if (text == "shear") return Variable::Shear;
  if (text == "temp") return Variable::Temp;
  throw ValidationError(fmt::format("unknown variable '{}' (expected mw, shear or temp)", text));
}

fit::Law law_for(Variable v) {
  switch (v) {
    case Variable::Mw: return fit::Law::MwLaw;
    case Variable::Shear: return fit::Law::ShearLaw;
    case Variable::Temp: return fit::Law::TempLaw;
  }
  return fit::Law::MwLaw;
}

double variable_value(const data::PolymerSample& s, Variable v) {
  switch (v) {
    case Variable::Mw: return s.mw;
    case Variable::Shear: return s.shear;
    case Variable::Temp: return s.temp;
  }
  return 0.0;
}

SplitPlan physical_split(const data::Dataset& ds, Variable variable, std::uint64_t seed) {
  const auto all = data::monomers(ds);
  if (all.size() < kMinMonomers) {
    throw TooFewMonomers(fmt::format("{} monomers, a physical split needs at least {}",
                                     all.size(), kMinMonomers));
  }
  SplitPlan plan;
  plan.variable = variable;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  auto order = all;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(kTestMonomerFraction * static_cast<double>(all.size()))));
  plan.test_monomers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::bernoulli_distribution coin(0.5);
  for (const auto& m : plan.test_monomers) {
    std::vector<double> values;
    for (const auto& s : ds) {
      if (s.monomer() == m) values.push_back(variable_value(s, variable));
    }
    plan.medians[m] = median_of(std::move(values));
    plan.test_side[m] = coin(rng) ? Side::Upper : Side::Lower;
  }
  for (const auto& s : ds) {
    const auto side = plan.test_side.find(s.monomer());
    bool test = false;
    if (side != plan.test_side.end()) {
      const bool lower = variable_value(s, variable) <= plan.medians.at(s.monomer());
      test = lower == (side->second == Side::Lower);
    }
    (test ? plan.test_ids : plan.train_ids).push_back(s.record_id);
  }
  return plan;
}

void check_split(const data::Dataset& ds, const SplitPlan& plan) {
  const std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  const std::set<std::string> held(plan.test_monomers.begin(), plan.test_monomers.end());
  if (train.size() != plan.train_ids.size() || test.size() != plan.test_ids.size()) {
    throw InvariantViolation("", "split lists repeat a record");
  }
  if (train.size() + test.size() != ds.size()) {
    throw InvariantViolation("", "split does not cover the dataset exactly");
  }
  for (const auto& s : ds) {
    const bool in_train = train.count(s.record_id) > 0;
    const bool in_test = test.count(s.record_id) > 0;
    if (in_train == in_test) throw InvariantViolation(s.record_id, "must be in exactly one side");
    if (!in_test) continue;
    if (!held.count(s.monomer())) {
      throw InvariantViolation(s.record_id, "test record of a training monomer");
    }
    const bool lower = variable_value(s, plan.variable) <= plan.medians.at(s.monomer());
    if (lower != (plan.test_side.at(s.monomer()) == Side::Lower)) {
      throw InvariantViolation(s.record_id, "test record on the training side of the median");
    }
  }
}

SplitData apply_split(const data::Dataset& ds, const SplitPlan& plan) {
  const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  SplitData out;
  for (const auto& s : ds) (test.count(s.record_id) ? out.test : out.train).push_back(s);
  if (out.train.size() + out.test.size() != plan.train_ids.size() + plan.test_ids.size()) {
    throw ValidationError("split plan does not match the dataset");
  }
  return out;
}

json to_json(const SplitPlan& plan) {
  json medians = json::object(), sides = json::object();
  for (const auto& [m, v] : plan.medians) medians[m] = v;
  for (const auto& [m, s] : plan.test_side) sides[m] = side_json(s);
  return {{"variable", std::string(to_string(plan.variable))},
          {"seed", plan.seed},
          {"test_monomers", plan.test_monomers},
          {"medians", medians},
          {"test_side", sides},
          {"train_ids", plan.train_ids},
          {"test_ids", plan.test_ids}};
}

SplitPlan split_from_json(const json& j) {
  try {
    SplitPlan plan;
    plan.variable = parse_variable(j.at("variable").get<std::string>());
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.test_monomers = j.at("test_monomers").get<std::vector<std::string>>();
    for (const auto& [m, v] : j.at("medians").items()) plan.medians[m] = v.get<double>();
    for (const auto& [m, s] : j.at("test_side").items()) plan.test_side[m] = side_from(s.get<std::string>());
    plan.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    plan.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return plan;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed split plan: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------

SweepSpec make_sweep(Variable variable, const data::PolymerSample& base, std::size_t n) {
  if (n == 0) throw ValidationError("a sweep needs at least one grid point");
  SweepSpec spec;
  spec.variable = variable;
  switch (variable) {
    case Variable::Mw: spec.grid = logspace(2.0, 7.0, n); break;
    case Variable::Shear: spec.grid = logspace(-5.0, 6.0, n); break;
    case Variable::Temp: {
      const double lo = base.temp - kTempSweepHalfWidth;
      const double hi = base.temp + kTempSweepHalfWidth;
      spec.grid.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        spec.grid[i] = n == 1 ? base.temp
                              : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      }
      break;
    }
  }
  return spec;
}

std::size_t Curve::gaps() const {
  return static_cast<std::size_t>(std::count(pred.begin(), pred.end(), std::nullopt));
}

double sweep_x(Variable v, double raw) {
  switch (v) {
    case Variable::Mw: return std::log10(raw);
    case Variable::Shear: return std::log10(raw + data::ScalingSpec::kShearOffset);
    case Variable::Temp: return raw;
  }
  return raw;
}

Curve sweep_predict(const model::Predictor& model, const data::PolymerSample& base,
                    const SweepSpec& spec) {
  Curve c;
  c.record_id = base.record_id;
  c.monomer = base.monomer();
  c.variable = spec.variable;
  c.grid = spec.grid;
  c.truth.assign(spec.grid.size(), std::nullopt);
  c.pred.reserve(spec.grid.size());
  for (double g : spec.grid) {
    const auto p = model(with_variable(base, spec.variable, g));
    if (!p.log10_eta) spdlog::debug("sweep gap at {} = {}: {}", to_string(spec.variable), g, p.error);
    c.pred.push_back(p.log10_eta);
  }
  c.params = model.params(base.fingerprint, base.pdi_value());
  return c;
}

fit::FitResult estimate_params_from_sweep(const Curve& curve, fit::Law law) {
  std::vector<fit::FitPoint> pts;
  for (const auto& xy : valid_points(curve)) pts.push_back({xy.x, xy.y});
  return fit::fit(fit::make_problem(law, std::move(pts)));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::FitButWrongTrend: return "fit_but_wrong_trend";
    case Outcome::Fail: return "fail";
  }
  return "?";
}

Classification classify_extrapolation(const Curve& curve, std::span<const HeldOutPoint> held_out,
                                      fit::Law law, const Thresholds& thresholds) {
  Classification c;
  const auto pts = valid_points(curve);
  if (!pts.empty() && !held_out.empty()) {
    double s = 0.0;
    for (const auto& h : held_out) {
      s += std::abs(interpolate(pts, sweep_x(curve.variable, h.raw)) - h.log10_eta);
    }
    c.held_out_ome = s / static_cast<double>(held_out.size());
    c.accurate = c.held_out_ome < thresholds.theta_acc;
  } else {
    c.held_out_ome = std::numeric_limits<double>::infinity();
  }
  if (pts.size() >= fit::kMinFitPoints) {
    try {
      c.fit = estimate_params_from_sweep(curve, law);
      c.trend = trend_holds(law, c.fit->params, pts, c.fit->residual_rms, thresholds);
    } catch (const Error& e) {
      spdlog::debug("sweep fit for {} failed: {}", curve.record_id, e.what());
    }
  }
  c.outcome = c.accurate ? (c.trend ? Outcome::Success : Outcome::FitButWrongTrend) : Outcome::Fail;
  return c;
}

// ---------------------------------------------------------------------------

double Tallies::success_rate() const {
  return total() == 0 ? 0.0 : static_cast<double>(success) / static_cast<double>(total());
}

void Tallies::add(Outcome o) {
  switch (o) {
    case Outcome::Success: ++success; break;
    case Outcome::FitButWrongTrend: ++wrong_trend; break;
    case Outcome::Fail: ++fail; break;
  }
}

std::vector<std::string> compared_params(fit::Law law) {
  switch (law) {
    case fit::Law::MwLaw: return {"alpha1", "alpha2", "log_mcr"};
    case fit::Law::ShearLaw: return {"n", "log_gcr"};
    case fit::Law::TempLaw: return {"c1", "c2", "t_ref"};
  }
  return {};
}

double param_value(const physics::EmpiricalParams& p, std::string_view name) {
  if (name == "log_k1") return p.log_k1;
  if (name == "alpha1") return p.alpha1;
  if (name == "alpha2") return p.alpha2;
  if (name == "log_mcr") return p.log_mcr;
  if (name == "beta_mw") return p.beta_mw;
  if (name == "c1") return p.c1;
  if (name == "c2") return p.c2;
  if (name == "t_ref") return p.t_ref;
  if (name == "n") return p.n;
  if (name == "log_gcr") return p.log_gcr;
  if (name == "beta_g") return p.beta_g;
  throw ValidationError(fmt::format("unknown parameter '{}'", name));
}

EvaluationReport evaluate(const model::Predictor& model, const data::Dataset& test,
                          Variable variable, const EvaluateOptions& options, const Truth* truth) {
  if (test.empty()) throw EmptyDataset("no test records to evaluate");
  EvaluationReport r;
  r.model_kind = std::string(model::to_string(model.kind()));
  r.variable = variable;
  r.seed = options.seed;
  r.thresholds = options.thresholds;
  r.kl_bins = options.kl_bins;
  r.n_test = test.size();

  const auto preds = model.predict(test);
  std::vector<double> p, t;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!preds[i].log10_eta) continue;
    p.push_back(*preds[i].log10_eta);
    t.push_back(test[i].log10_eta);
  }
  r.n_gaps = test.size() - p.size();
  if (p.empty()) throw ComputeError("the model could not evaluate any test record");
  r.ome = ome(p, t);
  try {
    r.r_squared = r_squared(p, t);
  } catch (const ZeroVariance&) {
    r.r_squared = std::nullopt;
  }

  const auto law = law_for(variable);
  const auto names = compared_params(law);
  const auto fit_names = fit::param_names(law);
  r.params.resize(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) r.params[k].name = names[k];

  for (const auto& monomer : data::monomers(test)) {
    // Largest group of records sharing the two fixed conditions.
    std::vector<std::vector<const data::PolymerSample*>> groups;
    for (const auto& s : test) {
      if (s.monomer() != monomer) continue;
      auto same = [&](const data::PolymerSample* o) {
        switch (variable) {
          case Variable::Mw: return o->temp == s.temp && o->shear == s.shear;
          case Variable::Shear: return o->temp == s.temp && o->mw == s.mw;
          case Variable::Temp: return o->mw == s.mw && o->shear == s.shear;
        }
        return false;
      };
      auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& grp) { return same(grp.front()); });
      if (g == groups.end()) {
        groups.push_back({&s});
      } else {
        g->push_back(&s);
      }
    }
    const auto& group = *std::max_element(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
      return a.size() < b.size();
    });
    const auto& base = *group.front();
    Curve curve = sweep_predict(model, base, make_sweep(variable, base, options.sweep_points));
    if (truth && truth->log10_eta) {
      for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        curve.truth[i] = truth->log10_eta(with_variable(base, variable, curve.grid[i]));
      }
    }
    std::vector<HeldOutPoint> held;
    for (const auto* s : group) held.push_back({variable_value(*s, variable), s->log10_eta});
    const auto cls = classify_extrapolation(curve, held, law, options.thresholds);
    r.tallies.add(cls.outcome);

    SweepOutcome so;
    so.record_id = base.record_id;
    so.monomer = monomer;
    so.n_held_out = held.size();
    so.held_out_ome = cls.held_out_ome;
    so.outcome = cls.outcome;
    so.gaps = curve.gaps();
    if (cls.fit) so.fitted = cls.fit->params;
    r.sweeps.push_back(so);

    const physics::EmpiricalParams* true_params = nullptr;
    if (truth) {
      const auto it = truth->params.find(monomer);
      if (it != truth->params.end()) true_params = &it->second;
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (curve.params) {
        r.params[k].model.push_back(param_value(*curve.params, names[k]));
      } else if (cls.fit) {
        const auto at = std::find(fit_names.begin(), fit_names.end(), names[k]) - fit_names.begin();
        r.params[k].model.push_back(cls.fit->params[static_cast<std::size_t>(at)]);
      }
      if (true_params) r.params[k].truth.push_back(param_value(*true_params, names[k]));
    }
    r.curves.push_back(std::move(curve));
  }
  for (auto& d : r.params) {
    if (!d.truth.empty() && !d.model.empty()) d.kl = kl_divergence(d.model, d.truth, options.kl_bins);
  }
  return r;
}

json to_json(const EvaluationReport& r) {
  json sweeps = json::array();
  for (const auto& s : r.sweeps) {
    sweeps.push_back({{"record_id", s.record_id},
                      {"monomer", s.monomer},
                      {"n_held_out", s.n_held_out},
                      {"held_out_ome", std::isfinite(s.held_out_ome) ? json(s.held_out_ome) : json(nullptr)},
                      {"outcome", std::string(to_string(s.outcome))},
                      {"fitted", s.fitted},
                      {"gaps", s.gaps}});
  }
  json params = json::array();
  for (const auto& d : r.params) {
    params.push_back({{"name", d.name}, {"truth", d.truth}, {"model", d.model}, {"kl", optional_json(d.kl)}});
  }
  json curves = json::array();
  for (const auto& c : r.curves) {
    json pred = json::array(), tr = json::array();
    for (const auto& v : c.pred) pred.push_back(optional_json(v));
    for (const auto& v : c.truth) tr.push_back(optional_json(v));
    curves.push_back({{"record_id", c.record_id},
                      {"monomer", c.monomer},
                      {"variable", std::string(to_string(c.variable))},
                      {"grid", c.grid},
                      {"pred_log10_eta", pred},
                      {"true_log10_eta", tr},
                      {"params", c.params ? io::to_json(*c.params) : json(nullptr)}});
  }
  return {{"model_kind", r.model_kind},
          {"variable", std::string(to_string(r.variable))},
          {"seed", r.seed},
          {"thresholds",
           {{"theta_acc", r.thresholds.theta_acc},
            {"theta_fit", r.thresholds.theta_fit},
            {"plateau_slope", r.thresholds.plateau_slope}}},
          {"kl_bins", r.kl_bins},
          {"n_test", r.n_test},
          {"n_gaps", r.n_gaps},
          {"ome", r.ome},
          {"r_squared", optional_json(r.r_squared)},
          {"tallies",
           {{"success", r.tallies.success},
            {"fit_but_wrong_trend", r.tallies.wrong_trend},
            {"fail", r.tallies.fail},
            {"total", r.tallies.total()}}},
          {"sweeps", sweeps},
          {"params", params},
          {"curves", curves}};
}

EvaluationReport report_from_json(const json& j) {
  try {
    EvaluationReport r;
    r.model_kind = j.at("model_kind").get<std::string>();
    r.variable = parse_variable(j.at("variable").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto& th = j.at("thresholds");
    r.thresholds = {th.at("theta_acc").get<double>(), th.at("theta_fit").get<double>(),
                    th.at("plateau_slope").get<double>()};
    r.kl_bins = j.at("kl_bins").get<std::size_t>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.n_gaps = j.at("n_gaps").get<std::size_t>();
    r.ome = j.at("ome").get<double>();
    r.r_squared = optional_from(j.at("r_squared"));
    const auto& ta = j.at("tallies");
    r.tallies = {ta.at("success").get<std::size_t>(), ta.at("fit_but_wrong_trend").get<std::size_t>(),
                 ta.at("fail").get<std::size_t>()};
    if (ta.at("total").get<std::size_t>() != r.tallies.total()) {
      throw ValidationError("report tallies do not sum to their total");
    }
    for (const auto& s : j.at("sweeps")) {
      SweepOutcome so;
      so.record_id = s.at("record_id").get<std::string>();
      so.monomer = s.at("monomer").get<std::string>();
      so.n_held_out = s.at("n_held_out").get<std::size_t>();
      so.held_out_ome = s.at("held_out_ome").is_null() ? std::numeric_limits<double>::infinity()
                                                       : s.at("held_out_ome").get<double>();
      so.outcome = outcome_from(s.at("outcome").get<std::string>());
      so.fitted = s.at("fitted").get<std::vector<double>>();
      so.gaps = s.at("gaps").get<std::size_t>();
      r.sweeps.push_back(std::move(so));
    }
    for (const auto& d : j.at("params")) {
      r.params.push_back({d.at("name").get<std::string>(), d.at("truth").get<std::vector<double>>(),
                          d.at("model").get<std::vector<double>>(), optional_from(d.at("kl"))});
    }
    for (const auto& c : j.at("curves")) {
      Curve cv;
      cv.record_id = c.at("record_id").get<std::string>();
      cv.monomer = c.at("monomer").get<std::string>();
      cv.variable = parse_variable(c.at("variable").get<std::string>());
      cv.grid = c.at("grid").get<std::vector<double>>();
      for (const auto& v : c.at("pred_log10_eta")) cv.pred.push_back(optional_from(v));
      for (const auto& v : c.at("true_log10_eta")) cv.truth.push_back(optional_from(v));
      if (cv.pred.size() != cv.grid.size() || cv.truth.size() != cv.grid.size()) {
        throw ValidationError("curve columns differ in length");
      }
      if (!c.at("params").is_null()) cv.params = io::params_from_json(c.at("params"));
      r.curves.push_back(std::move(cv));
    }
    if (r.tallies.total() != r.sweeps.size()) {
      throw ValidationError("report tallies do not match the sweep count");
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed evaluation report: {}", e.what()));
  }
}

void write_curves_csv(std::ostream& out, std::span<const Curve> curves) {
  out << "record_id,variable,grid_value,pred_log10_eta,true_log10_eta\n";
  auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      out << c.record_id << ',' << to_string(c.variable) << ',' << fmt::format("{}", c.grid[i]) << ','
          << cell(c.pred[i]) << ',' << cell(c.truth[i]) << '\n';
    }
  }
}

}  // namespace rheo::eval
