#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "rheo/errors.hpp"
#include "rheo/evaluation.hpp"
#include "rheo/synthetic.hpp"

using namespace rheo;
using namespace rheo::eval;

namespace {

// Histogram oracle with explicit edge comparisons instead of index arithmetic.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q, int bins) {
  double lo = 1e300, hi = -1e300;
  for (const auto* s : {&p, &q}) {
    for (double v : *s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
  auto hist = [&](const std::vector<double>& s) {
    std::vector<double> h(bins, 0.0);
    for (double v : s) {
      int b = bins - 1;
      for (int i = 0; i < bins; ++i) {
        if (v < edges[i + 1]) {
          b = i;
          break;
        }
      }
      h[b] += 1;
    }
    double total = 0;
    for (auto& x : h) total += (x = x / s.size() + 1e-10);
    for (auto& x : h) x /= total;
    return h;
  };
  const auto hp = hist(p), hq = hist(q);
  double kl = 0;
  for (int i = 0; i < bins; ++i) kl += hp[i] * std::log(hp[i] / hq[i]);
  return kl;
}

synthetic::SyntheticSet synth(std::size_t n_chem, std::uint64_t seed, double noise = 0.0) {
  synthetic::SyntheticOptions o;
  o.n_chem = n_chem;
  o.seed = seed;
  o.noise_sigma = noise;
  o.fingerprint_width = 8;
  return synthetic::generate(o);
}

physics::EmpiricalParams compliant() {
  physics::EmpiricalParams p;
  p.log_k1 = -2.0;
  p.alpha1 = 1.0;
  p.alpha2 = 3.4;
  p.log_mcr = 4.0;
  p.beta_mw = 100.0;
  p.c1 = 8.0;
  p.c2 = 100.0;
  p.t_ref = 380.0;
  p.n = 0.4;
  p.log_gcr = 1.0;
  p.beta_g = 30.0;
  return p;
}

data::PolymerSample base_sample() {
  data::PolymerSample s;
  s.record_id = "base";
  s.constituents.push_back({"C", 1.0, std::nullopt, std::nullopt});
  s.fingerprint = std::vector<double>(8, 0.1);
  s.mw = 1e5;
  s.pdi = 2.0;
  s.temp = 450.0;
  s.shear = 0.0;
  return s;
}

Curve law_curve(Variable v, const physics::EmpiricalParams& p, double offset = 0.0) {
  const auto base = base_sample();
  const auto spec = make_sweep(v, base);
  Curve c;
  c.record_id = "base";
  c.variable = v;
  c.grid = spec.grid;
  c.truth.assign(c.grid.size(), std::nullopt);
  for (double g : c.grid) {
    double mw = base.mw, t = base.temp, sh = base.shear;
    (v == Variable::Mw ? mw : v == Variable::Shear ? sh : t) = g;
    c.pred.push_back(synthetic::true_log_eta(p, mw, t, sh) + offset);
  }
  return c;
}

std::vector<HeldOutPoint> on_curve(const Curve& c, std::initializer_list<std::size_t> idx) {
  std::vector<HeldOutPoint> h;
  for (auto i : idx) h.push_back({c.grid[i], *c.pred[i]});
  return h;
}

model::Predictor penn_with_outputs(const std::vector<double>& raw) {
  const auto set = synth(12, 5, 0.05);
  nn::MlpConfig cfg;
  cfg.layer1_size = 8;
  cfg.layer2_size = 8;
  cfg.max_epochs = 2;
  auto m = nn::train_with_holdout(set.samples, cfg, nn::NetKind::PENN);
  m.net.layers[2].w.setZero();
  for (std::size_t i = 0; i < raw.size(); ++i) m.net.layers[2].b[static_cast<Eigen::Index>(i)] = raw[i];
  return model::Predictor(m);
}

}  // namespace

TEST_CASE("ome examples") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(ome(a, a) == 0.0);
  const std::vector<double> b{2.0, 3.0, 4.0};
  CHECK(ome(b, a) == 1.0);
  CHECK(ome(std::vector<double>{1, 2}, std::vector<double>{2, 4}) == 1.5);
  CHECK_THROWS_AS(ome(a, std::vector<double>{1.0}), LengthMismatch);
  CHECK_THROWS_AS(ome(std::vector<double>{}, std::vector<double>{}), EmptyInput);
}

TEST_CASE("r squared examples") {
  const std::vector<double> truth{1.0, 3.0, 5.0};
  CHECK(r_squared(truth, truth) == 1.0);
  CHECK(r_squared(std::vector<double>{3, 3, 3}, truth) == 0.0);
  // SS_tot = 8, SS_res = 0 + 1 + 1.
  CHECK(r_squared(std::vector<double>{1, 2, 4}, truth) == 0.75);
  CHECK_THROWS_AS(r_squared(truth, std::vector<double>{2, 2, 2}), ZeroVariance);
}

TEST_CASE("property: ome detects translation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> truth(7), pred(7);
    for (auto& v : truth) v = g(rng);
    const double c = g(rng);
    for (std::size_t i = 0; i < 7; ++i) pred[i] = truth[i] + c;
    CHECK(ome(pred, truth) == doctest::Approx(std::abs(c)));
    CHECK(ome(truth, truth) == 0.0);
  }
}

TEST_CASE("kl divergence") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n0(0, 1), n1(1, 1);
  std::vector<double> p(500), q(500);
  for (auto& v : p) v = n0(rng);
  for (auto& v : q) v = n1(rng);
  CHECK(std::abs(kl_divergence(p, p)) < 1e-9);
  CHECK(kl_divergence(p, q, 20) == doctest::Approx(kl_oracle(p, q, 20)).epsilon(1e-12));
  const double disjoint = kl_divergence(std::vector<double>{0, 0.1}, std::vector<double>{5, 5.1});
  CHECK(disjoint > 10.0);
  CHECK(std::isfinite(disjoint));
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{}, q), EmptySamples);

  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(30), b(40);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng) * 0.5;
    CHECK(kl_divergence(a, b, 1 + t % 25) >= 0.0);
  }
}

TEST_CASE("physical split") {
  CHECK_THROWS_AS(physical_split(synth(9, 1).samples, Variable::Mw, 0), TooFewMonomers);

  const auto ds = synth(93, 2).samples;
  std::set<std::vector<std::string>> distinct;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto plan = physical_split(ds, Variable::Mw, seed);
    CHECK(plan.test_monomers.size() == 9);
    CHECK_NOTHROW(check_split(ds, plan));
    distinct.insert(plan.test_ids);
    const auto back = split_from_json(to_json(plan));
    CHECK(back.test_ids == plan.test_ids);
    CHECK(back.medians == plan.medians);
    CHECK(back.test_side == plan.test_side);
    const auto parts = apply_split(ds, plan);
    CHECK(parts.train.size() == plan.train_ids.size());
    CHECK(parts.test.size() == plan.test_ids.size());
  }
  CHECK(distinct.size() == 3);
}

TEST_CASE("property: split invariants for every seed and variable") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ds = synth(10 + seed % 7, 100 + seed).samples;
    for (auto v : {Variable::Mw, Variable::Shear, Variable::Temp}) {
      CHECK_NOTHROW(check_split(ds, physical_split(ds, v, seed)));
    }
  }
}

TEST_CASE("records at a degenerate median join the lower side") {
  auto ds = synth(10, 3).samples;
  for (auto& s : ds) s.temp = 450.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto plan = physical_split(ds, Variable::Temp, seed);
    const auto& m = plan.test_monomers.front();
    std::size_t in_test = 0;
    for (const auto& s : ds) {
      if (s.monomer() == m) {
        in_test += std::count(plan.test_ids.begin(), plan.test_ids.end(), s.record_id);
      }
    }
    CHECK(in_test == (plan.test_side.at(m) == Side::Lower ? 20u : 0u));
  }
}

TEST_CASE("broken plans are detected") {
  const auto ds = synth(12, 4).samples;
  auto plan = physical_split(ds, Variable::Mw, 1);
  auto moved = plan;
  moved.test_ids.push_back(moved.train_ids.back());
  moved.train_ids.pop_back();
  CHECK_THROWS_AS(check_split(ds, moved), InvariantViolation);
}

TEST_CASE("sweep grids") {
  const auto base = base_sample();
  const auto mw = make_sweep(Variable::Mw, base);
  CHECK(mw.grid.front() == doctest::Approx(1e2));
  CHECK(mw.grid.back() == doctest::Approx(1e7));
  const auto sh = make_sweep(Variable::Shear, base, 12);
  CHECK(sh.grid.size() == 12);
  CHECK(sh.grid.front() == doctest::Approx(1e-5));
  CHECK(sh.grid.back() == doctest::Approx(1e6));
  const auto t = make_sweep(Variable::Temp, base, 5);
  CHECK(t.grid.front() == 430.0);
  CHECK(t.grid.back() == 470.0);
  CHECK(make_sweep(Variable::Temp, base, 1).grid == std::vector<double>{450.0});
  CHECK_THROWS_AS(make_sweep(Variable::Mw, base, 0), ValidationError);
}

TEST_CASE("sweep predictions match direct calls") {
  const auto set = synth(12, 6, 0.05);
  nn::MlpConfig cfg;
  cfg.layer1_size = 8;
  cfg.layer2_size = 8;
  cfg.max_epochs = 5;
  const model::Predictor m(nn::train_with_holdout(set.samples, cfg, nn::NetKind::PENN));
  const auto& base = set.samples[3];
  const auto one = sweep_predict(m, base, SweepSpec{Variable::Mw, {base.mw}});
  CHECK(one.pred[0] == m(base).log10_eta);

  for (auto v : {Variable::Mw, Variable::Shear, Variable::Temp}) {
    const auto c = sweep_predict(m, base, make_sweep(v, base, 15));
    REQUIRE(c.params);
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      auto s = base;
      (v == Variable::Mw ? s.mw : v == Variable::Shear ? s.shear : s.temp) = c.grid[i];
      CHECK(c.pred[i] == m(s).log10_eta);
    }
    if (v == Variable::Shear && c.params->n < 1.0) {
      // Non-increasing past the critical rate; below it the logistic blend
      // may rise above the plateau by a bounded overshoot.
      const double overshoot = 0.27846454275883 * (1.0 - c.params->n) / c.params->beta_g;
      for (std::size_t i = 1; i < c.grid.size(); ++i) {
        if (sweep_x(v, c.grid[i - 1]) >= c.params->log_gcr) {
          CHECK(*c.pred[i] <= *c.pred[i - 1] + 1e-12);
        }
        CHECK(*c.pred[i] <= *c.pred[0] + overshoot + 1e-12);
      }
    }
  }
}

TEST_CASE("parameters from sweeps") {
  // Constant curve: both slopes vanish.
  Curve flat = law_curve(Variable::Mw, compliant());
  for (auto& v : flat.pred) v = 2.0;
  const auto f = estimate_params_from_sweep(flat, fit::Law::MwLaw);
  CHECK(std::abs(f.params[1]) < 1e-6);
  CHECK(std::abs(f.params[2]) < 1e-6);

  // Shear exponent from a generated curve.
  for (double n : {0.2, 0.45, 0.8}) {
    auto p = compliant();
    p.n = n;
    const auto r = estimate_params_from_sweep(law_curve(Variable::Shear, p), fit::Law::ShearLaw);
    CHECK(r.params[1] == doctest::Approx(n).epsilon(0.02 / n));
  }

  // A PENN sweep is self-consistent with the PENN's own alpha2.
  const auto m = penn_with_outputs({0.0, 0.0, 0.3, 0.0, 5.0, 0.0, 0.0, -2.0, 0.0, 0.0});
  const auto base = base_sample();
  const auto c = sweep_predict(m, base, make_sweep(Variable::Mw, base, 81));
  REQUIRE(c.params);
  const auto r = estimate_params_from_sweep(c, fit::Law::MwLaw);
  CHECK(std::abs(r.params[2] - c.params->alpha2) < 0.1);
}

TEST_CASE("classification") {
  const auto p = compliant();
  for (auto v : {Variable::Mw, Variable::Shear, Variable::Temp}) {
    const auto c = law_curve(v, p);
    const auto held = on_curve(c, {3, 10, 30});
    const auto cls = classify_extrapolation(c, held, law_for(v));
    CHECK_MESSAGE(cls.outcome == Outcome::Success, to_string(v));
    CHECK(cls.held_out_ome < 1e-9);
    const auto again = classify_extrapolation(c, held, law_for(v));
    CHECK(again.outcome == cls.outcome);
    CHECK(again.held_out_ome == cls.held_out_ome);

    const auto off = law_curve(v, p, 3.0);
    CHECK(classify_extrapolation(off, held, law_for(v)).outcome == Outcome::Fail);
  }

  Curve flat = law_curve(Variable::Mw, p);
  for (auto& v : flat.pred) v = 2.0;
  const std::vector<HeldOutPoint> near{{1e5, 2.3}, {1e6, 1.8}};
  CHECK(classify_extrapolation(flat, near, fit::Law::MwLaw).outcome == Outcome::FitButWrongTrend);

  // Increasing with temperature breaks the trend.
  auto rising = law_curve(Variable::Temp, p);
  std::reverse(rising.pred.begin(), rising.pred.end());
  const auto held = on_curve(rising, {5, 20});
  CHECK(classify_extrapolation(rising, held, fit::Law::TempLaw).outcome == Outcome::FitButWrongTrend);

  // A curve made only of gaps cannot be accurate.
  Curve empty = flat;
  for (auto& v : empty.pred) v.reset();
  CHECK(classify_extrapolation(empty, near, fit::Law::MwLaw).outcome == Outcome::Fail);
}

TEST_CASE("evaluation report") {
  const auto set = synth(20, 8, 0.05);
  const auto plan = physical_split(set.samples, Variable::Mw, 2);
  const auto parts = apply_split(set.samples, plan);
  nn::MlpConfig cfg;
  cfg.layer1_size = 8;
  cfg.layer2_size = 8;
  cfg.max_epochs = 5;
  const model::Predictor m(nn::train_with_holdout(parts.train, cfg, nn::NetKind::ANN));
  Truth truth;
  for (const auto& c : set.truth) truth.params[c.monomer] = c.true_params;
  const auto r = evaluate(m, parts.test, Variable::Mw, {}, &truth);
  CHECK(r.tallies.total() == r.sweeps.size());
  CHECK(r.sweeps.size() == plan.test_monomers.size());
  CHECK(r.curves.size() == r.sweeps.size());
  CHECK(r.model_kind == "ann");
  REQUIRE(r.params.size() == 3);
  for (const auto& d : r.params) {
    CHECK(d.truth.size() == r.sweeps.size());
    if (d.kl) CHECK(*d.kl >= 0.0);
  }

  const auto text = to_json(r).dump();
  const auto back = report_from_json(nlohmann::json::parse(text));
  CHECK(to_json(back).dump() == text);

  std::ostringstream csv;
  write_curves_csv(csv, r.curves);
  const auto s = csv.str();
  CHECK(s.rfind("record_id,variable,grid_value,pred_log10_eta,true_log10_eta\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) ==
        1 + r.curves.size() * kDefaultSweepPoints);

  auto bad = to_json(r);
  bad["tallies"]["total"] = 999;
  CHECK_THROWS_AS(report_from_json(bad), ValidationError);
}
