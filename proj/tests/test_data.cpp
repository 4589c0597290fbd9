#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rheo/data.hpp"
#include "rheo/errors.hpp"
#include "rheo/scaling.hpp"
#include "test_support.hpp"

using namespace rheo;
using namespace rheo::data;

namespace {

const char* kHeader =
    "record_id,kind,smiles_1,smiles_2,fraction_1,fraction_2,mw_gmol,pdi,temp_K,"
    "shear_1_per_s,viscosity\n";

Dataset parse(const std::string& text, LoadReport* report = nullptr) {
  std::istringstream in(text);
  return parse_dataset(in, report);
}

PolymerSample make_sample(std::mt19937_64& rng, std::size_t width) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PolymerSample s;
  s.record_id = "r";
  s.constituents = {{"CC", 1.0, {}, {}}};
  for (std::size_t i = 0; i < width; ++i) s.fingerprint.push_back(u(rng));
  s.mw = std::pow(10.0, 2.5 + 4.0 * u(rng));
  s.pdi = 1.0 + 3.0 * u(rng);
  s.temp = 350.0 + 200.0 * u(rng);
  s.shear = u(rng) < 0.2 ? 0.0 : std::pow(10.0, -2.0 + 7.0 * u(rng));
  s.log10_eta = -3.0 + 12.0 * u(rng);
  return s;
}

}  // namespace

TEST_CASE("fallback_fingerprint") {
  const auto a = fallback_fingerprint("CC(C)C(=O)OC");
  const auto b = fallback_fingerprint("CC(C)C(=O)OC");
  CHECK(a == b);
  CHECK(a.size() == kFallbackFingerprintWidth);
  double norm = 0;
  for (double v : a) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(fallback_fingerprint(""), EmptySmiles);
  CHECK(fallback_fingerprint("CC") != fallback_fingerprint("CCC"));
}

TEST_CASE("aggregate_fingerprint rules") {
  const std::vector<double> fa{2.0}, fb{6.0};
  std::vector<WeightedFingerprint> units{{fa, 0.5}, {fb, 0.5}};
  CHECK(aggregate_fingerprint(units, PolymerKind::Copolymer).values[0] == doctest::Approx(4.0));
  CHECK(aggregate_fingerprint(units, PolymerKind::Blend).values[0] == doctest::Approx(3.0));

  const std::vector<double> one{0.3, -1.2, 5.0};
  std::vector<WeightedFingerprint> single{{one, 1.0}};
  for (auto kind : {PolymerKind::Homopolymer, PolymerKind::Copolymer, PolymerKind::Blend}) {
    CHECK(aggregate_fingerprint(single, kind).values == one);
  }

  std::vector<WeightedFingerprint> equal{{one, 0.3}, {one, 0.7}};
  const auto co = aggregate_fingerprint(equal, PolymerKind::Copolymer).values;
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(co[i] == doctest::Approx(one[i]));
  // Component 1 is negative: arithmetic fallback for that component only.
  const auto bl = aggregate_fingerprint(equal, PolymerKind::Blend);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(bl.values[i] == doctest::Approx(one[i]));
  CHECK(bl.arithmetic_fallback == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(aggregate_fingerprint(equal, PolymerKind::Blend, true), NonPositiveComponent);
}

TEST_CASE("property: aggregate bounds and AM-HM ordering") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + trial % 3;
    std::vector<std::vector<double>> fps(k, std::vector<double>(8));
    std::vector<double> w(k);
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (auto& v : fps[i]) v = u(rng);
      w[i] = u(rng);
      total += w[i];
    }
    std::vector<WeightedFingerprint> units;
    for (std::size_t i = 0; i < k; ++i) units.push_back({fps[i], w[i] / total});
    const auto co = aggregate_fingerprint(units, PolymerKind::Copolymer).values;
    const auto bl = aggregate_fingerprint(units, PolymerKind::Blend).values;
    for (std::size_t j = 0; j < 8; ++j) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < k; ++i) {
        lo = std::min(lo, fps[i][j]);
        hi = std::max(hi, fps[i][j]);
      }
      CHECK(co[j] >= lo - 1e-12);
      CHECK(co[j] <= hi + 1e-12);
      CHECK(bl[j] <= co[j] + 1e-12);
    }
  }
}

TEST_CASE("load_dataset basics") {
  CHECK_THROWS_AS(parse(""), EmptyDataset);
  CHECK_THROWS_AS(parse(kHeader), EmptyDataset);

  auto one = parse(std::string(kHeader) + "r1,homopolymer,CC,,,,1e5,1.8,450,0,1200\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].record_id == "r1");
  CHECK(one[0].constituents.size() == 1);
  CHECK(one[0].constituents[0].fraction == 1.0);
  CHECK(one[0].log10_eta == doctest::Approx(std::log10(1200.0)));
  CHECK(one[0].fingerprint == fallback_fingerprint("CC"));
  CHECK(one[0].pdi == 1.8);

  CHECK_THROWS_AS(parse(std::string(kHeader) + "r1,copolymer,CC,CCO,0.5,0.4,1e5,,450,0,1200\n"),
                  InvariantViolation);
  CHECK_THROWS_AS(parse(std::string(kHeader) + "r1,homopolymer,CC,,,,-5,,450,0,1200\n"),
                  InvariantViolation);
  CHECK_THROWS_AS(parse(std::string(kHeader) + "r1,homopolymer,CC,,,,1e5,0.5,450,0,1200\n"),
                  InvariantViolation);

  try {
    parse(std::string(kHeader) + "r1,homopolymer,CC,,,,1e5,,abc,0,1200\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 9);
  }
  CHECK_THROWS_AS(parse("record_id,kind\nr1,homopolymer\n"), ParseError);
  CHECK_THROWS_AS(parse(std::string(kHeader) + "r1,dendrimer,CC,,,,1e5,,450,0,1\n"), ParseError);
}

TEST_CASE("copolymer row and merged blend rows") {
  auto co = parse(std::string(kHeader) + "c1,copolymer,CC,CCO,0.25,0.75,1e5,,450,10,100\n");
  REQUIRE(co.size() == 1);
  CHECK(co[0].monomer() == "CCO");
  CHECK_FALSE(co[0].pdi.has_value());
  const auto fa = fallback_fingerprint("CC");
  const auto fb = fallback_fingerprint("CCO");
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(co[0].fingerprint[i] == doctest::Approx(0.25 * fa[i] + 0.75 * fb[i]));
  }

  const std::string text =
      "record_id,kind,smiles_1,fraction_1,mw_gmol,pdi,temp_K,shear_1_per_s,viscosity,fp_0,fp_1\n"
      "b1,blend,A,0.5,1e4,2.0,400,0,50,2,1\n"
      "b1,blend,B,0.5,3e4,3.0,400,0,50,6,-1\n"
      "h1,homopolymer,A,,2e4,,410,1,60,2,1\n";
  LoadReport report;
  auto ds = parse(text, &report);
  REQUIRE(ds.size() == 2);
  CHECK(report.rows == 3);
  const auto& b = ds[0];
  CHECK(b.constituents.size() == 2);
  CHECK(b.mw == doctest::Approx(2e4));
  CHECK(*b.pdi == doctest::Approx(2.5));
  CHECK(*b.constituents[1].mw == 3e4);
  CHECK(b.fingerprint[0] == doctest::Approx(3.0));   // harmonic
  CHECK(b.fingerprint[1] == doctest::Approx(0.0));   // arithmetic fallback
  CHECK(report.warnings.size() == 1);
  CHECK(ds[1].fingerprint == std::vector<double>{2, 1});

  CHECK_THROWS_AS(parse("record_id,kind,smiles_1,fraction_1,mw_gmol,pdi,temp_K,shear_1_per_s,viscosity\n"
                        "b1,blend,A,0.5,1e4,2.0,400,0,50\n"
                        "b1,blend,B,0.5,3e4,3.0,410,0,50\n"),
                  InvariantViolation);
}

TEST_CASE("write_dataset reloads to the same records") {
  auto ds = parse(std::string(kHeader) +
                  "c1,copolymer,CC,CCO,0.25,0.75,1e5,,450,10,100\n"
                  "r2,homopolymer,CC,,,,3e4,1.5,470,0,2500\n");
  impute_pdi(ds);
  std::ostringstream out;
  write_dataset(out, ds);
  auto again = parse(out.str());
  REQUIRE(again.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(again[i].record_id == ds[i].record_id);
    CHECK(again[i].fingerprint == ds[i].fingerprint);
    CHECK(*again[i].pdi == *ds[i].pdi);
    CHECK(again[i].log10_eta == doctest::Approx(ds[i].log10_eta).epsilon(1e-14));
  }
  CHECK(out.str().find("pdi_imputed") != std::string::npos);
}

TEST_CASE("impute_pdi") {
  auto ds = parse(std::string(kHeader) +
                  "a,homopolymer,CC,,,,1e5,,450,0,10\n"
                  "b,homopolymer,CC,,,,1e5,1.5,450,0,10\n");
  CHECK(impute_pdi(ds) == 1);
  CHECK(*ds[0].pdi == 2.06);
  CHECK(ds[0].pdi_imputed);
  CHECK(*ds[1].pdi == 1.5);
  CHECK_FALSE(ds[1].pdi_imputed);
  CHECK(median_pdi(ds) == 1.5);

  auto all = parse(std::string(kHeader) +
                   "a,homopolymer,CC,,,,1e5,,450,0,10\n"
                   "b,homopolymer,CCO,,,,1e5,,450,0,10\n");
  impute_pdi(all);
  for (const auto& s : all) {
    CHECK(*s.pdi == 2.06);
    CHECK(s.pdi_imputed);
  }
  CHECK_THROWS_AS(median_pdi(all), EmptyInput);
  PolymerSample missing;
  CHECK_THROWS_AS(missing.pdi_value(), InvariantViolation);
}

TEST_CASE("augment_low_mw") {
  const double log_mcr = 4.0;
  auto law = [&](double x) {  // alpha1 = 1, alpha2 = 3.4, log k1 = -2
    return x < log_mcr ? -2.0 + x : -2.0 + (1.0 - 3.4) * log_mcr + 3.4 * x;
  };
  Dataset series;
  for (int i = 0; i < 8; ++i) {
    PolymerSample s;
    s.record_id = "p" + std::to_string(i);
    s.constituents = {{"CCO", 1.0, {}, {}}};
    s.fingerprint = {0.1, 0.2};
    s.mw = std::pow(10.0, 4.2 + 0.3 * i);
    s.pdi = 2.0;
    s.temp = 450.0;
    s.shear = 0.0;
    s.log10_eta = law(std::log10(s.mw));
    series.push_back(s);
  }
  const auto added = augment_chemistry(series, std::pow(10.0, log_mcr));
  REQUIRE(added.size() == 5);
  for (const auto& s : added) {
    CHECK(s.augmented);
    CHECK(s.mw < std::pow(10.0, log_mcr));
    CHECK(std::abs(s.log10_eta - law(std::log10(s.mw))) < 1e-3);
  }
  CHECK(added.front().mw == doctest::Approx(100.0));
  CHECK(added.back().mw == doctest::Approx(0.5e4));

  CHECK_THROWS_AS(augment_chemistry(series, std::nullopt), MissingMcr);
  Dataset four(series.begin(), series.begin() + 4);
  CHECK_THROWS_AS(augment_chemistry(four, 1e4), TooFewPoints);

  auto result = augment_low_mw(four, {{"CCO", 1e4}});
  CHECK(result.added.empty());
  CHECK(result.skipped.size() == 1);
  result = augment_low_mw(series, {{"CCO", 1e4}});
  CHECK(result.added.size() == 5);
  result = augment_low_mw(series, {});
  CHECK(result.added.empty());
}

TEST_CASE("scaling round trip and endpoints") {
  std::mt19937_64 rng(22);
  Dataset train;
  for (int i = 0; i < 100; ++i) train.push_back(make_sample(rng, 6));
  const auto spec = fit_scaling(train);

  double worst = 0;
  for (const auto& s : train) {
    const auto fp = spec.scale_fingerprint(s.fingerprint);
    for (std::size_t i = 0; i < fp.size(); ++i) {
      worst = std::max(worst, std::abs(spec.fingerprint[i].invert(fp[i]) - s.fingerprint[i]));
    }
    worst = std::max(worst, std::abs(spec.pdi.invert(spec.scale_pdi(*s.pdi)) - *s.pdi));
    worst = std::max(worst, std::abs(spec.unscale_temp(spec.scale_temp(s.temp)) - s.temp) / s.temp);
    worst = std::max(worst, std::abs(spec.unscale_log_eta(spec.scale_log_eta(s.log10_eta)) - s.log10_eta));
    worst = std::max(worst, std::abs(spec.unscale_log_mw(spec.scale_log_mw(s.mw)) - std::log10(s.mw)));
  }
  CHECK(worst < 1e-12);

  CHECK(spec.temp.apply(spec.temp.min) == -1.0);
  CHECK(spec.temp.apply(spec.temp.max) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spec.scale_log_eta(spec.log_eta.min) == -1.0);
  // Zero shear sits at log10(1e-5) = -5 before the affine map.
  CHECK(spec.unscale_log_shear(spec.scale_shear(0.0)) == doctest::Approx(-5.0).epsilon(1e-14));
  // Out of range values are not clipped.
  CHECK(spec.scale_temp(spec.temp.max + 100.0) > 1.0);
  CHECK(spec.scale_log_eta(spec.log_eta.min - 1.0) < -1.0);

  Dataset flat = train;
  for (auto& s : flat) s.log10_eta = 2.0;
  CHECK_THROWS_AS(fit_scaling(flat), DegenerateRange);
  flat = train;
  for (auto& s : flat) s.temp = 400.0;
  CHECK_THROWS_AS(fit_scaling(flat), DegenerateRange);
  CHECK_THROWS_AS(fit_scaling({}), EmptyDataset);
  // A constant fingerprint column maps to zero rather than failing.
  flat = train;
  for (auto& s : flat) s.fingerprint[2] = 0.0;
  CHECK(fit_scaling(flat).scale_fingerprint(flat[0].fingerprint)[2] == 0.0);
}

TEST_CASE("property: scaling is order preserving") {
  std::mt19937_64 rng(23);
  Dataset train;
  for (int i = 0; i < 50; ++i) train.push_back(make_sample(rng, 3));
  const auto spec = fit_scaling(train);
  std::uniform_real_distribution<double> u(-10, 20);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    if (a == b) continue;
    CHECK((spec.scale_log_eta(a) < spec.scale_log_eta(b)) == (a < b));
    CHECK((spec.scale_temp(300 + 10 * a) < spec.scale_temp(300 + 10 * b)) == (a < b));
  }
}

TEST_CASE("property: scaled graph equals the scaled physical graph") {
  std::mt19937_64 rng(24);
  Dataset train;
  for (int i = 0; i < 50; ++i) train.push_back(make_sample(rng, 3));
  const auto spec = fit_scaling(train);
  for (int trial = 0; trial < 300; ++trial) {
    const auto q = testing::random_params(rng);
    const auto c = testing::random_conditions(rng, q);
    const auto p = spec.unscale_params(q);
    const physics::PhysicalConditions pc{spec.unscale_log_mw(c.log_mw), spec.unscale_temp(c.temp),
                                         spec.unscale_log_shear(c.log_shear)};
    const double scaled = physics::log_eta(c, q);
    const double physical = physics::log_eta(pc, p);
    CHECK(spec.unscale_log_eta(scaled) == doctest::Approx(physical).epsilon(1e-10));
    const auto back = spec.scale_params(p).to_array();
    const auto orig = q.to_array();
    for (std::size_t i = 0; i < orig.size(); ++i) {
      CHECK(back[i] == doctest::Approx(orig[i]).epsilon(1e-12));
    }
  }
}
