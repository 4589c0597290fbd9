#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rheo/errors.hpp"
#include "rheo/predictor.hpp"
#include "rheo/serialization.hpp"
#include "rheo/synthetic.hpp"

using namespace rheo;

namespace {

data::Dataset small_set(std::size_t n_chem = 10) {
  synthetic::SyntheticOptions o;
  o.n_chem = n_chem;
  o.pts_per_chem = 10;
  o.noise_sigma = 0.05;
  o.seed = 3;
  o.fingerprint_width = 8;
  return synthetic::generate(o).samples;
}

nn::MlpConfig small_config() {
  nn::MlpConfig c;
  c.layer1_size = 12;
  c.layer2_size = 10;
  c.max_epochs = 15;
  c.batch_size = 16;
  c.seed = 9;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("model kind names") {
  CHECK(model::parse_model_kind("penn") == model::ModelKind::PENN);
  CHECK(model::parse_model_kind("ann") == model::ModelKind::ANN);
  CHECK(model::parse_model_kind("gpr") == model::ModelKind::GPR);
  CHECK(model::to_string(model::ModelKind::GPR) == "gpr");
  CHECK_THROWS_AS(model::parse_model_kind("svm"), ValidationError);
}

TEST_CASE("network documents round trip bit for bit") {
  const auto ds = small_set();
  for (auto kind : {nn::NetKind::PENN, nn::NetKind::ANN}) {
    const auto m = nn::train_with_holdout(ds, small_config(), kind);
    const auto text = io::to_json(m).dump(2);
    const auto back = io::network_from_json(io::json::parse(text));
    CHECK(back.kind == m.kind);
    CHECK(back.config == m.config);
    CHECK(back.scaling == m.scaling);
    CHECK(back.log.epochs.size() == m.log.epochs.size());
    CHECK(back.log.best_epoch == m.log.best_epoch);
    const auto a = m.net.pack();
    const auto b = back.net.pack();
    REQUIRE(a.size() == b.size());
    bool all_same = true;
    for (Eigen::Index i = 0; i < a.size(); ++i) all_same = all_same && same_bits(a[i], b[i]);
    CHECK(all_same);
    CHECK(io::to_json(back).dump(2) == text);

    const model::Predictor p1(m), p2(back);
    for (const auto& s : ds) {
      const auto x = p1(s), y = p2(s);
      CHECK(x.log10_eta.has_value() == y.log10_eta.has_value());
      if (x.log10_eta && y.log10_eta) CHECK(same_bits(*x.log10_eta, *y.log10_eta));
    }
  }
}

TEST_CASE("gpr documents round trip") {
  const auto ds = small_set(4);
  const auto m = model::train_gpr(ds, {0.05, 1.5, 2.0}, 11);
  const auto back = io::gpr_from_json(io::json::parse(io::to_json(m).dump()));
  CHECK(back.seed == 11);
  CHECK(back.scaling == m.scaling);
  CHECK(back.model.hp == m.model.hp);
  const model::Predictor p1(m), p2(back);
  const auto a = p1.predict(ds), b = p2.predict(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(a[i].log10_eta);
    CHECK(same_bits(*a[i].log10_eta, *b[i].log10_eta));
    // The batch path and the per-point path agree.
    CHECK(*p1(ds[i]).log10_eta == doctest::Approx(*a[i].log10_eta).epsilon(1e-12));
  }
  CHECK(p1.kind() == model::ModelKind::GPR);
  CHECK_FALSE(p1.params(ds[0].fingerprint, 2.0).has_value());
}

TEST_CASE("penn predictions equal the physical law at the predicted parameters") {
  const auto ds = small_set();
  const model::Predictor p(nn::train_with_holdout(ds, small_config(), nn::NetKind::PENN));
  CHECK(p.kind() == model::ModelKind::PENN);
  for (const auto& s : ds) {
    const auto params = p.params(s.fingerprint, s.pdi_value());
    REQUIRE(params);
    const auto pred = p(s);
    const physics::PhysicalConditions cond{std::log10(s.mw), s.temp,
                                           std::log10(s.shear + data::ScalingSpec::kShearOffset)};
    if (!pred.log10_eta) continue;
    CHECK(*pred.log10_eta == doctest::Approx(physics::log_eta(cond, *params)).epsilon(1e-9));
  }
}

TEST_CASE("collapsed WLF denominator becomes a gap") {
  const auto ds = small_set(3);
  auto m = nn::train_with_holdout(ds, small_config(), nn::NetKind::PENN);
  auto& out = m.net.layers[2];
  out.w.setZero();
  out.b.setZero();
  out.b[static_cast<Eigen::Index>(physics::idx(physics::Param::C2))] = -30.0;
  out.b[static_cast<Eigen::Index>(physics::idx(physics::Param::TRef))] = 30.0;
  const model::Predictor p(m);
  const auto pred = p.at(ds[0].fingerprint, 2.0, 1e4, m.scaling.temp.min, 0.0);
  CHECK_FALSE(pred.log10_eta.has_value());
  CHECK(pred.error.find("DenominatorTooSmall") != std::string::npos);
  CHECK_THROWS_AS(p.at(std::vector<double>(3, 0.0), 2.0, 1e4, 450.0, 0.0), DimensionMismatch);
}

TEST_CASE("malformed documents are rejected") {
  const auto ds = small_set(3);
  const auto m = nn::train_with_holdout(ds, small_config(), nn::NetKind::ANN);
  auto j = io::to_json(m);
  auto broken = j;
  broken["layers"][1]["weights"]["rows"] = 3;
  CHECK_THROWS_AS(io::network_from_json(broken), ValidationError);
  broken = j;
  broken.erase("scaling");
  CHECK_THROWS_AS(io::network_from_json(broken), ValidationError);
  broken = j;
  broken["kind"] = "penn";
  CHECK_THROWS_AS(io::network_from_json(broken), ValidationError);
  CHECK_THROWS_AS(io::predictor_from_json(io::json{{"kind", "tree"}}), ValidationError);
  CHECK_THROWS_AS(io::read_json("/nonexistent/model.json"), ValidationError);
}
