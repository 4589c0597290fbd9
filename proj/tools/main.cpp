#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <Eigen/Core>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rheo/curve_fit.hpp"
#include "rheo/data.hpp"
#include "rheo/errors.hpp"
#include "rheo/evaluation.hpp"
#include "rheo/predictor.hpp"
#include "rheo/search.hpp"
#include "rheo/serialization.hpp"
#include "rheo/synthetic.hpp"
#include "rheo/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rheo;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw ComputeError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

// Everything a command needs: parsed flags plus the manifest being built.
struct Run {
  std::string command;
  std::uint64_t seed = 0;
  fs::path out;
  json settings = json::object();
  json inputs = json::object();
  json outputs = json::object();

  void input(const std::string& role, const fs::path& p) {
    inputs[role] = {{"file", p.filename().string()}, {"sha256", sha256_hex(slurp(p))}};
  }

  void write(const std::string& name, const std::string& bytes) {
    fs::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (out / name).string());
    f << bytes;
    if (!f) throw ValidationError("failed writing " + (out / name).string());
    outputs[name] = sha256_hex(bytes);
  }

  void write_manifest() {
    const json manifest{{"command", command},
                        {"seed", seed},
                        {"settings", settings},
                        {"config_hash", sha256_hex(settings.dump())},
                        {"inputs", inputs},
                        {"outputs", outputs},
                        {"versions",
                         {{"rheo", kVersion},
                          {"format", io::kFormatVersion},
                          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                                EIGEN_MINOR_VERSION)},
                          {"json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                               NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)},
                          {"compiler", __VERSION__}}}};
    fs::create_directories(out);
    std::ofstream f(out / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
    if (!f) throw ValidationError("failed writing " + (out / "manifest.json").string());
  }
};

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string dataset, model, out, truth, report;
  std::string kind = "penn";
  std::string variable = "mw";
  std::string law = "mw";
  std::optional<double> w_alpha, lr, dropout, weight_decay;
  std::size_t folds = 10;
  std::size_t trials = 0;
  double noise_sigma = 0.0;
  std::size_t bins = 20;
  double theta_acc = 1.0;
  std::size_t n_chem = 93;
  std::size_t pts = 20;
  std::size_t fp_width = 32;
  std::optional<std::size_t> max_epochs, layer_size, batch_size;
  std::size_t points = eval::kDefaultSweepPoints;
};

data::Dataset load(Run& run, const std::string& path, const std::string& role = "dataset") {
  run.input(role, path);
  return data::load_dataset(path);
}

model::Predictor load_predictor(Run& run, const std::string& path) {
  run.input("model", path);
  return io::load_model(path);
}

std::string dataset_csv(const data::Dataset& ds) {
  std::ostringstream s;
  data::write_dataset(s, ds);
  return s.str();
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(Run& run, const Flags& f) {
  synthetic::SyntheticOptions o;
  o.n_chem = f.n_chem;
  o.pts_per_chem = f.pts;
  o.noise_sigma = f.noise_sigma;
  o.seed = run.seed;
  o.fingerprint_width = f.fp_width;
  run.settings = {{"n_chem", o.n_chem}, {"pts", o.pts_per_chem}, {"noise_sigma", o.noise_sigma},
                  {"fp_width", o.fingerprint_width}};
  const auto set = synthetic::generate(o);
  run.write("dataset.csv", dataset_csv(set.samples));
  std::ostringstream t;
  synthetic::write_truth_json(t, set.truth);
  run.write("truth.json", t.str());
  spdlog::info("synth: {} records over {} chemistries", set.samples.size(), set.truth.size());
}

void cmd_ingest(Run& run, const Flags& f) {
  run.input("dataset", f.dataset);
  data::LoadReport lr;
  auto ds = data::load_dataset(f.dataset, &lr);
  bool recorded = std::any_of(ds.begin(), ds.end(), [](const auto& s) { return s.pdi && !s.pdi_imputed; });
  const double fill = recorded ? data::median_pdi(ds) : data::kMedianPdi;
  const std::size_t imputed = data::impute_pdi(ds, fill);
  for (const auto& w : lr.warnings) spdlog::warn("ingest: {}", w);
  run.write("dataset.csv", dataset_csv(ds));
  const json summary{{"rows", lr.rows},
                     {"records", ds.size()},
                     {"monomers", data::monomers(ds).size()},
                     {"pdi_fill", fill},
                     {"pdi_imputed", imputed},
                     {"warnings", lr.warnings}};
  run.write("ingest.json", summary.dump(2) + "\n");
}

void cmd_split(Run& run, const Flags& f) {
  const auto ds = load(run, f.dataset);
  const auto variable = eval::parse_variable(f.variable);
  run.settings = {{"variable", f.variable}};
  const auto plan = eval::physical_split(ds, variable, run.seed);
  eval::check_split(ds, plan);
  const auto parts = eval::apply_split(ds, plan);
  run.write("train.csv", dataset_csv(parts.train));
  run.write("test.csv", dataset_csv(parts.test));
  run.write("split.json", eval::to_json(plan).dump(2) + "\n");
}

nn::MlpConfig network_config(const Flags& f, nn::NetKind kind, std::uint64_t seed) {
  nn::MlpConfig c;
  c.initial_lr = kind == nn::NetKind::PENN ? nn::kDefaultPennLr : nn::kDefaultAnnLr;
  if (f.lr) c.initial_lr = *f.lr;
  if (f.w_alpha) c.w_alpha = *f.w_alpha;
  if (f.weight_decay) c.weight_decay = *f.weight_decay;
  if (f.dropout) c.layer1_dropout = c.layer2_dropout = *f.dropout;
  if (f.layer_size) c.layer1_size = c.layer2_size = *f.layer_size;
  if (f.max_epochs) c.max_epochs = *f.max_epochs;
  if (f.batch_size) c.batch_size = *f.batch_size;
  c.seed = seed;
  return c;
}

void cmd_train(Run& run, const Flags& f) {
  const auto ds = load(run, f.dataset);
  const auto kind = model::parse_model_kind(f.kind);
  run.settings = {{"kind", f.kind}, {"folds", f.folds}, {"trials", f.trials}};
  if (kind == model::ModelKind::GPR) {
    model::TrainedGpr m;
    if (f.trials > 0) {
      gpr::GprSearchOptions o;
      o.iterations = f.trials;
      o.folds = f.folds;
      o.seed = derive_seed(run.seed, 1);
      gpr::GprSearchResult search;
      m = model::search_gpr(ds, o, &search);
      json trials = json::array();
      for (const auto& t : search.trials) {
        trials.push_back({{"alpha", t.hp.alpha},
                          {"length_scale", t.hp.length_scale},
                          {"constant_value", t.hp.constant_value},
                          {"score", t.failed ? json(nullptr) : json(t.score)},
                          {"failed", t.failed}});
      }
      run.write("search.json", json{{"trials", trials}}.dump(2) + "\n");
    } else {
      m = model::train_gpr(ds, {}, derive_seed(run.seed, 1));
    }
    run.write("model.json", io::to_json(m).dump(2) + "\n");
    return;
  }
  const auto net_kind = kind == model::ModelKind::PENN ? nn::NetKind::PENN : nn::NetKind::ANN;
  auto config = network_config(f, net_kind, derive_seed(run.seed, 2));
  run.settings["config"] = io::to_json(config);
  if (f.trials > 0) {
    nn::SearchOptions o;
    o.budget = f.trials;
    o.min_epochs = std::min<std::size_t>(o.min_epochs, config.max_epochs);
    o.seed = derive_seed(run.seed, 3);
    const auto res = nn::hyperparameter_search(nn::SearchGrid{}, config, o,
                                               nn::cv_evaluator(ds, net_kind, f.folds));
    json trials = json::array();
    for (const auto& t : res.trials) {
      trials.push_back({{"rung", t.rung}, {"config", t.config_index}, {"epochs", t.epochs}, {"score", t.score}});
    }
    json sampled = json::array();
    for (const auto& c : res.sampled) sampled.push_back(io::to_json(c));
    config = res.best;
    config.max_epochs = network_config(f, net_kind, 0).max_epochs;
    run.write("search.json", json{{"sampled", sampled}, {"trials", trials}, {"best", io::to_json(config)}}.dump(2) +
                                 "\n");
  }
  const auto m = nn::train_with_holdout(ds, config, net_kind);
  spdlog::info("train: best epoch {} of {}, val loss {}", m.log.best_epoch, m.log.epochs.size(),
               m.log.best_val_loss);
  run.write("model.json", io::to_json(m).dump(2) + "\n");
}

void cmd_predict(Run& run, const Flags& f) {
  const auto m = load_predictor(run, f.model);
  const auto ds = load(run, f.dataset);
  const auto preds = m.predict(ds);
  std::ostringstream s;
  s << "record_id,monomer,mw,temp,shear,true_log10_eta,pred_log10_eta,error\n";
  std::vector<double> p, t;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds[i];
    s << fmt::format("{},{},{},{},{},{},{},{}\n", r.record_id, r.monomer(), r.mw, r.temp, r.shear, r.log10_eta,
                     fmt_opt(preds[i].log10_eta), preds[i].error);
    if (preds[i].log10_eta) {
      p.push_back(*preds[i].log10_eta);
      t.push_back(r.log10_eta);
    }
  }
  run.write("predictions.csv", s.str());
  json metrics{{"model_kind", model::to_string(m.kind())}, {"n", ds.size()}, {"gaps", ds.size() - p.size()}};
  metrics["ome"] = p.empty() ? json(nullptr) : json(eval::ome(p, t));
  try {
    metrics["r_squared"] = eval::r_squared(p, t);
  } catch (const ValidationError&) {
    metrics["r_squared"] = nullptr;
  }
  run.write("metrics.json", metrics.dump(2) + "\n");
}

// Records of one monomer that share the two conditions other than `v`.
using GroupKey = std::tuple<std::string, double, double>;

std::map<GroupKey, std::vector<const data::PolymerSample*>> group_series(const data::Dataset& ds,
                                                                         eval::Variable v) {
  std::vector<eval::Variable> others;
  for (auto o : {eval::Variable::Mw, eval::Variable::Shear, eval::Variable::Temp}) {
    if (o != v) others.push_back(o);
  }
  std::map<GroupKey, std::vector<const data::PolymerSample*>> groups;
  for (const auto& s : ds) {
    groups[{s.monomer(), eval::variable_value(s, others[0]), eval::variable_value(s, others[1])}].push_back(&s);
  }
  return groups;
}

void cmd_fit_params(Run& run, const Flags& f) {
  const auto ds = load(run, f.dataset);
  const auto variable = eval::parse_variable(f.law);
  const auto law = eval::law_for(variable);
  run.settings = {{"law", f.law}};
  const auto names = fit::param_names(law);
  std::ostringstream s;
  s << "monomer,fixed_1,fixed_2,n_points";
  for (const auto& n : names) s << ',' << n;
  s << ",residual_rms,converged,status\n";
  std::size_t idx = 0;
  for (const auto& [key, members] : group_series(ds, variable)) {
    const auto& [monomer, a, b] = key;
    std::map<double, std::pair<double, int>> by_x;
    for (const auto* r : members) {
      auto& acc = by_x[eval::sweep_x(variable, eval::variable_value(*r, variable))];
      acc.first += r->log10_eta;
      acc.second += 1;
    }
    std::vector<fit::FitPoint> pts;
    for (const auto& [x, acc] : by_x) pts.push_back({x, acc.first / acc.second});
    s << fmt::format("{},{},{},{}", monomer, a, b, pts.size());
    if (pts.size() < fit::kMinFitPoints) {
      for (std::size_t k = 0; k < names.size(); ++k) s << ',';
      s << ",,,too few points\n";
      continue;
    }
    fit::FitOptions o;
    o.seed = derive_seed(run.seed, idx++);
    try {
      const auto r = fit::fit(fit::make_problem(law, pts), o);
      for (double v : r.params) s << fmt::format(",{}", v);
      s << fmt::format(",{},{},ok\n", r.residual_rms, r.converged ? 1 : 0);
    } catch (const Error& e) {
      for (std::size_t k = 0; k < names.size(); ++k) s << ',';
      s << ",,," << e.what() << '\n';
    }
  }
  run.write("params.csv", s.str());
}

void cmd_extrapolate(Run& run, const Flags& f) {
  const auto m = load_predictor(run, f.model);
  const auto ds = load(run, f.dataset);
  const auto variable = eval::parse_variable(f.variable);
  const auto law = eval::law_for(variable);
  run.settings = {{"variable", f.variable}, {"points", f.points}};
  // One sweep per monomer, based on its largest series.
  std::map<std::string, std::vector<const data::PolymerSample*>> best;
  for (const auto& [key, members] : group_series(ds, variable)) {
    auto& b = best[std::get<0>(key)];
    if (members.size() > b.size()) b = members;
  }
  std::vector<eval::Curve> curves;
  std::ostringstream s;
  const auto names = fit::param_names(law);
  s << "record_id,monomer";
  for (const auto& n : names) s << ',' << n;
  s << ",residual_rms,status\n";
  for (const auto& monomer : data::monomers(ds)) {
    const auto& base = *best.at(monomer).front();
    auto curve = eval::sweep_predict(m, base, eval::make_sweep(variable, base, f.points));
    s << curve.record_id << ',' << curve.monomer;
    try {
      const auto r = eval::estimate_params_from_sweep(curve, law);
      for (double v : r.params) s << fmt::format(",{}", v);
      s << fmt::format(",{},ok\n", r.residual_rms);
    } catch (const Error& e) {
      for (std::size_t k = 0; k < names.size(); ++k) s << ',';
      s << ',' << ',' << e.what() << '\n';
    }
    curves.push_back(std::move(curve));
  }
  std::ostringstream c;
  eval::write_curves_csv(c, curves);
  run.write("curves.csv", c.str());
  run.write("sweep_params.csv", s.str());
}

eval::Truth load_truth(Run& run, const std::string& path) {
  run.input("truth", path);
  const auto j = io::read_json(path);
  eval::Truth truth;
  if (!j.is_array()) throw ValidationError("truth file must hold an array of chemistries");
  try {
    for (const auto& c : j) truth.params[c.at("monomer").get<std::string>()] = io::params_from_json(c.at("params"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed truth file: ") + e.what());
  }
  truth.log10_eta = [params = truth.params](const data::PolymerSample& s) -> std::optional<double> {
    const auto it = params.find(s.monomer());
    if (it == params.end()) return std::nullopt;
    return synthetic::true_log_eta(it->second, s.mw, s.temp, s.shear);
  };
  return truth;
}

void cmd_evaluate(Run& run, const Flags& f) {
  const auto m = load_predictor(run, f.model);
  const auto ds = load(run, f.dataset);
  const auto variable = eval::parse_variable(f.variable);
  eval::EvaluateOptions o;
  o.thresholds.theta_acc = f.theta_acc;
  o.kl_bins = f.bins;
  o.sweep_points = f.points;
  o.seed = run.seed;
  run.settings = {{"variable", f.variable}, {"bins", f.bins}, {"theta_acc", f.theta_acc}, {"points", f.points}};
  std::optional<eval::Truth> truth;
  if (!f.truth.empty()) truth = load_truth(run, f.truth);
  const auto r = eval::evaluate(m, ds, variable, o, truth ? &*truth : nullptr);
  spdlog::info("evaluate: {} success, {} wrong trend, {} fail", r.tallies.success, r.tallies.wrong_trend,
               r.tallies.fail);
  run.write("report.json", eval::to_json(r).dump(2) + "\n");
}

void cmd_report(Run& run, const Flags& f) {
  run.input("report", f.report);
  const auto r = eval::report_from_json(io::read_json(f.report));
  std::ostringstream c;
  eval::write_curves_csv(c, r.curves);
  run.write("curves.csv", c.str());
  std::ostringstream t;
  t << "record_id,monomer,n_held_out,held_out_ome,outcome,gaps\n";
  for (const auto& s : r.sweeps) {
    t << fmt::format("{},{},{},{},{},{}\n", s.record_id, s.monomer, s.n_held_out, s.held_out_ome,
                     eval::to_string(s.outcome), s.gaps);
  }
  run.write("outcomes.csv", t.str());
  std::ostringstream p;
  p << "param,n_truth,n_model,kl\n";
  for (const auto& d : r.params) {
    p << fmt::format("{},{},{},{}\n", d.name, d.truth.size(), d.model.size(), fmt_opt(d.kl));
  }
  run.write("params.csv", p.str());
  std::ostringstream s;
  s << "model_kind,variable,n_test,ome,success,wrong_trend,fail,success_rate\n";
  s << fmt::format("{},{},{},{},{},{},{},{}\n", r.model_kind, eval::to_string(r.variable), r.n_test, r.ome,
                   r.tallies.success, r.tallies.wrong_trend, r.tallies.fail, r.tallies.success_rate());
  run.write("summary.csv", s.str());
}

// ---------------------------------------------------------------------------
// Config files: keys are flag names without the leading dashes. They are
// spliced in ahead of the command line so explicit flags win.

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::vector<std::string> splice_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  json cfg;
  try {
    cfg = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw ValidationError("--config: " + std::string(e.what()));
  }
  if (!cfg.is_object()) throw ValidationError("--config: expected a JSON object");
  std::vector<std::string> out{args[0], args[1]};
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    const std::string flag = "--" + name;
    if (flag == "--config" || flag_given(args, flag)) continue;
    out.push_back(flag);
    out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

void set_log_level() {
  auto logger = spdlog::stderr_color_st("rheo");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("RHEO_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"Melt viscosity modelling pipeline"};
  app.require_subcommand(1);
  Flags f;
  using Handler = void (*)(Run&, const Flags&);
  std::map<CLI::App*, Handler> handlers;

  const std::vector<std::string> kinds{"penn", "ann", "gpr"};
  const std::vector<std::string> variables{"mw", "shear", "temp"};
  auto add = [&](const std::string& name, const std::string& desc, Handler h) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", f.config, "JSON file of flag values; explicit flags win");
    sub->add_option("--seed", f.seed, "Seed for every random choice")->required();
    sub->add_option("--out", f.out, "Output directory")->required();
    handlers[sub] = h;
    return sub;
  };

  auto* synth = add("synth", "Generate a labelled synthetic dataset", cmd_synth);
  synth->add_option("--n-chem", f.n_chem, "Chemistries")->check(CLI::PositiveNumber);
  synth->add_option("--pts", f.pts, "Points per chemistry")->check(CLI::PositiveNumber);
  synth->add_option("--noise-sigma", f.noise_sigma, "Gaussian noise, log10 units")->check(CLI::NonNegativeNumber);
  synth->add_option("--fp-width", f.fp_width, "Fingerprint width")->check(CLI::PositiveNumber);

  auto* ingest = add("ingest", "Validate a dataset CSV and impute missing PDI", cmd_ingest);
  ingest->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);

  auto* split = add("split", "Physical-variable train/test split", cmd_split);
  split->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);
  split->add_option("--variable", f.variable)->check(CLI::IsMember(variables));

  auto* train = add("train", "Train a PENN, ANN or GPR model", cmd_train);
  train->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);
  train->add_option("--kind", f.kind)->check(CLI::IsMember(kinds));
  train->add_option("--w-alpha", f.w_alpha, "Alpha penalty weight (PENN)");
  train->add_option("--lr", f.lr, "Initial learning rate");
  train->add_option("--dropout", f.dropout, "Dropout of both hidden layers");
  train->add_option("--weight-decay", f.weight_decay);
  train->add_option("--layer-size", f.layer_size, "Width of both hidden layers")->check(CLI::PositiveNumber);
  train->add_option("--max-epochs", f.max_epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch-size", f.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--folds", f.folds, "Cross-validation folds for the search")->check(CLI::Range(2, 100));
  train->add_option("--trials", f.trials, "Hyperparameter candidates; 0 trains the defaults");

  auto* predict = add("predict", "Predict viscosity for every record", cmd_predict);
  predict->add_option("--model", f.model)->required()->check(CLI::ExistingFile);
  predict->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);

  auto* fitp = add("fit-params", "Fit an empirical law to each measured series", cmd_fit_params);
  fitp->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);
  fitp->add_option("--law", f.law)->check(CLI::IsMember(variables));

  auto* extrap = add("extrapolate", "Sweep one variable per monomer", cmd_extrapolate);
  extrap->add_option("--model", f.model)->required()->check(CLI::ExistingFile);
  extrap->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);
  extrap->add_option("--variable", f.variable)->check(CLI::IsMember(variables));
  extrap->add_option("--points", f.points, "Sweep points")->check(CLI::PositiveNumber);

  auto* evaluate = add("evaluate", "Score a model on a split's test records", cmd_evaluate);
  evaluate->add_option("--model", f.model)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dataset", f.dataset)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--variable", f.variable)->check(CLI::IsMember(variables));
  evaluate->add_option("--truth", f.truth, "Ground-truth parameters from synth")->check(CLI::ExistingFile);
  evaluate->add_option("--bins", f.bins, "KL histogram bins")->check(CLI::PositiveNumber);
  evaluate->add_option("--theta-acc", f.theta_acc, "Held-out OME threshold")->check(CLI::PositiveNumber);
  evaluate->add_option("--points", f.points, "Sweep points")->check(CLI::PositiveNumber);

  auto* report = add("report", "Tabulate an evaluation report", cmd_report);
  report->add_option("--report", f.report)->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = splice_config(args);
    // CLI11 consumes arguments in reverse order.
    std::reverse(args.begin() + 1, args.end());
    args.erase(args.begin());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }

  for (const auto& [sub, handler] : handlers) {
    if (!sub->parsed()) continue;
    Run run;
    run.command = sub->get_name();
    run.seed = f.seed;
    run.out = f.out;
    try {
      handler(run, f);
      run.write_manifest();
    } catch (const ValidationError& e) {
      std::cerr << run.command << ": " << e.what() << '\n';
      return 1;
    } catch (const ComputeError& e) {
      std::cerr << run.command << ": " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << run.command << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 0;
}
