#include "rheo/serialization.hpp"

#include <fmt/format.h>

#include <fstream>

#include "rheo/errors.hpp"

namespace rheo::io {

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != flat.size()) {
    throw ValidationError(fmt::format("matrix of {}x{} carries {} values", rows, cols, flat.size()));
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++];
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json minmax_json(const data::MinMax& m) { return {m.min, m.max}; }

data::MinMax minmax_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("min-max pair expected");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string_view activation_name(nn::Activation a) {
  return a == nn::Activation::Tanh ? "tanh" : "identity";
}

nn::Activation activation_from(const std::string& s) {
  if (s == "tanh") return nn::Activation::Tanh;
  if (s == "identity") return nn::Activation::Identity;
  throw ValidationError(fmt::format("unknown activation '{}'", s));
}

json log_json(const nn::TrainingLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"lr", e.lr}});
  }
  return {{"best_epoch", log.best_epoch}, {"best_val_loss", log.best_val_loss}, {"epochs", epochs}};
}

nn::TrainingLog log_from(const json& j) {
  nn::TrainingLog log;
  log.best_epoch = j.at("best_epoch").get<std::size_t>();
  log.best_val_loss = j.at("best_val_loss").get<double>();
  for (const auto& e : j.at("epochs")) {
    log.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                          e.at("val_loss").get<double>(), e.at("lr").get<double>()});
  }
  return log;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed {}: {}", what, e.what()));
  }
}

}  // namespace

json to_json(const data::ScalingSpec& s) {
  json fp = json::array();
  for (const auto& m : s.fingerprint) fp.push_back(minmax_json(m));
  return {{"fingerprint", fp},
          {"pdi", minmax_json(s.pdi)},
          {"temp", minmax_json(s.temp)},
          {"log_eta", minmax_json(s.log_eta)}};
}

data::ScalingSpec scaling_from_json(const json& j) {
  return guarded("scaling", [&] {
    data::ScalingSpec s;
    for (const auto& m : j.at("fingerprint")) s.fingerprint.push_back(minmax_from(m));
    s.pdi = minmax_from(j.at("pdi"));
    s.temp = minmax_from(j.at("temp"));
    s.log_eta = minmax_from(j.at("log_eta"));
    return s;
  });
}

json to_json(const nn::MlpConfig& c) {
  return {{"layer1_size", c.layer1_size},   {"layer1_dropout", c.layer1_dropout},
          {"layer2_size", c.layer2_size},   {"layer2_dropout", c.layer2_dropout},
          {"weight_decay", c.weight_decay}, {"w_alpha", c.w_alpha},
          {"initial_lr", c.initial_lr},     {"seed", c.seed},
          {"batch_size", c.batch_size},     {"max_epochs", c.max_epochs},
          {"lr_patience", c.lr_patience},   {"lr_factor", c.lr_factor},
          {"stop_patience", c.stop_patience}};
}

nn::MlpConfig config_from_json(const json& j) {
  return guarded("network config", [&] {
    // Missing fields keep their defaults so hand-written config files can be
    // partial.
    nn::MlpConfig c;
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("layer1_size", c.layer1_size);
    read("layer1_dropout", c.layer1_dropout);
    read("layer2_size", c.layer2_size);
    read("layer2_dropout", c.layer2_dropout);
    read("weight_decay", c.weight_decay);
    read("w_alpha", c.w_alpha);
    read("initial_lr", c.initial_lr);
    read("seed", c.seed);
    read("batch_size", c.batch_size);
    read("max_epochs", c.max_epochs);
    read("lr_patience", c.lr_patience);
    read("lr_factor", c.lr_factor);
    read("stop_patience", c.stop_patience);
    return c;
  });
}

json to_json(const physics::EmpiricalParams& p) {
  return {{"log_k1", p.log_k1}, {"alpha1", p.alpha1},   {"alpha2", p.alpha2},
          {"log_mcr", p.log_mcr}, {"beta_mw", p.beta_mw}, {"c1", p.c1},
          {"c2", p.c2},         {"t_ref", p.t_ref},     {"n", p.n},
          {"log_gcr", p.log_gcr}, {"beta_g", p.beta_g}};
}

physics::EmpiricalParams params_from_json(const json& j) {
  return guarded("parameters", [&] {
    physics::EmpiricalParams p;
    p.log_k1 = j.at("log_k1").get<double>();
    p.alpha1 = j.at("alpha1").get<double>();
    p.alpha2 = j.at("alpha2").get<double>();
    p.log_mcr = j.at("log_mcr").get<double>();
    p.beta_mw = j.at("beta_mw").get<double>();
    p.c1 = j.at("c1").get<double>();
    p.c2 = j.at("c2").get<double>();
    p.t_ref = j.at("t_ref").get<double>();
    p.n = j.at("n").get<double>();
    p.log_gcr = j.at("log_gcr").get<double>();
    p.beta_g = j.at("beta_g").get<double>();
    return p;
  });
}

json to_json(const nn::TrainedModel& m) {
  json layers = json::array();
  for (const auto& l : m.net.layers) {
    layers.push_back({{"weights", matrix_json(l.w)}, {"bias", vector_json(l.b)}});
  }
  return {{"format", kFormatVersion},
          {"kind", std::string(nn::to_string(m.kind))},
          {"seed", m.config.seed},
          {"config", to_json(m.config)},
          {"layer_dims",
           {m.net.input_width(), m.net.layers[0].w.rows(), m.net.layers[1].w.rows(),
            m.net.output_width()}},
          {"activation", std::string(activation_name(m.net.activation))},
          {"dropout", {m.net.dropout1, m.net.dropout2}},
          {"layers", layers},
          {"scaling", to_json(m.scaling)},
          {"training_log", log_json(m.log)}};
}

json to_json(const model::TrainedGpr& m) {
  return {{"format", kFormatVersion},
          {"kind", "gpr"},
          {"seed", m.seed},
          {"hyperparams",
           {{"alpha", m.model.hp.alpha},
            {"length_scale", m.model.hp.length_scale},
            {"constant_value", m.model.hp.constant_value}}},
          {"x", matrix_json(m.model.x)},
          {"y", vector_json(m.model.y)},
          {"dual", vector_json(m.model.dual)},
          {"scaling", to_json(m.scaling)}};
}

nn::TrainedModel network_from_json(const json& j) {
  return guarded("network model", [&] {
    nn::TrainedModel m;
    m.kind = nn::parse_net_kind(j.at("kind").get<std::string>());
    m.config = config_from_json(j.at("config"));
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.net.activation = activation_from(j.at("activation").get<std::string>());
    m.net.dropout1 = j.at("dropout").at(0).get<double>();
    m.net.dropout2 = j.at("dropout").at(1).get<double>();
    const auto& layers = j.at("layers");
    if (layers.size() != m.net.layers.size()) {
      throw ValidationError(fmt::format("expected 3 layers, found {}", layers.size()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      m.net.layers[i].w = matrix_from(layers[i].at("weights"));
      m.net.layers[i].b = vector_from(layers[i].at("bias"));
    }
    try {
      nn::check_shapes(m.net);
    } catch (const DimensionMismatch& e) {
      throw ValidationError(e.what());
    }
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    if (dims != std::vector<std::size_t>{m.net.input_width(),
                                         static_cast<std::size_t>(m.net.layers[0].w.rows()),
                                         static_cast<std::size_t>(m.net.layers[1].w.rows()),
                                         m.net.output_width()}) {
      throw ValidationError("layer_dims disagree with the stored weights");
    }
    const std::size_t out = m.kind == nn::NetKind::PENN ? physics::kNumLearned : 1;
    if (m.net.output_width() != out) {
      throw ValidationError(fmt::format("{} model with output width {}", nn::to_string(m.kind),
                                        m.net.output_width()));
    }
    m.scaling = scaling_from_json(j.at("scaling"));
    const std::size_t in = m.scaling.fingerprint.size() + 1 +
                           (m.kind == nn::NetKind::ANN ? physics::kNumConditions : 0);
    if (m.net.input_width() != in) {
      throw ValidationError("input width disagrees with the stored scaling");
    }
    m.log = log_from(j.at("training_log"));
    return m;
  });
}

model::TrainedGpr gpr_from_json(const json& j) {
  return guarded("GPR model", [&] {
    model::TrainedGpr m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& hp = j.at("hyperparams");
    m.model.hp = {hp.at("alpha").get<double>(), hp.at("length_scale").get<double>(),
                  hp.at("constant_value").get<double>()};
    m.scaling = scaling_from_json(j.at("scaling"));
    const auto x = matrix_from(j.at("x"));
    const auto y = vector_from(j.at("y"));
    // Refactor rather than trust a stored factor; the stored dual weights
    // are kept so predictions match the saved model exactly.
    m.model = gpr::gpr_fit(x, y, m.model.hp);
    m.model.dual = vector_from(j.at("dual"));
    if (m.model.dual.size() != x.rows()) throw ValidationError("dual weights disagree with inputs");
    return m;
  });
}

model::Predictor predictor_from_json(const json& j) {
  const auto kind = guarded("model", [&] { return j.at("kind").get<std::string>(); });
  if (model::parse_model_kind(kind) == model::ModelKind::GPR) {
    return model::Predictor(gpr_from_json(j));
  }
  return model::Predictor(network_from_json(j));
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
  if (!out) throw ComputeError(fmt::format("failed writing '{}'", path.string()));
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

model::Predictor load_model(const std::filesystem::path& path) {
  return predictor_from_json(read_json(path));
}

}  // namespace rheo::io
