#include <set>

#include "lggd/error.hpp"
#include "lggd/io.hpp"
#include "lggd/serialize.hpp"

namespace lggd {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "lggd-checkpoint";
constexpr int kVersion = 1;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string(what) + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw Error(ErrorCode::ParseError, std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const json& j) {
  check_keys(j, {"rows", "cols", "data"}, "matrix");
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw Error(ErrorCode::ParseError, "matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::ParseError, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Norm norm_from_string(const std::string& s) {
  if (s == "l1" || s == "1") return Norm::L1;
  if (s == "linf" || s == "inf") return Norm::Linf;
  throw Error(ErrorCode::UnsupportedNorm, "unsupported norm '" + s + "'");
}

std::string norm_to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "linf"; }

BoundaryLossKind loss_kind_from_string(const std::string& s) {
  if (s == "cross_entropy") return BoundaryLossKind::CrossEntropy;
  if (s == "squared_self_distance") return BoundaryLossKind::SquaredSelfDistance;
  throw Error(ErrorCode::InvalidConfig, "unknown loss '" + s + "'");
}

std::string loss_kind_to_string(BoundaryLossKind kind) {
  return kind == BoundaryLossKind::CrossEntropy ? "cross_entropy" : "squared_self_distance";
}

json to_json_value(const SolverConfig& cfg) {
  return {{"norm", norm_to_string(cfg.norm)},
          {"step_size", cfg.step_size},
          {"snapshot_times", cfg.snapshot_times},
          {"clamp_boundary", cfg.clamp_boundary},
          {"steady_tol", cfg.steady_tol},
          {"max_sweeps", cfg.max_sweeps},
          {"workers", cfg.workers}};
}

SolverConfig solver_config_from_json(const json& j) {
  check_keys(j, {"norm", "step_size", "snapshot_times", "clamp_boundary", "steady_tol", "max_sweeps", "workers"},
             "solver");
  SolverConfig cfg;
  if (j.contains("norm")) cfg.norm = norm_from_string(j["norm"].get<std::string>());
  cfg.step_size = get_or(j, "step_size", cfg.step_size);
  cfg.snapshot_times = get_or(j, "snapshot_times", cfg.snapshot_times);
  cfg.clamp_boundary = get_or(j, "clamp_boundary", cfg.clamp_boundary);
  cfg.steady_tol = get_or(j, "steady_tol", cfg.steady_tol);
  cfg.max_sweeps = get_or(j, "max_sweeps", cfg.max_sweeps);
  cfg.workers = get_or(j, "workers", cfg.workers);
  return cfg;
}

json to_json_value(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"dropout", cfg.dropout},
          {"hidden", cfg.hidden},
          {"learn_rho", cfg.learn_rho},
          {"loss", loss_kind_to_string(cfg.loss)},
          {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j, {"epochs", "learning_rate", "weight_decay", "dropout", "hidden", "learn_rho", "loss", "seed"},
             "train");
  TrainConfig cfg;
  cfg.epochs = get_or(j, "epochs", cfg.epochs);
  cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
  cfg.weight_decay = get_or(j, "weight_decay", cfg.weight_decay);
  cfg.dropout = get_or(j, "dropout", cfg.dropout);
  cfg.hidden = get_or(j, "hidden", cfg.hidden);
  cfg.learn_rho = get_or(j, "learn_rho", cfg.learn_rho);
  if (j.contains("loss")) cfg.loss = loss_kind_from_string(j["loss"].get<std::string>());
  cfg.seed = get_or(j, "seed", cfg.seed);
  return cfg;
}

json to_json_value(const PotentialParams& pot) {
  json j{{"mode", pot.mode == PotentialParams::Mode::FixedAlpha ? "fixed_alpha" : "learned"}, {"alpha", pot.alpha}};
  if (pot.mode == PotentialParams::Mode::Learned) j["log_rho"] = pot.log_rho;
  return j;
}

PotentialParams potential_from_json(const json& j) {
  check_keys(j, {"mode", "alpha", "log_rho"}, "potential");
  PotentialParams pot;
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "fixed_alpha") {
    pot.mode = PotentialParams::Mode::FixedAlpha;
  } else if (mode == "learned") {
    pot.mode = PotentialParams::Mode::Learned;
    pot.log_rho = j.at("log_rho").get<std::vector<double>>();
  } else {
    throw Error(ErrorCode::ParseError, "unknown potential mode '" + mode + "'");
  }
  pot.alpha = get_or(j, "alpha", 0.0);
  return pot;
}

json to_json_value(const MlpParams& mlp) {
  json layers = json::array();
  for (const auto& layer : mlp.layers) {
    layers.push_back({{"weight", matrix_to_json(layer.weight)}, {"bias", matrix_to_json(layer.bias)}});
  }
  return {{"layers", std::move(layers)}};
}

MlpParams mlp_from_json(const json& j) {
  check_keys(j, {"layers"}, "mlp");
  MlpParams mlp;
  for (const auto& lj : j.at("layers")) {
    check_keys(lj, {"weight", "bias"}, "mlp layer");
    mlp.layers.push_back({matrix_from_json(lj.at("weight")), matrix_from_json(lj.at("bias"))});
  }
  mlp.validate();
  return mlp;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j{{"format", kFormat},
         {"version", kVersion},
         {"seed", ckpt.seed},
         {"solver", to_json_value(ckpt.solver)},
         {"train", to_json_value(ckpt.train)},
         {"potential", to_json_value(ckpt.potential)},
         {"mlp", to_json_value(ckpt.mlp)}};
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  try {
    check_keys(j, {"format", "version", "seed", "solver", "train", "potential", "mlp"}, "checkpoint");
    if (j.at("format").get<std::string>() != kFormat) throw Error(ErrorCode::ParseError, "not a checkpoint file");
    if (j.at("version").get<int>() != kVersion) throw Error(ErrorCode::ParseError, "unsupported checkpoint version");
    Checkpoint ckpt;
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.solver = solver_config_from_json(j.at("solver"));
    ckpt.train = train_config_from_json(j.at("train"));
    ckpt.potential = potential_from_json(j.at("potential"));
    ckpt.mlp = mlp_from_json(j.at("mlp"));
    return ckpt;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(io::read_file(path)); }

}  // namespace lggd
