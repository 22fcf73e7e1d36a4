#include "lggd/cli/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lggd/backbone.hpp"
#include "lggd/cli/experiments.hpp"
#include "lggd/cli/render.hpp"
#include "lggd/data.hpp"
#include "lggd/error.hpp"
#include "lggd/features.hpp"
#include "lggd/io.hpp"
#include "lggd/learn.hpp"
#include "lggd/random.hpp"
#include "lggd/serialize.hpp"

namespace lggd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

std::string dashed(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("config values must be scalars or arrays of scalars");
}

/// Options of one subcommand, keyed by their config-file name (the long flag
/// with dashes replaced by underscores).
class OptionTable {
 public:
  explicit OptionTable(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& key, T& ref, const std::string& desc) {
    CLI::Option* opt = app_->add_option("--" + dashed(key), ref, desc)->capture_default_str();
    if constexpr (is_vector<T>::value) opt->delimiter(',');
    entries_.push_back({key, opt, [&ref] { return json(ref); }});
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& ref, const std::string& desc) {
    CLI::Option* opt = app_->add_flag("--" + dashed(key) + ",!--no-" + dashed(key), ref, desc);
    entries_.push_back({key, opt, [&ref] { return json(ref); }});
    return opt;
  }

  bool given(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.key == key) return e.opt->count() > 0;
    }
    return false;
  }

  /// Fills options not set on the command line from a flat JSON object.
  void apply(const json& cfg) {
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (key == "subcommand") {
        if (!value.is_string() || value.get<std::string>() != app_->get_name()) {
          throw ConfigError("config is for subcommand '" + value.dump() + "', not '" + app_->get_name() + "'");
        }
        continue;
      }
      const Entry* entry = nullptr;
      for (const auto& e : entries_) {
        if (e.key == key) entry = &e;
      }
      if (entry == nullptr) throw ConfigError("unknown config key '" + key + "'");
      if (entry->opt->count() > 0) continue;
      try {
        if (value.is_array()) {
          for (const auto& v : value) entry->opt->add_result(scalar_text(v));
        } else {
          entry->opt->add_result(scalar_text(value));
        }
        entry->opt->run_callback();
      } catch (const CLI::Error& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
  }

  void require(const std::string& key) { required_.push_back(key); }

  /// Required options may come from either the command line or the config.
  void check_required() const {
    for (const auto& key : required_) {
      for (const auto& e : entries_) {
        if (e.key == key && e.get() == json("")) throw ConfigError("--" + dashed(key) + " is required");
      }
    }
  }

  json resolved() const {
    json j{{"subcommand", app_->get_name()}};
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<json()> get;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
  std::vector<std::string> required_;
};

struct SolverOptions {
  std::string norm = "l1";
  double step_size = 0.1;
  std::vector<double> snapshot_times{1, 2, 3, 4, 5};
  double steady_tol = 1e-8;
  std::size_t max_sweeps = 0;
  unsigned workers = 1;
  double alpha = -0.5;

  void add_to(OptionTable& t) {
    t.add("norm", norm, "Gradient norm: l1 or linf");
    t.add("step_size", step_size, "RK4 step size");
    t.add("snapshot_times", snapshot_times, "Comma-separated snapshot times");
    t.add("steady_tol", steady_tol, "Steady solver tolerance");
    t.add("max_sweeps", max_sweeps, "Steady solver sweep limit (0 = 10n)");
    t.add("workers", workers, "Worker threads for per-class integration");
    t.add("alpha", alpha, "Potential exponent: rho = degree^alpha");
  }

  SolverConfig config(bool clamp) const {
    SolverConfig cfg;
    cfg.norm = norm_from_string(norm);
    cfg.step_size = step_size;
    cfg.snapshot_times = snapshot_times;
    cfg.clamp_boundary = clamp;
    cfg.steady_tol = steady_tol;
    cfg.max_sweeps = max_sweeps;
    cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

struct GcnOptions {
  std::string model = "gcn";
  GcnConfig gcn;
  std::size_t logistic_epochs = 500;

  void add_to(OptionTable& t, bool with_model) {
    if (with_model) {
      t.add("model", model, "Backbone: gcn or logistic")->check(CLI::IsMember({"gcn", "logistic"}));
      t.add("logistic_epochs", logistic_epochs, "Epochs for the logistic baseline");
    }
    t.add("hidden", gcn.hidden, "GCN hidden width");
    t.add("dropout", gcn.dropout, "GCN dropout rate");
    t.add("learning_rate", gcn.learning_rate, "Adam learning rate");
    t.add("weight_decay", gcn.weight_decay, "Adam weight decay");
    t.add("max_epochs", gcn.max_epochs, "Maximum training epochs");
    t.add("patience", gcn.patience, "Early-stopping patience in epochs");
    t.add("seed", gcn.seed, "Random seed");
  }
};

struct Inputs {
  std::string graph;
  std::string labels;
  std::string features;
  std::string split;
  std::string checkpoint;
  std::size_t num_classes = 0;
};

struct GraphAndLabels {
  Graph graph;
  std::vector<int> labels;
  std::size_t num_classes = 0;
};

std::size_t infer_classes(const std::vector<int>& labels, std::size_t given) {
  if (given > 0) return given;
  int mx = -1;
  for (int y : labels) mx = std::max(mx, y);
  return static_cast<std::size_t>(mx + 1);
}

GraphAndLabels load_graph_labels(const Inputs& in) {
  for (const auto& p : {in.graph, in.labels}) {
    if (!fs::exists(p)) throw Error(ErrorCode::FileMissing, p);
  }
  GraphAndLabels out;
  out.graph = io::read_graph(in.graph);
  out.labels = io::parse_labels(io::read_file(in.labels));
  if (out.labels.size() != out.graph.num_nodes()) {
    throw Error(ErrorCode::NodeCountMismatch, "labels have " + std::to_string(out.labels.size()) + " entries for " +
                                                  std::to_string(out.graph.num_nodes()) + " nodes");
  }
  out.num_classes = infer_classes(out.labels, in.num_classes);
  for (int y : out.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= out.num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
    }
  }
  return out;
}

LabeledDataset load_inputs(const Inputs& in) {
  std::optional<std::size_t> k;
  if (in.num_classes > 0) k = in.num_classes;
  return load_dataset(in.graph, in.features, in.labels, k);
}

SplitSpec load_split(const std::string& path, std::size_t n) {
  auto split = split_from_json(io::read_file(path));
  split.validate(n);
  return split;
}

void write_features(const fs::path& dir, const FeatureMatrix& fm, std::ostream& err) {
  io::write_file_atomic(dir / "features.csv", format_feature_csv(fm));
  io::write_file_atomic(dir / "features.json", format_feature_sidecar(fm));
  for (std::size_t k = 0; k < fm.unreachable.size(); ++k) {
    if (!fm.unreachable[k].empty()) {
      err << "warning: " << fm.unreachable[k].size() << " nodes cannot reach a class-" << k
          << " boundary node; their class-" << k << " features are capped\n";
    }
  }
}

void add_input(OptionTable& t, const std::string& key, std::string& ref, const std::string& desc) {
  t.add(key, ref, desc);
  t.require(key);
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnsupportedNorm:
    case ErrorCode::NonpositiveStep:
    case ErrorCode::FractionSum:
    case ErrorCode::InvalidProbability:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized geodesic distance features for graphs", "lggd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config_path;
  std::string out_dir = ".";
  Inputs in;
  SolverOptions solver;
  TrainConfig train;
  std::string loss = "cross_entropy";
  GcnOptions gcn;
  bool zscore = false;
  std::string variant;
  RobustnessConfig robust;
  struct RenderOptions {
    std::string positions;
    std::string field;
    std::size_t column = 0;
    double radius = 0.01;
    std::size_t n = 2000;
    double eps = 0.12;
    std::size_t corrupt = 0;
    std::string method = "p1";
    std::uint64_t seed = 0;
  } render;

  std::vector<std::pair<CLI::App*, OptionTable>> tables;
  auto subcommand = [&](const std::string& name, const std::string& desc) -> OptionTable& {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "Flat JSON file of option values (CLI flags take precedence)");
    tables.emplace_back(sub, OptionTable(sub));
    auto& t = tables.back().second;
    t.add("out_dir", out_dir, "Output directory");
    return t;
  };
  tables.reserve(7);

  {
    auto& t = subcommand("ggd", "Distance features from the default initial condition");
    add_input(t, "graph", in.graph, "Graph edge-list file");
    add_input(t, "labels", in.labels, "Label file, one integer per line");
    add_input(t, "split", in.split, "Split JSON; the train set is the boundary");
    t.add("num_classes", in.num_classes, "Class count (0 = max label + 1)");
    solver.add_to(t);
  }
  {
    auto& t = subcommand("train", "Learn the initial-condition network (and optionally rho)");
    add_input(t, "graph", in.graph, "Graph edge-list file");
    add_input(t, "labels", in.labels, "Label file");
    add_input(t, "features", in.features, "Node feature CSV");
    add_input(t, "split", in.split, "Split JSON");
    t.add("num_classes", in.num_classes, "Class count (0 = max label + 1)");
    solver.add_to(t);
    t.add("epochs", train.epochs, "Training epochs");
    t.add("learning_rate", train.learning_rate, "Adam learning rate");
    t.add("weight_decay", train.weight_decay, "Decoupled weight decay on network weights");
    t.add("dropout", train.dropout, "Hidden-unit dropout rate");
    t.add("hidden", train.hidden, "Comma-separated hidden widths");
    t.flag("learn_rho", train.learn_rho, "Also learn a per-node potential");
    t.add("loss", loss, "cross_entropy or squared_self_distance");
    t.add("seed", train.seed, "Random seed");
  }
  {
    auto& t = subcommand("lggd", "Learned distance features from a checkpoint");
    add_input(t, "graph", in.graph, "Graph edge-list file");
    add_input(t, "labels", in.labels, "Label file");
    add_input(t, "features", in.features, "Node feature CSV");
    add_input(t, "split", in.split, "Split JSON");
    add_input(t, "checkpoint", in.checkpoint, "Checkpoint written by `train`");
    t.add("num_classes", in.num_classes, "Class count (0 = max label + 1)");
    t.add("workers", solver.workers, "Worker threads for per-class integration");
  }
  {
    auto& t = subcommand("classify", "Train a backbone on a feature matrix and report accuracy");
    add_input(t, "graph", in.graph, "Graph edge-list file");
    add_input(t, "labels", in.labels, "Label file");
    add_input(t, "features", in.features, "Feature CSV (raw or generated)");
    add_input(t, "split", in.split, "Split JSON");
    t.add("num_classes", in.num_classes, "Class count (0 = max label + 1)");
    gcn.add_to(t, true);
    t.flag("zscore", zscore, "Standardize feature columns before training");
    t.add("feature_variant", variant, "Free-form tag copied into the metrics");
  }
  {
    auto& t = subcommand("dynamic", "Frozen backbone evaluated as new-label tranches join the boundary");
    add_input(t, "graph", in.graph, "Graph edge-list file");
    add_input(t, "labels", in.labels, "Label file");
    add_input(t, "features", in.features, "Node feature CSV");
    add_input(t, "split", in.split, "Split JSON with new_labels tranches");
    add_input(t, "checkpoint", in.checkpoint, "Checkpoint written by `train`");
    t.add("num_classes", in.num_classes, "Class count (0 = max label + 1)");
    t.add("workers", solver.workers, "Worker threads for per-class integration");
    gcn.add_to(t, false);
  }
  {
    auto& t = subcommand("robustness", "Distance-map distortion under random edge corruption");
    t.add("n", robust.n, "Points in the unit disk");
    t.add("eps", robust.eps, "Connection radius");
    t.add("corrupt", robust.corrupt, "Comma-separated corrupted-edge counts");
    t.add("seeds", robust.seeds, "Number of random graphs");
    t.add("seed", robust.seed, "Base random seed");
  }
  {
    auto& t = subcommand("render", "SVG point map of a distance field");
    t.add("positions", render.positions, "CSV of x,y rows (omit to render a generated unit-ball map)");
    t.add("field", render.field, "CSV of node values");
    t.add("column", render.column, "Column of the field CSV to draw");
    t.add("radius", render.radius, "Circle radius in data units");
    t.add("n", render.n, "Generated map: points in the unit disk");
    t.add("eps", render.eps, "Generated map: connection radius");
    t.add("corrupt", render.corrupt, "Generated map: corrupted edges");
    t.add("method", render.method, "Generated map: p1 or dijkstra")->check(CLI::IsMember({"p1", "dijkstra"}));
    t.add("seed", render.seed, "Generated map: random seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  OptionTable* table = nullptr;
  for (auto& [a, t] : tables) {
    if (a == sub) table = &t;
  }
  const std::string name = sub->get_name();

  fs::path dir;
  SolverConfig solver_cfg;
  try {
    if (!config_path.empty()) {
      json cfg;
      try {
        cfg = json::parse(io::read_file(config_path));
      } catch (const json::exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      table->apply(cfg);
    }
    table->check_required();
    if (name == "ggd" || name == "train") solver_cfg = solver.config(name == "ggd");
    if (name == "train") {
      train.loss = loss_kind_from_string(loss);
      train.validate();
    }
    if (name == "classify" || name == "dynamic") gcn.gcn.validate();
    dir = out_dir;
    io::write_file_atomic(dir / "resolved_config.json", table->resolved().dump(2) + "\n");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return is_config_error(e.code()) ? 2 : 1;
  }

  try {
    if (name == "ggd") {
      const auto gl = load_graph_labels(in);
      const auto split = load_split(in.split, gl.graph.num_nodes());
      const auto boundary = boundary_from_split(split, gl.labels, gl.num_classes);
      const auto fm = generate_ggd(gl.graph, boundary, PotentialParams::fixed(solver.alpha), solver_cfg);
      write_features(dir, fm, err);
      out << "wrote " << (dir / "features.csv").string() << " (" << fm.values.rows() << " x " << fm.values.cols()
          << ")\n";
    } else if (name == "train") {
      const auto ds = load_inputs(in);
      const auto split = load_split(in.split, ds.graph.num_nodes());
      const auto boundary = boundary_from_split(split, ds.labels, ds.num_classes);
      const auto result =
          train_pipeline1(ds.graph, boundary, ds.features, PotentialParams::fixed(solver.alpha), solver_cfg, train);
      Checkpoint ckpt{result.mlp, result.potential, solver_cfg, train, train.seed};
      save_checkpoint(dir / "checkpoint.json", ckpt);
      io::write_file_atomic(dir / "loss_history.json", json(result.loss_history).dump() + "\n");
      out << "loss " << result.loss_history.front() << " -> " << result.loss_history.back() << "\n";
    } else if (name == "lggd") {
      const auto ds = load_inputs(in);
      const auto split = load_split(in.split, ds.graph.num_nodes());
      const auto boundary = boundary_from_split(split, ds.labels, ds.num_classes);
      const auto ckpt = load_checkpoint(in.checkpoint);
      SolverConfig cfg = ckpt.solver;
      cfg.clamp_boundary = true;
      if (table->given("workers")) cfg.workers = solver.workers;
      const auto fm = generate_lggd(ds.graph, boundary, ds.features, ckpt.mlp, ckpt.potential, cfg);
      write_features(dir, fm, err);
      out << "wrote " << (dir / "features.csv").string() << " (" << fm.values.rows() << " x " << fm.values.cols()
          << ")\n";
    } else if (name == "classify") {
      const auto gl = load_graph_labels(in);
      if (!fs::exists(in.features)) throw Error(ErrorCode::FileMissing, in.features);
      Eigen::MatrixXd x = parse_any_feature_csv(io::read_file(in.features));
      if (static_cast<std::size_t>(x.rows()) != gl.graph.num_nodes()) {
        throw Error(ErrorCode::NodeCountMismatch, "feature rows do not match node count");
      }
      if (zscore) x = zscore_columns(x);
      const auto split = load_split(in.split, gl.graph.num_nodes());
      Metrics m;
      m.seed = gcn.gcn.seed;
      m.feature_variant = variant;
      if (gcn.model == "gcn") {
        const auto r = train_gcn(gl.graph, x, gl.labels, split, gl.num_classes, gcn.gcn);
        m.accuracy_test = evaluate(r.model, gl.graph, x, gl.labels, split.test);
        m.accuracy_val = evaluate(r.model, gl.graph, x, gl.labels, split.val);
        m.epochs_run = r.epochs_run;
      } else {
        LogisticConfig lc;
        lc.epochs = gcn.logistic_epochs;
        lc.learning_rate = gcn.gcn.learning_rate;
        lc.weight_decay = gcn.gcn.weight_decay;
        lc.seed = gcn.gcn.seed;
        const auto model = train_logistic(x, gl.labels, split, gl.num_classes, lc);
        const auto probs = logistic_predict(model, x);
        m.accuracy_test = accuracy(probs, gl.labels, split.test);
        m.accuracy_val = accuracy(probs, gl.labels, split.val);
        m.epochs_run = lc.epochs;
      }
      io::write_file_atomic(dir / "metrics.json", metrics_to_json(m));
      out << "accuracy_test " << m.accuracy_test << " accuracy_val " << m.accuracy_val << "\n";
    } else if (name == "dynamic") {
      const auto ds = load_inputs(in);
      const auto split = load_split(in.split, ds.graph.num_nodes());
      const auto ckpt = load_checkpoint(in.checkpoint);
      SolverConfig cfg = ckpt.solver;
      if (table->given("workers")) cfg.workers = solver.workers;
      const auto result = run_dynamic(ds, split, ckpt.mlp, ckpt.potential, cfg, gcn.gcn);
      io::write_file_atomic(dir / "dynamic.json", dynamic_to_json(result));
      for (std::size_t i = 0; i < result.accuracy_test.size(); ++i) {
        out << "tranches " << i << " accuracy_test " << result.accuracy_test[i] << "\n";
      }
    } else if (name == "robustness") {
      const auto rows = run_robustness(robust);
      io::write_file_atomic(dir / "robustness.json", robustness_to_json(rows));
      for (const auto& r : rows) {
        out << "n_corrupt " << r.n_corrupt << " distortion_p1 " << r.distortion_p1 << " distortion_dijkstra "
            << r.distortion_dijkstra << "\n";
      }
    } else if (name == "render") {
      std::vector<std::array<double, 2>> positions;
      NodeField field;
      if (!render.positions.empty()) {
        const auto p = io::parse_matrix_csv(io::read_file(render.positions));
        if (p.cols() != 2) throw Error(ErrorCode::ShapeMismatch, "positions need exactly two columns");
        for (Eigen::Index r = 0; r < p.rows(); ++r) positions.push_back({p(r, 0), p(r, 1)});
        if (render.field.empty()) throw Error(ErrorCode::InvalidConfig, "--field is required with --positions");
        const auto f = parse_any_feature_csv(io::read_file(render.field));
        if (static_cast<Eigen::Index>(render.column) >= f.cols()) {
          throw Error(ErrorCode::InvalidConfig, "--column exceeds the field width");
        }
        for (Eigen::Index r = 0; r < f.rows(); ++r) field.push_back(f(r, static_cast<Eigen::Index>(render.column)));
      } else {
        const auto ub = gen_unit_ball_graph(render.n, render.eps, render.seed);
        const Graph g = corrupt_edges(ub.graph, render.corrupt, derive_seed(render.seed, "corrupt"));
        positions = ub.positions;
        if (render.method == "dijkstra") {
          field = dijkstra(g, ub.boundary);
        } else {
          const NodeField rho(g.num_nodes(), 1.0);
          const auto s = solve_steady(g, BoundarySpec{{ub.boundary}}, rho, SolverConfig{}).slice(0, 0);
          field.assign(s.begin(), s.end());
        }
      }
      render_distance_map(positions, field, dir / "distance_map.svg", render.radius);
      out << "wrote " << (dir / "distance_map.svg").string() << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lggd::cli
