#include "lggd/backbone.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "lggd/error.hpp"
#include "lggd/learn.hpp"
#include "lggd/random.hpp"

namespace lggd {

void SplitSpec::validate(std::size_t n_nodes) const {
  std::vector<char> seen(n_nodes, 0);
  auto mark = [&](const std::vector<std::size_t>& nodes, const char* name) {
    for (auto x : nodes) {
      if (x >= n_nodes) throw Error(ErrorCode::IndexOutOfRange, std::string(name) + " node " + std::to_string(x));
      if (seen[x]) throw Error(ErrorCode::OverlapWithBoundary, std::string(name) + " node " + std::to_string(x) +
                                                                   " appears in more than one split");
      seen[x] = 1;
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test, "test");
  for (const auto& nl : new_labels) mark(nl, "new_labels");
}

std::string split_to_json(const SplitSpec& split) {
  nlohmann::json j{{"train", split.train}, {"val", split.val}, {"test", split.test}, {"new_labels", split.new_labels}};
  return j.dump() + "\n";
}

SplitSpec split_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("split JSON: ") + e.what());
  }
  SplitSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "train") s.train = value.get<std::vector<std::size_t>>();
      else if (key == "val") s.val = value.get<std::vector<std::size_t>>();
      else if (key == "test") s.test = value.get<std::vector<std::size_t>>();
      else if (key == "new_labels") s.new_labels = value.get<std::vector<std::vector<std::size_t>>>();
      else throw Error(ErrorCode::ParseError, "unknown split key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("split JSON: ") + e.what());
  }
  return s;
}

void GcnConfig::validate() const {
  if (hidden == 0) throw Error(ErrorCode::InvalidConfig, "hidden must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0,1)");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be >= 0");
  if (patience > max_epochs) throw Error(ErrorCode::InvalidConfig, "patience must not exceed max_epochs");
}

ad::SparseMatrix normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree(g, i) + 1.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.num_edges() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    triplets.emplace_back(r, r, inv_sqrt[i] * inv_sqrt[i]);
    for (const auto& nb : g.neighbors(i)) {
      triplets.emplace_back(r, static_cast<Eigen::Index>(nb.node), inv_sqrt[i] * nb.weight * inv_sqrt[nb.node]);
    }
  }
  ad::SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

namespace {

Eigen::MatrixXd glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  }
  return m;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = keep(rng) ? scale : 0.0;
  }
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    p.row(r) = (z.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

std::size_t argmax_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::Index best = 0;
  m.row(r).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

void check_labels(std::span<const int> labels, std::size_t num_classes, std::size_t n) {
  if (labels.size() != n) throw Error(ErrorCode::SizeMismatch, "labels vs nodes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
    }
  }
}

std::vector<int> labels_of(std::span<const int> labels, std::span<const std::size_t> nodes) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (auto x : nodes) out.push_back(labels[x]);
  return out;
}

}  // namespace

Eigen::MatrixXd gcn_predict(const GcnModel& model, const ad::SparseMatrix& a_hat, const Eigen::MatrixXd& x) {
  if (x.cols() != model.w0.rows()) throw Error(ErrorCode::ShapeMismatch, "feature width vs model input");
  if (x.rows() != a_hat.rows()) throw Error(ErrorCode::ShapeMismatch, "feature rows vs nodes");
  Eigen::MatrixXd h = a_hat * (x * model.w0);
  h.rowwise() += model.b0.row(0);
  h = h.cwiseMax(0.0);
  Eigen::MatrixXd z = a_hat * (h * model.w1);
  z.rowwise() += model.b1.row(0);
  return softmax_rows(z);
}

double accuracy(const Eigen::MatrixXd& probs, std::span<const int> labels, std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw Error(ErrorCode::EmptySplit, "accuracy over an empty node set");
  std::size_t correct = 0;
  for (auto x : nodes) {
    if (x >= labels.size() || static_cast<Eigen::Index>(x) >= probs.rows()) {
      throw Error(ErrorCode::IndexOutOfRange, "node " + std::to_string(x));
    }
    if (static_cast<int>(argmax_row(probs, static_cast<Eigen::Index>(x))) == labels[x]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double evaluate(const GcnModel& model, const Graph& g, const Eigen::MatrixXd& x, std::span<const int> labels,
                std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw Error(ErrorCode::EmptySplit, "evaluate over an empty node set");
  return accuracy(gcn_predict(model, normalize_adjacency(g), x), labels, nodes);
}

GcnTrainResult train_gcn(const Graph& g, const Eigen::MatrixXd& x, std::span<const int> labels,
                         const SplitSpec& split, std::size_t num_classes, const GcnConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  if (static_cast<std::size_t>(x.rows()) != n) throw Error(ErrorCode::ShapeMismatch, "feature rows vs nodes");
  check_labels(labels, num_classes, n);
  split.validate(n);
  if (split.train.empty()) throw Error(ErrorCode::EmptySplit, "empty train split");
  if (split.val.empty()) throw Error(ErrorCode::EmptySplit, "empty validation split");

  const auto a_hat = normalize_adjacency(g);
  const auto d = static_cast<std::size_t>(x.cols());
  Rng init_rng = make_rng(cfg.seed, "gcn/init");
  Rng drop_rng = make_rng(cfg.seed, "gcn/dropout");

  std::vector<Eigen::MatrixXd> params{glorot(d, cfg.hidden, init_rng), Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(cfg.hidden)),
                                      glorot(cfg.hidden, num_classes, init_rng),
                                      Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(num_classes))};
  auto as_model = [](const std::vector<Eigen::MatrixXd>& p) { return GcnModel{p[0], p[1], p[2], p[3]}; };

  GcnTrainResult result;
  result.model = as_model(params);
  const auto train_labels = labels_of(labels, split.train);
  const auto val_labels = labels_of(labels, split.val);

  AdamState state;
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ad::Tape tape;
    auto xin = tape.constant(x);
    if (cfg.dropout > 0) xin = tape.mask(xin, dropout_mask(x.rows(), x.cols(), cfg.dropout, drop_rng));
    const auto w0 = tape.parameter(params[0]);
    const auto b0 = tape.parameter(params[1]);
    const auto w1 = tape.parameter(params[2]);
    const auto b1 = tape.parameter(params[3]);
    auto h = tape.relu(tape.add_row(tape.spmm(a_hat, tape.matmul(xin, w0)), b0));
    if (cfg.dropout > 0) {
      h = tape.mask(h, dropout_mask(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.hidden), cfg.dropout, drop_rng));
    }
    const auto logits = tape.add_row(tape.spmm(a_hat, tape.matmul(h, w1)), b1);
    const auto loss = tape.softmax_cross_entropy(logits, split.train, train_labels);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) {
      throw Error(ErrorCode::Diverged, "GCN training loss is not finite at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    const std::vector<Eigen::MatrixXd> grads{tape.grad(w0), tape.grad(b0), tape.grad(w1), tape.grad(b1)};
    adam_step(params, grads, state, adam);
    result.train_loss.push_back(loss_value);
    ++result.epochs_run;

    const auto model = as_model(params);
    const auto probs = gcn_predict(model, a_hat, x);
    const double val_acc = accuracy(probs, labels, split.val);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < split.val.size(); ++i) {
      val_loss -= std::log(std::max(probs(static_cast<Eigen::Index>(split.val[i]), val_labels[i]), 1e-300));
    }
    val_loss /= static_cast<double>(split.val.size());
    result.val_curve.push_back(val_acc);

    if (val_acc > best_acc || (val_acc == best_acc && val_loss < best_loss)) {
      best_acc = val_acc;
      best_loss = val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

LogisticModel train_logistic(const Eigen::MatrixXd& x, std::span<const int> labels, const SplitSpec& split,
                             std::size_t num_classes, const LogisticConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  check_labels(labels, num_classes, n);
  split.validate(n);
  if (split.train.empty()) throw Error(ErrorCode::EmptySplit, "empty train split");
  Rng rng = make_rng(cfg.seed, "logistic/init");
  std::vector<Eigen::MatrixXd> params{glorot(static_cast<std::size_t>(x.cols()), num_classes, rng),
                                      Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(num_classes))};
  const auto train_labels = labels_of(labels, split.train);
  AdamState state;
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ad::Tape tape;
    const auto xin = tape.constant(x);
    const auto w = tape.parameter(params[0]);
    const auto b = tape.parameter(params[1]);
    const auto loss = tape.softmax_cross_entropy(tape.add_row(tape.matmul(xin, w), b), split.train, train_labels);
    if (!std::isfinite(tape.value(loss)(0, 0))) {
      throw Error(ErrorCode::Diverged, "logistic loss is not finite at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    const std::vector<Eigen::MatrixXd> grads{tape.grad(w), tape.grad(b)};
    adam_step(params, grads, state, adam);
  }
  return LogisticModel{params[0], params[1]};
}

Eigen::MatrixXd logistic_predict(const LogisticModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weight.rows()) throw Error(ErrorCode::ShapeMismatch, "feature width vs model input");
  Eigen::MatrixXd z = x * model.weight;
  z.rowwise() += model.bias.row(0);
  return softmax_rows(z);
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::json j{{"accuracy_test", m.accuracy_test},
                   {"accuracy_val", m.accuracy_val},
                   {"epochs_run", m.epochs_run},
                   {"seed", m.seed},
                   {"feature_variant", m.feature_variant}};
  return j.dump(2) + "\n";
}

}  // namespace lggd
