#include "lggd/learn.hpp"

#include <cmath>

#include "lggd/dynamics.hpp"
#include "lggd/error.hpp"
#include "lggd/random.hpp"

namespace lggd {

MlpParams MlpParams::init(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                          std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p;
  std::size_t fan_in = input_dim;
  std::vector<std::size_t> widths(hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (auto width : widths) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Matrix(fan_in, width), Matrix(1, width)};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    for (Eigen::Index c = 0; c < layer.bias.cols(); ++c) layer.bias(0, c) = dist(rng);
    p.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return p;
}

void MlpParams::validate() const {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " bias shape");
    }
    if (l > 0 && layers[l - 1].weight.cols() != layer.weight.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " does not chain");
    }
  }
}

DropoutMasks sample_dropout_masks(const MlpParams& mlp, std::size_t n_rows, double rate, std::uint64_t seed) {
  DropoutMasks masks;
  if (rate <= 0.0) return masks;
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
    Matrix m(static_cast<Eigen::Index>(n_rows), mlp.layers[l].weight.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = keep(rng) ? scale : 0.0;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& features, const DropoutMasks* masks) {
  params.validate();
  if (static_cast<std::size_t>(features.cols()) != params.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "feature width " + std::to_string(features.cols()) + " vs MLP input " +
                                              std::to_string(params.input_dim()));
  }
  if (masks && !masks->empty() && masks->size() != params.num_hidden()) {
    throw Error(ErrorCode::ShapeMismatch, "one dropout mask per hidden layer");
  }
  Matrix h = features;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = h * params.layers[l].weight;
    z.rowwise() += params.layers[l].bias.row(0);
    if (l + 1 < params.layers.size()) {
      h = z.cwiseMax(0.0);
      if (masks && !masks->empty()) {
        const auto& m = (*masks)[l];
        if (m.rows() != h.rows() || m.cols() != h.cols()) throw Error(ErrorCode::ShapeMismatch, "dropout mask shape");
        h = h.cwiseProduct(m);
      }
    } else {
      h = z.unaryExpr([](double v) { return ad::softplus(v); });
    }
  }
  return h;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw Error(ErrorCode::InvalidConfig, "epochs must be > 0");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "weight decay must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0,1)");
  for (auto h : hidden) {
    if (h == 0) throw Error(ErrorCode::InvalidConfig, "hidden width must be > 0");
  }
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> labeled_boundary(const BoundarySpec& boundary) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < boundary.num_classes(); ++k) {
    for (auto x : boundary.classes[k]) out.emplace_back(x, k);
  }
  if (out.empty()) throw Error(ErrorCode::EmptyBoundary, "boundary loss needs labeled boundary nodes");
  return out;
}

// Loss and its gradient on a snapshot matrix laid out as column k*T + t.
double snapshot_boundary_loss(const Matrix& snaps, std::size_t K, std::size_t T, const BoundarySpec& boundary,
                              BoundaryLossKind kind, Matrix* grad) {
  const auto nodes = labeled_boundary(boundary);
  const double scale = 1.0 / static_cast<double>(nodes.size() * T);
  if (grad) *grad = Matrix::Zero(snaps.rows(), snaps.cols());
  double loss = 0.0;
  std::vector<double> logits(K);
  for (const auto& [x, label] : nodes) {
    const auto row = static_cast<Eigen::Index>(x);
    for (std::size_t t = 0; t < T; ++t) {
      if (kind == BoundaryLossKind::SquaredSelfDistance) {
        const double f = snaps(row, static_cast<Eigen::Index>(label * T + t));
        loss += f * f;
        if (grad) (*grad)(row, static_cast<Eigen::Index>(label * T + t)) += 2.0 * f * scale;
        continue;
      }
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        logits[k] = -snaps(row, static_cast<Eigen::Index>(k * T + t));
        mx = std::max(mx, logits[k]);
      }
      double denom = 0.0;
      for (std::size_t k = 0; k < K; ++k) denom += std::exp(logits[k] - mx);
      loss += mx + std::log(denom) - logits[label];
      if (grad) {
        for (std::size_t k = 0; k < K; ++k) {
          const double p = std::exp(logits[k] - mx) / denom;
          // d(-log p_label)/d logit_k = p_k - [k == label]; logit = -f.
          (*grad)(row, static_cast<Eigen::Index>(k * T + t)) -= (p - (k == label ? 1.0 : 0.0)) * scale;
        }
      }
    }
  }
  return loss * scale;
}

}  // namespace

double boundary_loss(const DistanceField& field, const BoundarySpec& boundary, BoundaryLossKind kind) {
  const std::size_t K = field.num_classes();
  const std::size_t T = field.num_snapshots();
  if (boundary.num_classes() != K) throw Error(ErrorCode::SizeMismatch, "boundary classes vs field classes");
  Matrix snaps(static_cast<Eigen::Index>(field.num_nodes()), static_cast<Eigen::Index>(K * T));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto s = field.slice(k, t);
      for (std::size_t x = 0; x < s.size(); ++x) snaps(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k * T + t)) = s[x];
    }
  }
  return snapshot_boundary_loss(snaps, K, T, boundary, kind, nullptr);
}

UnrolledIntegrator::UnrolledIntegrator(const Graph& g, const BoundarySpec& boundary, std::vector<double> rho,
                                       SolverConfig cfg)
    : g_(&g), boundary_(&boundary), rho_(std::move(rho)), cfg_(std::move(cfg)) {
  cfg_.validate();
  boundary.validate(g.num_nodes());
  if (rho_.size() != g.num_nodes()) throw Error(ErrorCode::SizeMismatch, "rho length");
  steps_ = cfg_.snapshot_steps();
  frozen_.assign(boundary.num_classes(), std::vector<char>(g.num_nodes(), 0));
  if (cfg_.clamp_boundary) {
    for (std::size_t k = 0; k < boundary.num_classes(); ++k) {
      for (auto b : boundary.classes[k]) frozen_[k][b] = 1;
    }
  }
}

Matrix UnrolledIntegrator::forward(const Matrix& phi0) {
  const std::size_t n = g_->num_nodes();
  const std::size_t K = boundary_->num_classes();
  const std::size_t T = steps_.size();
  if (static_cast<std::size_t>(phi0.rows()) != n || static_cast<std::size_t>(phi0.cols()) != K) {
    throw Error(ErrorCode::ShapeMismatch, "phi0 must be n x K");
  }
  Matrix snaps(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K * T));
  stages_.assign(K, {});
  const std::size_t total = T ? steps_.back() : 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> y(n);
    for (std::size_t x = 0; x < n; ++x) y[x] = frozen_[k][x] ? 0.0 : phi0(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k));
    EikonalDynamics dyn(*g_, rho_, cfg_.norm, frozen_[k]);
    stages_[k].reserve(total * 4 * n);
    std::size_t step = 0;
    for (std::size_t s = 0; s < T; ++s) {
      for (; step < steps_[s]; ++step) rk4_step(dyn, cfg_.step_size, y, &stages_[k]);
      for (std::size_t x = 0; x < n; ++x) snaps(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k * T + s)) = y[x];
    }
  }
  return snaps;
}

Matrix UnrolledIntegrator::backward(const Matrix& snapshot_grad, std::vector<double>* rho_grad) const {
  const std::size_t n = g_->num_nodes();
  const std::size_t K = boundary_->num_classes();
  const std::size_t T = steps_.size();
  if (stages_.size() != K) throw Error(ErrorCode::InvalidConfig, "backward called before forward");
  if (rho_grad && rho_grad->size() != n) rho_grad->assign(n, 0.0);
  Matrix phi0_grad = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  const std::size_t total = T ? steps_.back() : 0;
  std::vector<double> rho_acc(rho_grad ? n : 0, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    EikonalDynamics dyn(*g_, rho_, cfg_.norm, frozen_[k]);
    std::vector<double> y_bar(n, 0.0);
    std::size_t snap = T;
    for (std::size_t step = total; step > 0; --step) {
      while (snap > 0 && steps_[snap - 1] == step) {
        --snap;
        for (std::size_t x = 0; x < n; ++x) {
          y_bar[x] += snapshot_grad(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k * T + snap));
        }
      }
      const std::span<const double> record(stages_[k].data() + (step - 1) * 4 * n, 4 * n);
      rk4_step_vjp(dyn, cfg_.step_size, record, y_bar, rho_acc);
    }
    for (std::size_t x = 0; x < n; ++x) {
      phi0_grad(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k)) = frozen_[k][x] ? 0.0 : y_bar[x];
    }
  }
  if (rho_grad) {
    for (std::size_t x = 0; x < n; ++x) (*rho_grad)[x] += rho_acc[x];
  }
  return phi0_grad;
}

LossAndGradients loss_and_gradients(const Graph& g, const BoundarySpec& boundary, const Matrix& features,
                                    const MlpParams& mlp, const PotentialParams& pot, const SolverConfig& solver,
                                    const TrainConfig& train, const DropoutMasks* masks) {
  if (solver.clamp_boundary) {
    throw Error(ErrorCode::InvalidConfig, "training integrates without boundary clamping");
  }
  const std::size_t n = g.num_nodes();
  if (static_cast<std::size_t>(features.rows()) != n) throw Error(ErrorCode::ShapeMismatch, "feature rows vs nodes");
  mlp.validate();
  if (static_cast<std::size_t>(features.cols()) != mlp.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "feature width vs MLP input");
  }
  if (mlp.output_dim() != boundary.num_classes()) throw Error(ErrorCode::ShapeMismatch, "MLP output width vs classes");

  PotentialParams potential = pot;
  if (train.learn_rho && potential.mode == PotentialParams::Mode::FixedAlpha) {
    potential = PotentialParams::learned_from_alpha(g, pot.alpha);
  }
  const auto rho = potential_eval(g, potential);

  ad::Tape tape;
  std::vector<ad::Var> params;
  ad::Var h = tape.constant(features);
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto w = tape.parameter(mlp.layers[l].weight);
    const auto b = tape.parameter(mlp.layers[l].bias);
    params.push_back(w);
    params.push_back(b);
    const auto z = tape.add_row(tape.matmul(h, w), b);
    if (l + 1 < mlp.layers.size()) {
      h = tape.relu(z);
      if (masks && !masks->empty()) h = tape.mask(h, (*masks)[l]);
    } else {
      h = tape.softplus(z);
    }
  }

  Matrix log_rho_value(static_cast<Eigen::Index>(n), 1);
  for (std::size_t x = 0; x < n; ++x) log_rho_value(static_cast<Eigen::Index>(x), 0) = std::log(rho[x]);
  const auto log_rho = train.learn_rho ? tape.parameter(log_rho_value) : tape.constant(log_rho_value);

  UnrolledIntegrator integrator(g, boundary, rho, solver);
  const std::size_t K = boundary.num_classes();
  const std::size_t T = integrator.num_snapshots();
  const ad::Var phi0 = h;
  const auto snaps = tape.custom(integrator.forward(tape.value(phi0)), {phi0, log_rho},
                                 [&integrator, &rho, phi0, log_rho, n](ad::Tape& t, const Matrix& grad) {
                                   std::vector<double> rho_grad;
                                   const bool want_rho = t.requires_grad(log_rho);
                                   if (want_rho) rho_grad.assign(n, 0.0);
                                   t.accumulate(phi0, integrator.backward(grad, want_rho ? &rho_grad : nullptr));
                                   if (want_rho) {
                                     Matrix g_log(static_cast<Eigen::Index>(n), 1);
                                     for (std::size_t x = 0; x < n; ++x) g_log(static_cast<Eigen::Index>(x), 0) = rho_grad[x] * rho[x];
                                     t.accumulate(log_rho, g_log);
                                   }
                                 });

  Matrix loss_grad;
  Matrix loss_value(1, 1);
  loss_value(0, 0) = snapshot_boundary_loss(tape.value(snaps), K, T, boundary, train.loss, &loss_grad);
  const auto loss = tape.custom(loss_value, {snaps}, [snaps, loss_grad = std::move(loss_grad)](ad::Tape& t, const Matrix& g) {
    t.accumulate(snaps, loss_grad * g(0, 0));
  });
  tape.backward(loss);

  LossAndGradients out;
  out.loss = tape.value(loss)(0, 0);
  for (auto p : params) out.mlp.push_back(tape.grad(p));
  if (train.learn_rho) {
    const Matrix gl = tape.grad(log_rho);
    out.log_rho = std::vector<double>(gl.data(), gl.data() + gl.size());
  }
  return out;
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "params vs grads count");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "optimizer state count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        state.m[i].rows() != params[i].rows() || state.m[i].cols() != params[i].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter " + std::to_string(i) + " shape");
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i] -= (cfg.learning_rate * cfg.weight_decay) * params[i];
    params[i].array() -= cfg.learning_rate * (state.m[i].array() / bc1) /
                         ((state.v[i].array() / bc2).sqrt() + cfg.epsilon);
  }
}

Pipeline1Result train_pipeline1(const Graph& g, const BoundarySpec& boundary, const Matrix& features,
                                const PotentialParams& initial_potential, const SolverConfig& solver,
                                const TrainConfig& train) {
  train.validate();
  SolverConfig solver1 = solver;
  solver1.clamp_boundary = false;

  Pipeline1Result result;
  result.potential = initial_potential;
  if (train.learn_rho && result.potential.mode == PotentialParams::Mode::FixedAlpha) {
    result.potential = PotentialParams::learned_from_alpha(g, initial_potential.alpha);
  }
  result.mlp = MlpParams::init(static_cast<std::size_t>(features.cols()), train.hidden, boundary.num_classes(),
                               derive_seed(train.seed, "pipeline1/mlp-init"));
  Rng dropout_rng = make_rng(train.seed, "pipeline1/dropout");

  AdamState mlp_state;
  AdamState rho_state;
  const AdamConfig mlp_adam{train.learning_rate, 0.9, 0.999, 1e-8, train.weight_decay};
  const AdamConfig rho_adam{train.learning_rate, 0.9, 0.999, 1e-8, 0.0};

  std::vector<Matrix> mlp_params;
  for (auto& layer : result.mlp.layers) {
    mlp_params.push_back(layer.weight);
    mlp_params.push_back(layer.bias);
  }

  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    const auto masks = sample_dropout_masks(result.mlp, static_cast<std::size_t>(features.rows()), train.dropout,
                                            dropout_rng());
    auto lg = loss_and_gradients(g, boundary, features, result.mlp, result.potential, solver1, train, &masks);
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorCode::Diverged, "pipeline1 loss is not finite at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(lg.loss);

    adam_step(mlp_params, lg.mlp, mlp_state, mlp_adam);
    for (std::size_t l = 0; l < result.mlp.layers.size(); ++l) {
      result.mlp.layers[l].weight = mlp_params[2 * l];
      result.mlp.layers[l].bias = mlp_params[2 * l + 1];
    }
    if (lg.log_rho) {
      auto& log_rho = result.potential.log_rho;
      Matrix p = Eigen::Map<const Matrix>(log_rho.data(), static_cast<Eigen::Index>(log_rho.size()), 1);
      const Matrix gr = Eigen::Map<const Matrix>(lg.log_rho->data(), static_cast<Eigen::Index>(log_rho.size()), 1);
      std::span<Matrix> ps(&p, 1);
      std::span<const Matrix> gs(&gr, 1);
      adam_step(ps, gs, rho_state, rho_adam);
      std::copy(p.data(), p.data() + p.size(), log_rho.begin());
    }
  }
  return result;
}

}  // namespace lggd
