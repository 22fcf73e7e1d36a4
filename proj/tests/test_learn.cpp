#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lggd/data.hpp"
#include "lggd/features.hpp"
#include "lggd/learn.hpp"
#include "lggd/random.hpp"
#include "lggd/serialize.hpp"
#include "test_support.hpp"

using namespace lggd;

namespace {

struct SmallProblem {
  Graph g;
  BoundarySpec boundary;
  Matrix x;
};

SmallProblem small_problem(std::uint64_t seed, std::size_t n = 14, std::size_t k = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  SmallProblem p;
  p.g = test::random_connected_graph(n, 0.2, seed, true);
  p.boundary.classes.resize(k);
  for (std::size_t c = 0; c < k; ++c) p.boundary.classes[c] = {2 * c, 2 * c + 1};
  p.x = Matrix(static_cast<Eigen::Index>(n), 4);
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = nd(rng);
  return p;
}

SolverConfig pipeline1_solver(std::vector<double> times) {
  SolverConfig cfg;
  cfg.clamp_boundary = false;
  cfg.snapshot_times = std::move(times);
  return cfg;
}

bool grad_close(double analytic, double fd) {
  return std::abs(analytic - fd) <= std::max(1e-4 * std::max(std::abs(analytic), std::abs(fd)), 1e-8);
}

}  // namespace

TEST(MlpForward, ZeroParametersGiveSoftplusZero) {
  std::vector<std::size_t> hidden{5};
  auto mlp = MlpParams::init(3, hidden, 2, 1);
  for (auto& l : mlp.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const Matrix out = mlp_forward(mlp, Matrix::Random(7, 3));
  ASSERT_EQ(out.rows(), 7);
  ASSERT_EQ(out.cols(), 2);
  for (Eigen::Index i = 0; i < out.size(); ++i) EXPECT_NEAR(out.data()[i], std::log(2.0), 1e-15);
}

TEST(MlpForward, LinearLayerWithZeroWeights) {
  auto mlp = MlpParams::init(3, {}, 2, 1);
  mlp.layers[0].weight.setZero();
  mlp.layers[0].bias << 1.5, -2.0;
  const Matrix out = mlp_forward(mlp, Matrix::Random(4, 3));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(out(i, 0), std::log1p(std::exp(1.5)), 1e-15);
    EXPECT_NEAR(out(i, 1), std::log1p(std::exp(-2.0)), 1e-15);
  }
}

TEST(MlpForward, DeadHiddenLayerGivesOutputBias) {
  std::vector<std::size_t> hidden{6};
  const auto mlp = MlpParams::init(3, hidden, 2, 4);
  DropoutMasks masks{Matrix::Zero(5, 6)};
  const Matrix out = mlp_forward(mlp, Matrix::Random(5, 3), &masks);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) EXPECT_NEAR(out(i, c), ad::softplus(mlp.layers[1].bias(0, c)), 1e-15);
  }
}

TEST(MlpForward, OutputNonnegativeAndShapeChecked) {
  std::vector<std::size_t> hidden{8, 4};
  const auto mlp = MlpParams::init(5, hidden, 3, 2);
  EXPECT_EQ(mlp.num_hidden(), 2u);
  const Matrix out = mlp_forward(mlp, 10.0 * Matrix::Random(20, 5));
  EXPECT_GE(out.minCoeff(), 0.0);
  EXPECT_LGGD_ERROR(mlp_forward(mlp, Matrix::Random(3, 4)), ShapeMismatch);
}

TEST(MlpParams, InitBoundsAndDeterminism) {
  std::vector<std::size_t> hidden{16};
  const auto a = MlpParams::init(9, hidden, 3, 5);
  const auto b = MlpParams::init(9, hidden, 3, 5);
  EXPECT_EQ(a.layers[0].weight, b.layers[0].weight);
  EXPECT_LE(a.layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / 3.0);
  EXPECT_LE(a.layers[1].weight.cwiseAbs().maxCoeff(), 0.25);
  auto bad = a;
  bad.layers[1].weight = Matrix::Zero(5, 3);
  EXPECT_LGGD_ERROR(bad.validate(), ShapeMismatch);
}

TEST(BoundaryLoss, Examples) {
  DistanceField f(2, 1, 1);
  BoundarySpec b{{{0}, {}}};
  f.at(1, 0, 0) = 1e3;
  EXPECT_LT(boundary_loss(f, b), 1e-12);
  f.at(1, 0, 0) = 0.0;
  EXPECT_NEAR(boundary_loss(f, b), std::log(2.0), 1e-15);
  DistanceField g(3, 2, 2, 4.25);
  BoundarySpec b3{{{0}, {1}, {}}};
  EXPECT_NEAR(boundary_loss(g, b3), std::log(3.0), 1e-15);
  EXPECT_LGGD_ERROR(boundary_loss(g, BoundarySpec{{{}, {}, {}}}), EmptyBoundary);
}

TEST(BoundaryLoss, SquaredSelfDistance) {
  DistanceField f(2, 2, 2);
  f.at(0, 0, 0) = 1.0;
  f.at(0, 1, 0) = 3.0;
  f.at(1, 0, 1) = 2.0;
  BoundarySpec b{{{0}, {1}}};
  EXPECT_DOUBLE_EQ(boundary_loss(f, b, BoundaryLossKind::SquaredSelfDistance), (1.0 + 9.0 + 4.0 + 0.0) / 4.0);
}

TEST(BoundaryLoss, NonnegativeOnRandomFields) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    DistanceField f(3, 2, 6);
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t t = 0; t < 2; ++t) {
        for (auto& v : f.slice(k, t)) v = unif(rng);
      }
    }
    EXPECT_GE(boundary_loss(f, BoundarySpec{{{0, 1}, {2}, {5}}}), 0.0);
  }
}

TEST(LossAndGradients, MatchesCentralDifferences) {
  const double eps = 1e-4;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto p = small_problem(10 + s);
    std::vector<std::size_t> hidden{6};
    const auto mlp = MlpParams::init(4, hidden, 3, s);
    const auto pot = PotentialParams::learned_from_alpha(p.g, -0.5);
    const auto solver = pipeline1_solver({0.1, 0.2, 0.3});
    TrainConfig train;
    train.learn_rho = true;
    const auto lg = loss_and_gradients(p.g, p.boundary, p.x, mlp, pot, solver, train);
    ASSERT_TRUE(lg.log_rho.has_value());
    auto loss_at = [&](const MlpParams& m, const PotentialParams& q) {
      return loss_and_gradients(p.g, p.boundary, p.x, m, q, solver, TrainConfig{}).loss;
    };
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      for (int which = 0; which < 2; ++which) {
        const Matrix& analytic = lg.mlp[2 * l + which];
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
          auto up = mlp, dn = mlp;
          (which ? up.layers[l].bias : up.layers[l].weight).data()[i] += eps;
          (which ? dn.layers[l].bias : dn.layers[l].weight).data()[i] -= eps;
          const double fd = (loss_at(up, pot) - loss_at(dn, pot)) / (2 * eps);
          EXPECT_TRUE(grad_close(analytic.data()[i], fd)) << analytic.data()[i] << " vs " << fd;
        }
      }
    }
    for (std::size_t i = 0; i < pot.log_rho.size(); ++i) {
      auto up = pot, dn = pot;
      up.log_rho[i] += eps;
      dn.log_rho[i] -= eps;
      const double fd = (loss_at(mlp, up) - loss_at(mlp, dn)) / (2 * eps);
      EXPECT_TRUE(grad_close((*lg.log_rho)[i], fd)) << (*lg.log_rho)[i] << " vs " << fd;
    }
  }
}

TEST(LossAndGradients, DropoutPathMatchesCentralDifferences) {
  const double eps = 1e-4;
  const auto p = small_problem(42, 10, 2);
  std::vector<std::size_t> hidden{5};
  const auto mlp = MlpParams::init(4, hidden, 2, 3);
  const auto masks = sample_dropout_masks(mlp, 10, 0.4, 9);
  const auto pot = PotentialParams::fixed(-0.5);
  const auto solver = pipeline1_solver({0.1, 0.2});
  const auto lg = loss_and_gradients(p.g, p.boundary, p.x, mlp, pot, solver, TrainConfig{}, &masks);
  EXPECT_FALSE(lg.log_rho.has_value());
  const Matrix& w0 = lg.mlp[0];
  for (Eigen::Index i = 0; i < w0.size(); ++i) {
    auto up = mlp, dn = mlp;
    up.layers[0].weight.data()[i] += eps;
    dn.layers[0].weight.data()[i] -= eps;
    const double fd = (loss_and_gradients(p.g, p.boundary, p.x, up, pot, solver, TrainConfig{}, &masks).loss -
                       loss_and_gradients(p.g, p.boundary, p.x, dn, pot, solver, TrainConfig{}, &masks).loss) /
                      (2 * eps);
    EXPECT_TRUE(grad_close(w0.data()[i], fd)) << w0.data()[i] << " vs " << fd;
  }
}

TEST(LossAndGradients, DisconnectedInputHasNoInfluence) {
  // Nodes 0-3 form the labelled component; node 4 is alone with node 5.
  std::vector<WeightedEdge> e{{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {4, 5, 1}};
  const auto g = build_graph(6, e);
  Matrix x = Matrix::Zero(6, 3);
  x.col(0).setConstant(1.0);
  x(4, 2) = 2.5;  // feature 2 is nonzero only on the detached component
  const auto mlp = MlpParams::init(3, std::vector<std::size_t>{16}, 2, 1);
  const auto lg = loss_and_gradients(g, BoundarySpec{{{0}, {3}}}, x, mlp, PotentialParams::fixed(0.0),
                                     pipeline1_solver({1.0, 2.0}), TrainConfig{});
  EXPECT_EQ(lg.mlp[0].row(2), Matrix::Zero(1, 16));
  // Feature 0 is present on the boundary nodes themselves.
  EXPECT_NE(lg.mlp[0].row(0), Matrix::Zero(1, 16));
}

TEST(LossAndGradients, RejectsClampedSolver) {
  const auto p = small_problem(1);
  const auto mlp = MlpParams::init(4, std::vector<std::size_t>{3}, 3, 1);
  SolverConfig clamped;
  EXPECT_LGGD_ERROR(loss_and_gradients(p.g, p.boundary, p.x, mlp, PotentialParams::fixed(-0.5), clamped,
                                       TrainConfig{}),
                    InvalidConfig);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Matrix> params{Matrix::Constant(2, 2, 1.0)};
  std::vector<Matrix> grads{Matrix::Constant(2, 2, 1.0)};
  AdamState state;
  AdamConfig cfg;
  adam_step(params, grads, state, cfg);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(params[0].data()[i], 1.0 - 0.01, 1e-9);
}

TEST(Adam, ZeroGradientWithoutDecayIsIdentity) {
  std::vector<Matrix> params{Matrix::Constant(1, 3, 0.7)};
  std::vector<Matrix> grads{Matrix::Zero(1, 3)};
  AdamState state;
  adam_step(params, grads, state, AdamConfig{});
  EXPECT_EQ(params[0], Matrix::Constant(1, 3, 0.7));
}

TEST(Adam, DecoupledDecayShrinksParameters) {
  std::vector<Matrix> params{Matrix::Constant(1, 2, 2.0)};
  std::vector<Matrix> grads{Matrix::Zero(1, 2)};
  AdamState state;
  AdamConfig cfg;
  cfg.weight_decay = 0.1;
  adam_step(params, grads, state, cfg);
  EXPECT_NEAR(params[0](0, 0), 2.0 - 0.01 * 0.1 * 2.0, 1e-15);
}

TEST(Adam, ShapeMismatch) {
  std::vector<Matrix> params{Matrix::Zero(2, 2)};
  std::vector<Matrix> grads{Matrix::Zero(2, 3)};
  AdamState state;
  EXPECT_LGGD_ERROR(adam_step(params, grads, state, AdamConfig{}), ShapeMismatch);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_LGGD_ERROR(cfg.validate(), InvalidConfig);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  EXPECT_LGGD_ERROR(cfg.validate(), InvalidConfig);
}

class Pipeline1 : public ::testing::Test {
 protected:
  void SetUp() override {
    SbmParams sp;
    sp.seed = 3;
    ds_ = gen_sbm(sp);
    const std::vector<double> fr{0.025, 0.025, 0.95};
    const auto split = make_splits(ds_.labels, fr, 3);
    boundary_ = BoundarySpec::from_labels(split.train, ds_.labels, 3);
    solver_.clamp_boundary = false;
  }
  LabeledDataset ds_;
  BoundarySpec boundary_;
  SolverConfig solver_;
};

TEST_F(Pipeline1, ZeroLearningRateKeepsParameters) {
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 0.0;
  tc.dropout = 0.0;
  const auto r = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), solver_, tc);
  const auto init = MlpParams::init(static_cast<std::size_t>(ds_.features.cols()), tc.hidden, 3,
                                    derive_seed(tc.seed, "pipeline1/mlp-init"));
  EXPECT_EQ(r.mlp.layers[0].weight, init.layers[0].weight);
  ASSERT_EQ(r.loss_history.size(), 3u);
  EXPECT_EQ(r.loss_history[0], r.loss_history[1]);
  EXPECT_EQ(r.loss_history[1], r.loss_history[2]);
}

TEST_F(Pipeline1, TrainingReducesLoss) {
  TrainConfig tc;
  const auto r = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), solver_, tc);
  ASSERT_EQ(r.loss_history.size(), 150u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
}

TEST_F(Pipeline1, DeterministicAcrossRunsAndWorkerCounts) {
  TrainConfig tc;
  tc.epochs = 5;
  tc.learn_rho = true;
  const auto a = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), solver_, tc);
  const auto b = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), solver_, tc);
  auto parallel = solver_;
  parallel.workers = 3;
  const auto c = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), parallel, tc);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.loss_history, c.loss_history);
  EXPECT_EQ(a.potential.log_rho, c.potential.log_rho);
}

TEST_F(Pipeline1, CheckpointRoundTripReproducesFeatures) {
  TrainConfig tc;
  tc.epochs = 4;
  tc.learn_rho = true;
  const auto r = train_pipeline1(ds_.graph, boundary_, ds_.features, PotentialParams::fixed(-0.5), solver_, tc);
  Checkpoint ckpt{r.mlp, r.potential, solver_, tc, 77};
  const auto path = test::temp_dir("ckpt") / "c.json";
  save_checkpoint(path, ckpt);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.potential.log_rho, r.potential.log_rho);
  EXPECT_EQ(back.train.hidden, tc.hidden);
  EXPECT_EQ(back.solver.snapshot_times, solver_.snapshot_times);
  SolverConfig gen;
  const auto f1 = generate_lggd(ds_.graph, boundary_, ds_.features, r.mlp, r.potential, gen);
  const auto f2 = generate_lggd(ds_.graph, boundary_, ds_.features, back.mlp, back.potential, gen);
  EXPECT_EQ(f1.values, f2.values);
}

TEST(Checkpoint, RejectsMalformedInput) {
  EXPECT_LGGD_ERROR(checkpoint_from_json("not json"), ParseError);
  EXPECT_LGGD_ERROR(checkpoint_from_json(R"({"format":"other","version":1})"), ParseError);
  Checkpoint ckpt;
  ckpt.mlp = MlpParams::init(2, {}, 2, 0);
  ckpt.potential = PotentialParams::fixed(-0.5);
  auto text = checkpoint_to_json(ckpt);
  EXPECT_NO_THROW(checkpoint_from_json(text));
  text.insert(text.find('{') + 1, "\"extra\": 1,");
  EXPECT_LGGD_ERROR(checkpoint_from_json(text), ParseError);
}

TEST(Serialize, ConfigRoundTrip) {
  SolverConfig s;
  s.norm = Norm::Linf;
  s.step_size = 0.05;
  s.snapshot_times = {0.1, 0.3};
  s.clamp_boundary = false;
  const auto s2 = solver_config_from_json(to_json_value(s));
  EXPECT_EQ(s2.norm, Norm::Linf);
  EXPECT_EQ(s2.step_size, 0.05);
  EXPECT_EQ(s2.snapshot_times, s.snapshot_times);
  EXPECT_FALSE(s2.clamp_boundary);
  TrainConfig t;
  t.loss = BoundaryLossKind::SquaredSelfDistance;
  t.hidden = {32, 16};
  t.seed = 0xFFFFFFFFFFFFFFFFULL;
  const auto t2 = train_config_from_json(to_json_value(t));
  EXPECT_EQ(t2.loss, t.loss);
  EXPECT_EQ(t2.hidden, t.hidden);
  EXPECT_EQ(t2.seed, t.seed);
  EXPECT_LGGD_ERROR(norm_from_string("l2"), UnsupportedNorm);
}
