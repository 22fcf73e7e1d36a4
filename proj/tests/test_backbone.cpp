#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lggd/backbone.hpp"
#include "lggd/data.hpp"
#include "lggd/features.hpp"
#include "test_support.hpp"

using namespace lggd;

namespace {

struct Task {
  LabeledDataset ds;
  SplitSpec split;
};

Task sbm_task(std::uint64_t seed, double train_fraction = 0.1) {
  Task t;
  SbmParams sp;
  sp.n_per_class = 100;
  sp.p_in = 0.08;
  sp.p_out = 0.01;
  sp.seed = seed;
  t.ds = gen_sbm(sp);
  const std::vector<double> fr{train_fraction, 0.1, 1.0 - train_fraction - 0.1};
  t.split = make_splits(t.ds.labels, fr, seed);
  return t;
}

}  // namespace

TEST(NormalizeAdjacency, Examples) {
  std::vector<WeightedEdge> e{{0, 1, 1}};
  const auto a = Eigen::MatrixXd(normalize_adjacency(build_graph(3, e)));
  EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 1), 0.5, 1e-15);
  EXPECT_EQ(a(2, 2), 1.0);
  EXPECT_EQ(a(0, 2), 0.0);
}

TEST(NormalizeAdjacency, SymmetricWithSpectralRadiusOne) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto g = test::random_connected_graph(25, 0.15, s, true);
    const Eigen::MatrixXd a(normalize_adjacency(g));
    EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0, 1e-12);
  }
}

TEST(GcnConfig, Validation) {
  GcnConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.patience = cfg.max_epochs + 1;
  EXPECT_LGGD_ERROR(cfg.validate(), InvalidConfig);
}

TEST(TrainGcn, FitsGeodesicFeaturesOfSeparableSbm) {
  const auto t = sbm_task(1);
  const auto boundary = BoundarySpec::from_labels(t.split.train, t.ds.labels, 3);
  const auto fm = generate_ggd(t.ds.graph, boundary, PotentialParams::fixed(-0.5), SolverConfig{});
  GcnConfig cfg;
  cfg.max_epochs = 500;
  const auto r = train_gcn(t.ds.graph, fm.values, t.ds.labels, t.split, 3, cfg);
  EXPECT_GT(evaluate(r.model, t.ds.graph, fm.values, t.ds.labels, t.split.train), 0.9);
  for (double loss : r.train_loss) EXPECT_TRUE(std::isfinite(loss));
}

TEST(TrainGcn, UntrainedModelIsNearChance) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = sbm_task(100 + s);
    GcnConfig cfg;
    cfg.max_epochs = 0;
    cfg.patience = 0;
    cfg.seed = s;
    const auto r = train_gcn(t.ds.graph, t.ds.features, t.ds.labels, t.split, 3, cfg);
    EXPECT_EQ(r.epochs_run, 0u);
    total += evaluate(r.model, t.ds.graph, t.ds.features, t.ds.labels, t.split.test);
  }
  EXPECT_NEAR(total / 10.0, 1.0 / 3.0, 0.1);
}

TEST(TrainGcn, SameSeedSameValidationCurve) {
  const auto t = sbm_task(7);
  GcnConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.seed = 4;
  const auto a = train_gcn(t.ds.graph, t.ds.features, t.ds.labels, t.split, 3, cfg);
  const auto b = train_gcn(t.ds.graph, t.ds.features, t.ds.labels, t.split, 3, cfg);
  EXPECT_EQ(a.val_curve, b.val_curve);
  EXPECT_EQ(a.model.w0, b.model.w0);
  EXPECT_EQ(a.val_curve.size(), a.epochs_run);
}

TEST(TrainGcn, ConvergedModelGeneralises) {
  const auto t = sbm_task(8);
  GcnConfig cfg;
  cfg.max_epochs = 400;
  const auto r = train_gcn(t.ds.graph, t.ds.features, t.ds.labels, t.split, 3, cfg);
  const double train_acc = evaluate(r.model, t.ds.graph, t.ds.features, t.ds.labels, t.split.train);
  const double val_acc = evaluate(r.model, t.ds.graph, t.ds.features, t.ds.labels, t.split.val);
  EXPECT_GE(train_acc, val_acc - 0.1);
  EXPECT_GT(train_acc, 1.0 / 3.0);
  EXPECT_LE(r.best_epoch, r.epochs_run);
}

TEST(TrainGcn, Errors) {
  const auto t = sbm_task(9);
  GcnConfig cfg;
  cfg.patience = 5;
  cfg.max_epochs = 5;
  EXPECT_LGGD_ERROR(train_gcn(t.ds.graph, t.ds.features.topRows(10), t.ds.labels, t.split, 3, cfg), ShapeMismatch);
  auto no_train = t.split;
  no_train.train.clear();
  EXPECT_LGGD_ERROR(train_gcn(t.ds.graph, t.ds.features, t.ds.labels, no_train, 3, cfg), EmptySplit);
  Eigen::MatrixXd bad = t.ds.features;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_LGGD_ERROR(train_gcn(t.ds.graph, bad, t.ds.labels, t.split, 3, cfg), Diverged);
}

TEST(GcnPredict, RowsAreDistributions) {
  const auto t = sbm_task(10);
  GcnConfig cfg;
  cfg.patience = 20;
  cfg.max_epochs = 20;
  const auto r = train_gcn(t.ds.graph, t.ds.features, t.ds.labels, t.split, 3, cfg);
  const auto p = gcn_predict(r.model, normalize_adjacency(t.ds.graph), t.ds.features);
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
}

TEST(Evaluate, ConstantPredictorOnSingleClass) {
  const auto g = test::path_graph(4);
  GcnModel m;
  m.w0 = Eigen::MatrixXd::Zero(2, 3);
  m.b0 = Eigen::MatrixXd::Zero(1, 3);
  m.w1 = Eigen::MatrixXd::Zero(3, 2);
  m.b1 = Eigen::MatrixXd(1, 2);
  m.b1 << 1.0, 0.0;
  const std::vector<int> labels(4, 0);
  const std::vector<std::size_t> nodes{0, 1, 2, 3};
  EXPECT_EQ(evaluate(m, g, Eigen::MatrixXd::Random(4, 2), labels, nodes), 1.0);
  EXPECT_LGGD_ERROR(evaluate(m, g, Eigen::MatrixXd::Random(4, 2), labels, std::vector<std::size_t>{}), EmptySplit);
}

TEST(Logistic, SeparableTwoClass) {
  Eigen::MatrixXd x(40, 2);
  std::vector<int> y(40);
  SplitSpec split;
  for (int i = 0; i < 40; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    x(i, 0) = (i % 2 ? 1.0 : -1.0) * (1.0 + 0.05 * i);
    x(i, 1) = 0.3 * std::sin(i);
    (i < 30 ? split.train : (i < 35 ? split.val : split.test)).push_back(static_cast<std::size_t>(i));
  }
  LogisticConfig cfg;
  cfg.learning_rate = 0.1;
  const auto m = train_logistic(x, y, split, 2, cfg);
  EXPECT_EQ(accuracy(logistic_predict(m, x), y, split.train), 1.0);
  const auto m2 = train_logistic(x, y, split, 2, cfg);
  EXPECT_EQ(m.weight, m2.weight);
}

TEST(Logistic, ZeroFeaturesGiveMajorityRate) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(50, 3);
  std::vector<int> y(50, 0);
  for (std::size_t i = 0; i < 15; ++i) y[i] = 1;
  SplitSpec split;
  for (std::size_t i = 0; i < 50; ++i) split.train.push_back(i);
  const auto m = train_logistic(x, y, split, 2, LogisticConfig{});
  EXPECT_NEAR(accuracy(logistic_predict(m, x), y, split.train), 0.7, 1e-12);
}

TEST(SplitJson, RoundTripAndValidation) {
  SplitSpec s{{0, 1}, {2}, {3, 4}, {{5}, {6, 7}}};
  const auto back = split_from_json(split_to_json(s));
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.new_labels, s.new_labels);
  EXPECT_NO_THROW(back.validate(8));
  EXPECT_LGGD_ERROR(back.validate(7), IndexOutOfRange);
  SplitSpec bad{{0, 1}, {1}, {3}, {}};
  EXPECT_LGGD_ERROR(bad.validate(5), OverlapWithBoundary);
  EXPECT_LGGD_ERROR(split_from_json(R"({"train":[0],"val":[1],"test":[2],"bogus":[]})"), ParseError);
}

TEST(MetricsJson, Fields) {
  Metrics m{0.75, 0.5, 12, 3, "lggd"};
  const auto j = nlohmann::json::parse(metrics_to_json(m));
  EXPECT_EQ(j["accuracy_test"], 0.75);
  EXPECT_EQ(j["accuracy_val"], 0.5);
  EXPECT_EQ(j["epochs_run"], 12);
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(j["feature_variant"], "lggd");
}
