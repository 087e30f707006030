#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mre/error.hpp"
#include "mre/surrogate.hpp"

using namespace mre;

namespace {

MatrixXd random_inputs(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = 3.0 * j + (1.0 + j) * g(rng);
  return x;
}

// Teacher of the same architecture with non-trivial normalizers.
Surrogate teacher(Eigen::Index n_in, Eigen::Index hidden, Eigen::Index n_out, std::uint64_t seed) {
  Surrogate t = Surrogate::random(n_in, hidden, n_out, seed);
  t.w1 *= 3.0;
  t.w2 *= 2.0;
  t.input = Normalizer::fit(random_inputs(500, n_in, seed + 1));
  t.output.mean = VectorXd::LinSpaced(n_out, -1.0, 1.0);
  t.output.std = VectorXd::Constant(n_out, 5.0);
  t.output.constant.assign(static_cast<std::size_t>(n_out), false);
  return t;
}

double output_variance(const MatrixXd& y) {
  const Eigen::RowVectorXd mean = y.colwise().mean();
  return (y.rowwise() - mean).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

TEST(Normalizer, RoundTripAndConstantColumns) {
  MatrixXd x = random_inputs(200, 3, 1);
  x.col(1).setConstant(7.0);
  const Normalizer n = Normalizer::fit(x);
  EXPECT_TRUE(n.constant[1]);
  EXPECT_FALSE(n.constant[0]);
  EXPECT_EQ(n.std(1), 1.0);
  EXPECT_LE((n.denormalize(n.normalize(x)) - x).cwiseAbs().maxCoeff(), 1e-12 * x.cwiseAbs().maxCoeff());
  const MatrixXd z = n.normalize(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-12);
  EXPECT_NEAR(z.col(2).squaredNorm() / 200.0, 1.0, 1e-12);
  EXPECT_THROW(n.normalize(MatrixXd::Zero(2, 2)), Error);
}

TEST(Surrogate, ZeroNetworkGivesOutputMean) {
  Surrogate s = Surrogate::zero(4, 6, 2);
  s.output.mean << 3.0, -2.0;
  s.output.std << 10.0, 0.1;
  const MatrixXd out = s.evaluate(random_inputs(5, 4, 2));
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(out(i, 0), 3.0);
    EXPECT_DOUBLE_EQ(out(i, 1), -2.0);
  }
  EXPECT_TRUE(s.evaluate(s.input.mean).allFinite());
  EXPECT_THROW(s.evaluate(VectorXd(VectorXd::Zero(3))), Error);
}

TEST(Surrogate, InputJacobianMatchesFiniteDifferences) {
  const Surrogate s = teacher(4, 7, 3, 5);
  const MatrixXd xs = random_inputs(10, 4, 6);
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    const VectorXd x = xs.row(r).transpose();
    const MatrixXd jac = s.input_jacobian(x);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double h = 1e-5 * s.input.std(j);
      VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const VectorXd fd = (s.evaluate(xp) - s.evaluate(xm)) / (2.0 * h);
      for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(jac(i, j), fd(i), 1e-6 * std::max(std::abs(fd(i)), jac.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST(Surrogate, BatchGradientMatchesFiniteDifferences) {
  Surrogate s = Surrogate::random(3, 5, 2, 9);
  const MatrixXd xn = random_inputs(40, 3, 10) / 4.0;
  const MatrixXd yn = random_inputs(40, 2, 11) / 4.0;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < 40; i += 2) rows.push_back(i);
  const double l2 = 1e-3;
  const Gradient g = batch_gradient(s, xn, yn, rows, l2, Execution::Serial);
  auto loss = [&](const Surrogate& net) { return batch_gradient(net, xn, yn, rows, l2, Execution::Serial).loss; };
  // l2 enters the objective, not the reported loss.
  auto objective = [&](const Surrogate& net) {
    return loss(net) + l2 * (net.w1.squaredNorm() + net.w2.squaredNorm());
  };
  const double h = 1e-6;
  auto check = [&](auto member, const auto& analytic) {
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      Surrogate p = s, m = s;
      (p.*member)(i) += h;
      (m.*member)(i) -= h;
      const double fd = (objective(p) - objective(m)) / (2.0 * h);
      EXPECT_NEAR(analytic(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  };
  check(&Surrogate::w1, g.w1.reshaped());
  check(&Surrogate::b1, g.b1);
  check(&Surrogate::w2, g.w2.reshaped());
  check(&Surrogate::b2, g.b2);
}

TEST(Surrogate, SerialAndParallelGradientsIdentical) {
  const Surrogate s = Surrogate::random(8, 50, 4, 3);
  const MatrixXd xn = random_inputs(3000, 8, 4) / 10.0;
  const MatrixXd yn = random_inputs(3000, 4, 5) / 10.0;
  std::vector<Eigen::Index> rows(3000);
  for (Eigen::Index i = 0; i < 3000; ++i) rows[static_cast<std::size_t>(i)] = (i * 7) % 3000;
  const Gradient a = batch_gradient(s, xn, yn, rows, 1e-6, Execution::Serial);
  const Gradient b = batch_gradient(s, xn, yn, rows, 1e-6, Execution::Parallel);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_EQ(a.b2, b.b2);
}

TEST(Surrogate, JsonRoundTripIsExact) {
  Surrogate s = teacher(6, 11, 3, 21);
  s.input_min = VectorXd::Constant(6, -1.5);
  s.input_max = VectorXd::Constant(6, 2.5);
  s.input.constant[2] = true;
  const Surrogate back = surrogate_from_json(to_json(s));
  const MatrixXd x = random_inputs(100, 6, 22);
  EXPECT_EQ(s.evaluate(x), back.evaluate(x));
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.input_min, s.input_min);
  EXPECT_TRUE(back.input.constant[2]);
  EXPECT_THROW(surrogate_from_json("{\"format\": \"other\"}"), Error);
  EXPECT_THROW(surrogate_from_json("not json"), Error);
}

TEST(Training, TeacherStudentRealizable) {
  const Surrogate t = teacher(4, 6, 2, 31);
  const MatrixXd x = random_inputs(2000, 4, 32);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.seed = 4;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 3000;
  cfg.patience = 200;
  const TrainedSurrogate s = train(x, y, 12, cfg);
  const MatrixXd val_x = x.bottomRows(400), val_y = y.bottomRows(400);
  const double mse = (s.model.evaluate(val_x) - val_y).squaredNorm() / static_cast<double>(val_y.size());
  EXPECT_LE(mse, 1e-3 * output_variance(y));
}

TEST(Training, BestWeightsAreReturned) {
  const Surrogate t = teacher(3, 4, 1, 41);
  const MatrixXd x = random_inputs(600, 3, 42);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.max_epochs = 150;
  cfg.patience = 20;
  const TrainedSurrogate s = train(x, y, 8, cfg);
  const auto& r = s.report;
  ASSERT_EQ(static_cast<int>(r.val_loss.size()), r.epochs_run);
  for (std::size_t i = 1; i < r.best_val_so_far.size(); ++i) EXPECT_LE(r.best_val_so_far[i], r.best_val_so_far[i - 1]);
  EXPECT_EQ(r.best_val, r.val_loss[static_cast<std::size_t>(r.best_epoch)]);
  const double val = normalized_mse(s.model, x.bottomRows(120), y.bottomRows(120));
  EXPECT_NEAR(val, r.best_val, 1e-12 * std::max(1.0, r.best_val));
}

TEST(Training, ConstantTarget) {
  const MatrixXd x = random_inputs(400, 3, 51);
  const MatrixXd y = MatrixXd::Constant(400, 2, 4.25);
  TrainingConfig cfg;
  cfg.max_epochs = 50;
  const TrainedSurrogate s = train(x, y, 5, cfg);
  const MatrixXd out = s.model.evaluate(x);
  EXPECT_LE((out.array() - 4.25).abs().maxCoeff(), 0.01 * 4.25);
}

TEST(Training, HeavyRegularizationGivesMean) {
  const Surrogate t = teacher(3, 4, 2, 61);
  const MatrixXd x = random_inputs(400, 3, 62);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.l2 = 1e6;
  cfg.max_epochs = 300;
  cfg.learning_rate = 1e-2;
  const TrainedSurrogate s = train(x, y, 6, cfg);
  EXPECT_LT(s.model.w1.cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(s.model.w2.cwiseAbs().maxCoeff(), 1e-3);
  const MatrixXd out = s.model.evaluate(x);
  const Eigen::RowVectorXd mean = y.topRows(320).colwise().mean();
  const Eigen::RowVectorXd sd = ((y.topRows(320).rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < 2; ++j)
    EXPECT_LE((out.col(j).array() - mean(j)).abs().maxCoeff(), 0.05 * sd(j));
}

TEST(Training, SerialAndParallelIdentical) {
  const Surrogate t = teacher(4, 5, 2, 71);
  const MatrixXd x = random_inputs(1500, 4, 72);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.max_epochs = 20;
  const TrainedSurrogate a = train(x, y, 10, cfg, Execution::Serial);
  const TrainedSurrogate b = train(x, y, 10, cfg, Execution::Parallel);
  EXPECT_EQ(a.model.w1, b.model.w1);
  EXPECT_EQ(a.model.w2, b.model.w2);
  EXPECT_EQ(a.report.val_loss, b.report.val_loss);
}

TEST(Training, SeedStability) {
  const Surrogate t = teacher(4, 5, 2, 81);
  const MatrixXd x = random_inputs(1500, 4, 82);
  MatrixXd y = t.evaluate(x);
  // Noisy targets, so the validation error has a floor both seeds reach.
  std::mt19937_64 rng(83);
  std::normal_distribution<double> g(0.0, 0.5);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += g(rng);
  TrainingConfig cfg;
  cfg.max_epochs = 400;
  cfg.patience = 100;
  cfg.seed = 1;
  const double a = train(x, y, 20, cfg).report.best_val;
  cfg.seed = 2;
  const double b = train(x, y, 20, cfg).report.best_val;
  EXPECT_LT(std::abs(a - b), 0.25 * std::max(a, b));
}

TEST(Training, DivergenceIsReported) {
  const MatrixXd x = random_inputs(300, 2, 91);
  const MatrixXd y = random_inputs(300, 1, 92);
  TrainingConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.max_epochs = 50;
  try {
    train(x, y, 4, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TrainingDiverged);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
  EXPECT_THROW(train(x.topRows(50), y.topRows(50), 4, TrainingConfig{}), Error);
  TrainingConfig bad;
  bad.validation_fraction = 0.6;
  EXPECT_THROW(train(x, y, 4, bad), Error);
}

TEST(Selection, PrefersAdequateWidth) {
  const Surrogate t = teacher(4, 30, 2, 101);
  const MatrixXd x = random_inputs(1000, 4, 102);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.max_epochs = 150;
  cfg.learning_rate = 3e-3;
  cfg.folds = 3;
  const SelectionResult r = select_hidden_size(x, y, {2, 30}, cfg);
  EXPECT_EQ(r.hidden, 30);
  EXPECT_LT(r.mean_val_mse[1], r.mean_val_mse[0]);
  const SelectionResult single = select_hidden_size(x, y, {7}, cfg);
  EXPECT_EQ(single.hidden, 7);
  EXPECT_THROW(select_hidden_size(x, y, {}, cfg), Error);
}

TEST(Selection, SerialEqualsParallel) {
  const Surrogate t = teacher(3, 5, 1, 111);
  const MatrixXd x = random_inputs(500, 3, 112);
  const MatrixXd y = t.evaluate(x);
  TrainingConfig cfg;
  cfg.max_epochs = 30;
  cfg.folds = 3;
  const SelectionResult a = select_hidden_size(x, y, {3, 6}, cfg, Execution::Serial);
  const SelectionResult b = select_hidden_size(x, y, {3, 6}, cfg, Execution::Parallel);
  EXPECT_EQ(a.mean_val_mse, b.mean_val_mse);
  EXPECT_EQ(a.hidden, b.hidden);
}
