#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "mre/error.hpp"
#include "mre/metrics.hpp"
#include "mre/truth.hpp"

using namespace mre;

namespace {

constexpr double kPi = std::numbers::pi;

MatrixXd noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = g(rng);
  return x;
}

MatrixXd tone(Eigen::Index n, double dt, double omega, double phase = 0.0) {
  MatrixXd x(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) x(k, 0) = std::sin(omega * dt * static_cast<double>(k) + phase);
  return x;
}

Eigen::Index argmax(const VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return i;
}

}  // namespace

TEST(Nmse, Examples) {
  const MatrixXd p = noise(500, 3, 1) + MatrixXd::Constant(500, 3, 2.0);
  EXPECT_EQ(nmse(p, p), 0.0);
  const MatrixXd mean = p.colwise().mean().replicate(500, 1);
  EXPECT_NEAR(nmse(p, mean), 100.0, 1e-10);
  const MatrixXd q = p + 0.1 * noise(500, 3, 2);
  EXPECT_NEAR(nmse(-3.0 * p, -3.0 * q), nmse(p, q), 1e-10);
  EXPECT_GT(nmse(p, q), 0.0);
}

TEST(Nmse, HandComputed) {
  // var(truth) = 1 (population), squared error sum 2 over 4 samples: 50%.
  MatrixXd t(4, 1), e(4, 1);
  t << 1, -1, 1, -1;
  e << 1, -1, 0, 0;
  EXPECT_NEAR(nmse(t, e), 50.0, 1e-12);
  const NmseReport r = nmse_report(t, e);
  EXPECT_EQ(r.samples, 4);
  EXPECT_EQ(r.components, 1);
  EXPECT_NEAR(r.variances(0), 1.0, 1e-15);
}

TEST(Nmse, PermutationSymmetry) {
  const MatrixXd p = noise(300, 4, 3), q = p + 0.3 * noise(300, 4, 4);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  EXPECT_NEAR(nmse(p * perm, q * perm), nmse(p, q), 1e-12);
}

TEST(Nmse, ZeroVarianceExclusion) {
  MatrixXd p = noise(100, 3, 5);
  p.col(1).setConstant(4.0);
  MatrixXd q = p;
  q.col(1).setConstant(100.0);
  const NmseReport r = nmse_report(p, q);
  EXPECT_EQ(r.components, 2);
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0], 1);
  EXPECT_EQ(r.percent, 0.0);
  try {
    nmse(MatrixXd::Ones(10, 2), MatrixXd::Zero(10, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
  }
  EXPECT_THROW(nmse(p, MatrixXd::Zero(100, 2)), Error);
  EXPECT_NEAR(percent_reduction(10.0, 1.0), 90.0, 1e-12);
  EXPECT_THROW(percent_reduction(0.0, 1.0), Error);
}

TEST(Dft, MatchesDirectSumAndParseval) {
  const VectorXd x = noise(96, 1, 6).col(0);
  const Eigen::VectorXcd fx = dft(x);
  ASSERT_EQ(fx.size(), 96);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < 96; ++k) {
    std::complex<double> s = 0.0;
    for (Eigen::Index n = 0; n < 96; ++n)
      s += x(n) * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * n) / 96.0);
    worst = std::max(worst, std::abs(s - fx(k)));
  }
  EXPECT_LT(worst, 1e-10 * x.norm() * 10.0);
  EXPECT_NEAR(fx.squaredNorm(), 96.0 * x.squaredNorm(), 1e-8 * 96.0 * x.squaredNorm());
}

TEST(Spectrum, SinusoidPeak) {
  const double dt = 1e-3, omega = 37.0;
  const Eigen::Index n = 4000;
  MatrixXd x(n, 3);
  for (int c = 0; c < 3; ++c) x.col(c) = tone(n, dt, omega, 0.7 * c);
  const Spectrum s = averaged_log_fft(x, dt);
  ASSERT_EQ(s.omega.size(), n / 2 + 1);
  const double bin = 2.0 * kPi / (dt * static_cast<double>(n));
  EXPECT_NEAR(s.omega(argmax(s.level_db)), omega, bin);
  EXPECT_NEAR(s.hertz(1), 1.0 / (dt * static_cast<double>(n)), 1e-12);
}

TEST(Spectrum, TwoTonesAcrossChannels) {
  const double dt = 1e-3;
  const Eigen::Index n = 4096;
  MatrixXd x(n, 2);
  x.col(0) = tone(n, dt, 60.0) + 1e-3 * noise(n, 1, 7);
  x.col(1) = tone(n, dt, 200.0) + 1e-3 * noise(n, 1, 8);
  const Spectrum s = averaged_log_fft(x, dt);
  const double bin = s.omega(1);
  auto near = [&](double w) {
    const auto i = static_cast<Eigen::Index>(std::round(w / bin));
    return s.level_db.segment(i - 1, 3).maxCoeff();
  };
  double median_db = 0.0;
  {
    std::vector<double> v(s.level_db.data(), s.level_db.data() + s.level_db.size());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    median_db = v[v.size() / 2];
  }
  EXPECT_GT(near(60.0), median_db + 20.0);
  EXPECT_GT(near(200.0), median_db + 20.0);
}

TEST(Spectrum, CircularShiftInvariance) {
  const MatrixXd x = noise(256, 3, 9);
  MatrixXd shifted(256, 3);
  for (Eigen::Index k = 0; k < 256; ++k) shifted.row(k) = x.row((k + 37) % 256);
  const Spectrum a = averaged_log_fft(x, 0.01, Detrend::None);
  const Spectrum b = averaged_log_fft(shifted, 0.01, Detrend::None);
  EXPECT_LT((a.level_db - b.level_db).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectrum, InputValidation) {
  EXPECT_THROW(averaged_log_fft(MatrixXd::Ones(32, 1), 0.01), Error);
  EXPECT_THROW(averaged_log_fft(MatrixXd::Ones(100, 1), 0.0), Error);
  VectorXd t = VectorXd::LinSpaced(100, 0.0, 0.99);
  const MatrixXd x = noise(100, 1, 1);
  EXPECT_NO_THROW(averaged_log_fft(x, t));
  t(50) += 0.003;
  EXPECT_THROW(averaged_log_fft(x, t), Error);
}

TEST(Frf, SdofOffResonance) {
  const double mass = 1.0, wn = 2.0 * kPi * 5.0, zeta = 0.05;
  FEModel m = assemble_shear_building(ShearBuildingSpec::uniform(1, mass, wn * wn));
  m.damping = build_modal_damping(m.mass, m.stiffness, std::vector<double>{zeta});
  const double dt = 0.005;
  const MatrixXd f = noise(80000, 1, 10);
  const TruthRecord r = simulate_truth(m, {}, f, dt, {TruthIntegrator::ExactLinear, 10, true});
  const Spectrum s = frf_mean_log(f, r.displacement, dt, 0.5, 20.0);
  int checked = 0;
  for (Eigen::Index i = 0; i < s.hertz.size(); ++i) {
    const double hz = s.hertz(i);
    if (std::abs(hz - 5.0) < 1.5) continue;
    const double w = s.omega(i);
    // Held force: the sampled transfer function carries the hold and the
    // exact discrete response, close to the continuous one at these rates.
    const double h = 1.0 / std::hypot(wn * wn - w * w, 2.0 * zeta * wn * w);
    EXPECT_NEAR(std::pow(10.0, s.level_db(i) / 20.0) / h, 1.0, 0.05) << hz << " Hz";
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Frf, IdenticalSignalsGiveIdenticalCurves) {
  const MatrixXd f = noise(4096, 1, 11), y = noise(4096, 2, 12);
  const Spectrum a = frf_mean_log(f, y, 0.01, 1.0, 40.0);
  const Spectrum b = frf_mean_log(f, y, 0.01, 1.0, 40.0);
  EXPECT_TRUE(a.level_db == b.level_db);
  EXPECT_GE(a.hertz.minCoeff(), 1.0);
  EXPECT_LE(a.hertz.maxCoeff(), 40.0);
}

TEST(Frf, DamageLowersResonance) {
  const double dt = 0.01;
  const MatrixXd f = noise(40000, 1, 13);
  auto first_peak = [&](std::optional<int> story) {
    ShearBuildingSpec spec = ShearBuildingSpec::uniform(3, 1e3, 1e6);
    spec.damage_story = story;
    spec.damage_fraction = story ? 0.3 : 0.0;
    FEModel m = assemble_shear_building(spec);
    m.damping = build_modal_damping(m.mass, m.stiffness, std::vector<double>{0.02});
    MatrixXd force = MatrixXd::Zero(f.rows(), 3);
    force.col(0) = f.col(0);
    const TruthRecord r = simulate_truth(m, {}, force, dt, {TruthIntegrator::ExactLinear, 10, true});
    const Spectrum s = frf_mean_log(f, r.displacement, dt, 0.5, 10.0);
    return s.hertz(argmax(s.level_db));
  };
  const double healthy = first_peak(std::nullopt), damaged = first_peak(1);
  // First mode of the uniform building: 2 sqrt(k/m) sin(pi/14) / (2 pi).
  EXPECT_NEAR(healthy, 2.0 * std::sqrt(1e3) * std::sin(kPi / 14.0) / (2.0 * kPi), 0.05);
  EXPECT_LT(damaged, healthy);
}
