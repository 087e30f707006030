#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mre/error.hpp"
#include "mre/metrics.hpp"
#include "mre/modal.hpp"
#include "mre/structural.hpp"

using namespace mre;

TEST(SolveModes, MassNormalizedAndOrdered) {
  const FEModel m = assemble_timoshenko(BeamProperties{}, 30);
  const ModalBasis b = solve_modes(m, 6);
  const MatrixXd mm = b.shapes.transpose() * m.mass * b.shapes;
  const MatrixXd kk = b.shapes.transpose() * m.stiffness * b.shapes;
  EXPECT_LE(norm_inf(mm - MatrixXd::Identity(6, 6)), 1e-8);
  const MatrixXd w2 = b.frequencies.array().square().matrix().asDiagonal();
  EXPECT_LE(norm_inf(kk - w2) / w2.maxCoeff(), 1e-6);
  for (int i = 1; i < 6; ++i) EXPECT_GT(b.frequencies(i), b.frequencies(i - 1));
}

TEST(SolveModes, SignConvention) {
  const ModalBasis b = solve_modes(assemble_euler_bernoulli(BeamProperties{}, 20), 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    Eigen::Index k;
    b.shapes.col(j).cwiseAbs().maxCoeff(&k);
    EXPECT_GT(b.shapes(k, j), 0.0);
  }
  MatrixXd flipped = -b.shapes;
  fix_mode_signs(flipped);
  EXPECT_EQ((flipped - b.shapes).norm(), 0.0);
}

TEST(SolveModes, CompleteBasis) {
  const FEModel m = assemble_shear_building(ShearBuildingSpec::uniform(5, 2.0, 30.0));
  const ModalBasis b = solve_modes(m, 5);
  EXPECT_LE(norm_inf(b.shapes.transpose() * m.mass * b.shapes - MatrixXd::Identity(5, 5)), 1e-12);
  EXPECT_THROW(solve_modes(m, 6), Error);
  EXPECT_THROW(solve_modes(m, 0), Error);
}

TEST(SolveModes, TwoStoryBuilding) {
  const ModalBasis b = solve_modes(assemble_shear_building(ShearBuildingSpec::uniform(2, 1.0, 1.0)), 2);
  EXPECT_NEAR(b.frequencies(0) * b.frequencies(0), (3 - std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_NEAR(b.frequencies(1) * b.frequencies(1), (3 + std::sqrt(5.0)) / 2, 1e-12);
}

TEST(SolveModes, DampingRules) {
  FEModel m = assemble_shear_building(ShearBuildingSpec::uniform(3, 1.0, 10.0));
  // No damping matrix: the extract rule falls back to 2%.
  EXPECT_NEAR(solve_modes(m, 3).damping_ratios().maxCoeff(), kDefaultModalDampingRatio, 1e-14);
  EXPECT_NEAR(solve_modes(m, 3).damping_ratios().minCoeff(), kDefaultModalDampingRatio, 1e-14);
  const ModalBasis r = solve_modes(m, 3, ModalDampingRule::from_ratios({0.01, 0.03}));
  EXPECT_NEAR(r.damping_ratios()(0), 0.01, 1e-14);
  EXPECT_NEAR(r.damping_ratios()(2), 0.03, 1e-14);
  const ModalBasis plain = solve_modes(m, 3);
  m.damping = build_rayleigh_damping(m.mass, m.stiffness, {0.05, plain.frequencies(0), 0.05, plain.frequencies(2)});
  const ModalBasis x = solve_modes(m, 3);
  EXPECT_NEAR(x.damping_ratios()(0), 0.05, 1e-12);
  EXPECT_NEAR(x.damping_ratios()(2), 0.05, 1e-12);
  EXPECT_LT(x.damping_ratios()(1), 0.05);
  EXPECT_NEAR(x.damping(0), 2 * 0.05 * x.frequencies(0), 1e-12);
}

TEST(ModalMesh, FrequenciesAndSensorRowsAgreeAcrossMeshes) {
  BeamProperties p;
  const FEModel coarse = assemble_euler_bernoulli(p, 50);
  const FEModel fine = assemble_euler_bernoulli(p, 100);
  const ModalBasis a = solve_modes(coarse, 4), b = solve_modes(fine, 4);
  EXPECT_LT(((a.frequencies - b.frequencies).array() / b.frequencies.array()).abs().maxCoeff(), 1e-3);
  for (double x : {1.0, 3.0, 5.0, 7.0, 9.0}) {
    const auto i = *coarse.find_dof(x, DofKind::Translation, 1e-9);
    const auto j = *fine.find_dof(x, DofKind::Translation, 1e-9);
    for (int mode = 0; mode < 4; ++mode) {
      const double scale = a.shapes.col(mode).cwiseAbs().maxCoeff();
      EXPECT_NEAR(a.shapes(i, mode), b.shapes(j, mode), 5e-3 * scale) << "x=" << x << " mode " << mode;
    }
  }
}

TEST(Projection, ForceAndDisplacement) {
  const FEModel m = assemble_euler_bernoulli(BeamProperties{}, 12);
  const ModalBasis b = solve_modes(m, 4);
  // f = M phi_i projects to e_i.
  MatrixXd f = (m.mass * b.shapes.col(2)).transpose();
  const MatrixXd p = project_force(b, f);
  EXPECT_NEAR(p(0, 2), 1.0, 1e-10);
  EXPECT_NEAR(p(0, 0), 0.0, 1e-10);
  EXPECT_EQ(project_force(b, MatrixXd::Zero(3, m.n_dof())).norm(), 0.0);
  // A point load F at DOF j gives p_i = phi_ji F.
  MatrixXd point = MatrixXd::Zero(1, m.n_dof());
  point(0, 7) = 250.0;
  const MatrixXd pp = project_force(b, point);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(pp(0, i), 250.0 * b.shapes(7, i), 1e-9);
  EXPECT_THROW(project_force(b, MatrixXd::Zero(1, 3)), Error);

  // Reconstruct and project back is the identity on span(Phi).
  MatrixXd q(2, 4);
  q << 1.0, -2.0, 0.5, 3.0, 0.1, 0.2, 0.3, 0.4;
  const MatrixXd u = reconstruct(b, q);
  EXPECT_LE((project_displacement(b, m.mass, u) - q).norm(), 1e-10);
  const std::vector<Eigen::Index> dofs{3, 9};
  const MatrixXd part = reconstruct(b, q, dofs);
  EXPECT_LE((part.col(1) - u.col(9)).norm(), 1e-15);
  EXPECT_THROW(reconstruct(b, MatrixXd::Zero(2, 3)), Error);
}

TEST(SelectModeCount, PicksPeaksAboveFloor) {
  // Synthetic response with tones at three of five "natural" frequencies.
  const double dt = 1e-3;
  const int n = 4000;
  VectorXd nat(5);
  nat << 50.0, 120.0, 300.0, 700.0, 1500.0;
  MatrixXd sig(n, 2);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    sig(k, 0) = std::sin(nat(0) * t) + 0.5 * std::sin(nat(1) * t);
    sig(k, 1) = 0.2 * std::sin(nat(2) * t);
  }
  const Spectrum s = averaged_log_fft(sig, dt);
  bool degenerate = true;
  EXPECT_EQ(select_mode_count(s, nat, 10.0, &degenerate), 3);
  EXPECT_FALSE(degenerate);
  // Monotone in the floor.
  Eigen::Index previous = 100;
  for (double floor_db : {0.0, 10.0, 20.0, 40.0, 80.0, 200.0}) {
    const Eigen::Index m = select_mode_count(s, nat, floor_db);
    EXPECT_LE(m, previous);
    previous = m;
  }
}

TEST(SelectModeCount, FlatSpectrumGivesOne) {
  const Spectrum s = averaged_log_fft(MatrixXd::Zero(256, 3), 1e-3);
  VectorXd nat(3);
  nat << 100.0, 200.0, 300.0;
  bool degenerate = false;
  EXPECT_EQ(select_mode_count(s, nat, 10.0, &degenerate), 1);
  EXPECT_TRUE(degenerate);
  EXPECT_THROW(select_mode_count(Spectrum{}, nat, 10.0), Error);
}
