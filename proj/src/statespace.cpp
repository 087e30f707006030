#include "mre/statespace.hpp"

#include <cmath>

#include "mre/error.hpp"

namespace mre {

void GPHyperparams::validate() const {
  require(amplitude.size() == length_scale.size() && amplitude.size() > 0,
          ErrorKind::InvalidInput, "hyperparameter vectors must be non-empty and equal length");
  for (Eigen::Index i = 0; i < amplitude.size(); ++i) {
    require(std::isfinite(amplitude(i)) && amplitude(i) > 0.0 && std::isfinite(length_scale(i)) &&
                length_scale(i) > 0.0,
            ErrorKind::InvalidInput, "GP hyperparameters must be positive");
  }
}

VectorXd GPHyperparams::to_log() const {
  VectorXd out(2 * modes());
  out << amplitude.array().log().matrix(), length_scale.array().log().matrix();
  return out;
}

GPHyperparams GPHyperparams::from_log(const VectorXd& log_theta) {
  require(log_theta.size() % 2 == 0, ErrorKind::InvalidInput, "log-theta must have even length");
  const Eigen::Index m = log_theta.size() / 2;
  GPHyperparams theta;
  theta.amplitude = log_theta.head(m).array().exp().matrix();
  theta.length_scale = log_theta.tail(m).array().exp().matrix();
  return theta;
}

GPHyperparams GPHyperparams::uniform(Eigen::Index m, double alpha, double ell) {
  GPHyperparams theta;
  theta.amplitude = VectorXd::Constant(m, alpha);
  theta.length_scale = VectorXd::Constant(m, ell);
  return theta;
}

OuBlock ou_block(double amplitude, double length_scale) {
  require(std::isfinite(amplitude) && amplitude > 0.0 && std::isfinite(length_scale) &&
              length_scale > 0.0,
          ErrorKind::InvalidInput, "OU hyperparameters must be positive");
  return {-1.0 / length_scale, 2.0 * amplitude * amplitude / length_scale};
}

double matern12_spectral_density(double amplitude, double length_scale, double omega) {
  const double lw = length_scale * omega;
  return 2.0 * amplitude * amplitude * length_scale / (1.0 + lw * lw);
}

KernelStateSpace matern12_state_space(double amplitude, double length_scale) {
  const OuBlock ou = ou_block(amplitude, length_scale);
  KernelStateSpace k;
  k.drift = MatrixXd::Constant(1, 1, ou.drift);
  k.noise_gain = MatrixXd::Identity(1, 1);
  k.spectral = MatrixXd::Constant(1, 1, ou.diffusion);
  k.readout = MatrixXd::Identity(1, 1);
  return k;
}

ContinuousSSM assemble_augmented(const ModalBasis& basis, const GPHyperparams& theta,
                                 double jitter) {
  theta.validate();
  const Eigen::Index m = basis.count();
  require(theta.modes() == m, ErrorKind::InvalidInput,
          "hyperparameter count does not match the retained mode count");
  require(jitter >= 0.0, ErrorKind::InvalidInput, "jitter must be non-negative");

  ContinuousSSM ssm;
  ssm.a = MatrixXd::Zero(3 * m, 3 * m);
  ssm.b = MatrixXd::Zero(3 * m, m);
  ssm.q = MatrixXd::Zero(3 * m, 3 * m);
  ssm.a.block(0, m, m, m).setIdentity();
  ssm.a.block(m, 0, m, m) = (-basis.frequencies.array().square()).matrix().asDiagonal();
  ssm.a.block(m, m, m, m) = (-basis.damping).asDiagonal();
  ssm.a.block(m, 2 * m, m, m) = -MatrixXd::Identity(m, m);
  ssm.b.block(m, 0, m, m).setIdentity();
  ssm.q.topLeftCorner(2 * m, 2 * m) = jitter * MatrixXd::Identity(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const KernelStateSpace k = matern12_state_space(theta.amplitude(i), theta.length_scale(i));
    ssm.a(2 * m + i, 2 * m + i) = k.drift(0, 0);
    ssm.q(2 * m + i, 2 * m + i) = k.spectral(0, 0);
  }
  return ssm;
}

ContinuousSSM assemble_modal(const ModalBasis& basis) {
  const Eigen::Index m = basis.count();
  ContinuousSSM ssm;
  ssm.a = MatrixXd::Zero(2 * m, 2 * m);
  ssm.b = MatrixXd::Zero(2 * m, m);
  ssm.q = MatrixXd::Zero(2 * m, 2 * m);
  ssm.a.block(0, m, m, m).setIdentity();
  ssm.a.block(m, 0, m, m) = (-basis.frequencies.array().square()).matrix().asDiagonal();
  ssm.a.block(m, m, m, m) = (-basis.damping).asDiagonal();
  ssm.b.block(m, 0, m, m).setIdentity();
  return ssm;
}

void discretize_input(const MatrixXd& a, const MatrixXd& b, double dt, MatrixXd& ad,
                      MatrixXd& bd) {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidInput, "dt must be positive");
  require(a.rows() == a.cols() && b.rows() == a.rows(), ErrorKind::InvalidInput,
          "state-space dimension mismatch");
  const Eigen::Index n = a.rows();
  const Eigen::Index r = b.cols();
  MatrixXd block = MatrixXd::Zero(n + r, n + r);
  block.topLeftCorner(n, n) = a * dt;
  block.topRightCorner(n, r) = b * dt;
  const MatrixXd e = expm(block);
  ad = e.topLeftCorner(n, n);
  bd = e.topRightCorner(n, r);
}

DiscreteSSM discretize(const ContinuousSSM& ssm, double dt) {
  require(ssm.q.rows() == ssm.a.rows() && ssm.q.cols() == ssm.a.cols(), ErrorKind::InvalidInput,
          "diffusion matrix dimension mismatch");
  DiscreteSSM out;
  out.dt = dt;
  discretize_input(ssm.a, ssm.b, dt, out.a, out.b);

  // Van Loan: expm([[-A, Q], [0, A^T]] h) = [[*, E12], [0, E22]] with
  // E22 = expm(A h)^T and Q_h = E22^T E12. The -A block grows like
  // exp(|lambda| h), so stiff drifts are handled on a halved step and
  // doubled back with Q_2h = E Q_h E^T + Q_h. Q_d is linear in Q, so Q is
  // normalized to keep it out of the expm scaling.
  const Eigen::Index n = ssm.a.rows();
  const double norm = ssm.a.cwiseAbs().colwise().sum().maxCoeff() * dt;
  int halvings = 0;
  while (halvings < 60 && norm / std::ldexp(1.0, halvings) > 4.0) ++halvings;
  const double h = std::ldexp(dt, -halvings);
  MatrixXd block = MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -ssm.a * h;
  const double q_scale = ssm.q.cwiseAbs().maxCoeff();
  const double q_unit = q_scale > 0.0 ? q_scale : 1.0;
  block.topRightCorner(n, n) = ssm.q / q_unit * h;
  block.bottomRightCorner(n, n) = ssm.a.transpose() * h;
  const MatrixXd e = expm(block);
  MatrixXd step = e.bottomRightCorner(n, n).transpose();
  MatrixXd qd = symmetrized(step * e.topRightCorner(n, n)) * q_unit;
  for (int i = 0; i < halvings; ++i) {
    qd = symmetrized(step * qd * step.transpose() + qd);
    step = (step * step).eval();
  }
  out.q = qd;
  return out;
}

}  // namespace mre
