#pragma once

#include "mre/linalg.hpp"
#include "mre/modal.hpp"

namespace mre {

/// Per-mode Matern-1/2 hyperparameters. Optimizers work on log values.
struct GPHyperparams {
  VectorXd amplitude;     // alpha_i, modal force units
  VectorXd length_scale;  // ell_i, s

  Eigen::Index modes() const { return amplitude.size(); }
  void validate() const;

  /// [log alpha_1..m, log ell_1..m]
  VectorXd to_log() const;
  static GPHyperparams from_log(const VectorXd& log_theta);
  static GPHyperparams uniform(Eigen::Index m, double alpha, double ell);
};

/// Drift f and white-noise spectral density q of one Ornstein-Uhlenbeck
/// process d eta = f eta dt + dW, E[dW^2] = q dt.
struct OuBlock {
  double drift;
  double diffusion;

  double stationary_variance() const { return diffusion / (-2.0 * drift); }
};

OuBlock ou_block(double amplitude, double length_scale);

/// Spectral density of the exponential kernel: S(w) = 2 alpha^2 ell / (1 + (ell w)^2).
double matern12_spectral_density(double amplitude, double length_scale, double omega);

/// Companion-form state-space model of a scalar stationary GP:
/// dx = F x dt + L dW (E[dW dW^T] = Qc dt), value = H x. Higher-order Matern
/// kernels plug in here; only the exponential kernel is provided.
struct KernelStateSpace {
  MatrixXd drift;      // F
  MatrixXd noise_gain; // L
  MatrixXd spectral;   // Qc
  MatrixXd readout;    // H (1 x order)

  Eigen::Index order() const { return drift.rows(); }
};

KernelStateSpace matern12_state_space(double amplitude, double length_scale);

/// Continuous linear SDE dz = A z dt + B p dt + dW with E[dW dW^T] = Q dt.
struct ContinuousSSM {
  MatrixXd a;
  MatrixXd b;
  MatrixXd q;
};

/// z_{k+1} = A z_k + B p_k + w_k, w_k ~ N(0, Q_d).
struct DiscreteSSM {
  MatrixXd a;
  MatrixXd b;
  MatrixXd q;
  double dt = 0.0;
};

inline constexpr double kDefaultJitter = 1e-12;

/// Augmented [q, qdot, eta] model:
///   A = [0 I 0; -Omega^2 -Xi -I; 0 0 F],  B = [0; I; 0],
///   Q = blockdiag(jitter I_2m, diag(2 alpha_i^2 / ell_i)).
ContinuousSSM assemble_augmented(const ModalBasis& basis, const GPHyperparams& theta,
                                 double jitter = kDefaultJitter);

/// [q, qdot] modal model without latent forces (no process noise).
ContinuousSSM assemble_modal(const ModalBasis& basis);

/// Zero-order-hold discretization. B comes from the top-right block of
/// expm([[A, B], [0, 0]] dt); Q_d from Van Loan's block exponential.
DiscreteSSM discretize(const ContinuousSSM& ssm, double dt);

/// ZOH transition and input matrices only (no noise term).
void discretize_input(const MatrixXd& a, const MatrixXd& b, double dt, MatrixXd& ad, MatrixXd& bd);

}  // namespace mre
