#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/modal.hpp"
#include "mre/parallel.hpp"
#include "mre/statespace.hpp"

namespace mre {

/// y_k = C z_k + v_k with C = [S Phi, 0, 0] and R = sigma_R^2 I.
struct MeasurementModel {
  std::vector<Eigen::Index> sensor_dofs;
  MatrixXd c;  // N_y x state dimension
  MatrixXd r;  // N_y x N_y

  Eigen::Index outputs() const { return c.rows(); }
};

/// Observation of the q block of an augmented (3m) or plain modal (2m) state.
MeasurementModel make_measurement(const ModalBasis& basis, const std::vector<Eigen::Index>& dofs,
                                  double noise_std, Eigen::Index state_dim);

struct GaussianBelief {
  VectorXd mean;
  MatrixXd cov;
};

/// Zero mean, covariance blockdiag(sigma_q^2 I_2m, diag(alpha_i^2)).
GaussianBelief default_prior(const GPHyperparams& theta, double sigma_q2 = 1e-6);

struct FilterResult {
  std::vector<VectorXd> predicted_mean;  // prior for step k (k = 0 is the initial belief)
  std::vector<MatrixXd> predicted_cov;
  std::vector<VectorXd> filtered_mean;
  std::vector<MatrixXd> filtered_cov;
  MatrixXd innovations;                  // N_t x N_y
  std::vector<MatrixXd> innovation_cov;
  double log_likelihood = 0.0;
};

/// Kalman filter on rows y.row(k) with deterministic input p.row(k). The
/// first measurement updates the prior directly; afterwards
///   z_k^- = A z_{k-1} + B p_{k-1}.
/// Covariance updates use the Joseph form.
FilterResult kalman_filter(const DiscreteSSM& ssm, const MeasurementModel& meas, const MatrixXd& y,
                           const MatrixXd& p, const GaussianBelief& prior);

/// Log-likelihood only. Once the predicted covariance stops changing (relative
/// max-norm change below steady_tol), the gain is frozen and only the mean
/// recursion runs. steady_tol <= 0 disables the shortcut.
double kalman_log_likelihood(const DiscreteSSM& ssm, const MeasurementModel& meas,
                             const MatrixXd& y, const MatrixXd& p, const GaussianBelief& prior,
                             double steady_tol = 1e-13);

struct SmoothedTrajectory {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> cov;
  MatrixXd q, qdot, eta;              // N_t x m smoothed means
  MatrixXd q_std, qdot_std, eta_std;  // marginal standard deviations
  MatrixXd filtered_variance;         // N_t x state dimension, diagonal of filtered cov
  MatrixXd smoothed_variance;

  Eigen::Index modes() const { return q.cols(); }
};

SmoothedTrajectory rts_smoother(const DiscreteSSM& ssm, const FilterResult& filtered);

/// Student-t density with location mu, squared scale v and nu degrees of freedom.
struct StudentT {
  double mu = 0.0;
  double v = 1.0;
  double nu = 1.0;

  double log_pdf(double x) const;
};

struct PriorSpec {
  StudentT amplitude{1e4, 1e2, 1.0};
  StudentT length_scale{0.1, 1e-2, 1.0};
};

double log_prior(const GPHyperparams& theta, const PriorSpec& priors);

/// Everything the objective needs apart from theta.
struct InferenceData {
  ModalBasis basis;
  std::vector<Eigen::Index> sensor_dofs;
  MatrixXd y;  // N_t x N_y
  MatrixXd p;  // N_t x m
  double dt = 0.0;
  double noise_std = 0.0;
  double jitter = kDefaultJitter;
  double prior_state_var = 1e-6;
  double steady_tol = 1e-13;

  void validate() const;
};

/// Measurement noise actually used: max(noise_std, floor_rel * RMS(y)).
double effective_noise_std(const InferenceData& data, double floor_rel);

double log_likelihood(const GPHyperparams& theta, const InferenceData& data, double noise_std);

/// log-likelihood + log-prior; filter failures return -infinity.
double log_posterior(const GPHyperparams& theta, const PriorSpec& priors, const InferenceData& data,
                     double noise_std);

struct NelderMeadOptions {
  int max_evaluations = 3000;
  double initial_step = 0.5;
  double f_tol = 1e-7;  // absolute spread of simplex values
  double x_tol = 1e-5;  // simplex diameter in log coordinates
};

struct OptimizationTrace {
  VectorXd start;  // log theta
  VectorXd best;
  double start_value = 0.0;
  double best_value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> history;  // best value after each iteration
};

/// Maximizes f with the Nelder-Mead simplex method.
OptimizationTrace nelder_mead_maximize(const std::function<double(const VectorXd&)>& f,
                                       const VectorXd& start, const NelderMeadOptions& options);

struct MapOptions {
  int starts = 5;
  std::uint64_t seed = 0;
  double start_spread = 1.0;    // std of the lognormal start perturbation
  double noise_floor_rel = 1e-4;
  bool estimate_noise = false;  // adds log sigma_R as a free variable
  NelderMeadOptions nelder_mead;
  std::vector<VectorXd> warm_starts;  // log theta, run in addition to `starts`
  Execution execution = Execution::Parallel;
};

struct MapResult {
  GPHyperparams theta;
  double log_posterior = 0.0;
  double noise_std = 0.0;
  int best_start = 0;
  std::vector<OptimizationTrace> traces;
};

/// Deterministic start points in log coordinates: the prior modes first, then
/// lognormal perturbations of them.
std::vector<VectorXd> map_start_points(Eigen::Index modes, const PriorSpec& priors,
                                       const MapOptions& options);

MapResult map_optimize(const InferenceData& data, const PriorSpec& priors, const MapOptions& options);

/// Filter and smooth with fixed hyperparameters.
SmoothedTrajectory smooth(const GPHyperparams& theta, const InferenceData& data, double noise_std);

}  // namespace mre
