#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mre/modal.hpp"
#include "mre/structural.hpp"

namespace mre {

/// Point load A sin(w t + phase) at the DOF nearest to (x, kind).
struct SinusoidalLoad {
  double x = 0.0;
  DofKind kind = DofKind::Translation;
  double amplitude = 0.0;  // N
  double omega = 0.0;      // rad/s
  double phase = 0.0;      // rad
};

/// Band-limited Gaussian load: white noise through 4th-order Butterworth
/// filters, rescaled to a sample standard deviation of `scale`.
struct FilteredNoiseLoad {
  double x = 0.0;
  DofKind kind = DofKind::Translation;
  double band_low = 0.0;    // Hz, 0 disables the high-pass stage
  double band_high = 30.0;  // Hz
  std::uint64_t seed = 0;
  double scale = 1.0;       // N
};

struct ExcitationSpec {
  std::vector<SinusoidalLoad> sinusoids;
  std::vector<FilteredNoiseLoad> noise_loads;
  double duration = 4.0;  // s
  double dt = 1e-3;       // s

  /// Number of samples N_t = duration / dt; grid is t_k = k dt, k < N_t.
  Eigen::Index sample_count() const;
  void validate() const;
};

struct NonlinearRestoringSpec {
  enum class Kind { None, CubicStiffness } kind = Kind::None;
  double cubic_coefficient = 0.0;  // N/m^3, on translational DOFs

  bool is_linear() const { return kind == Kind::None || cubic_coefficient == 0.0; }
  void validate() const;
};

struct SensorSpec {
  std::vector<double> coordinates;  // m, translation sensors
  double noise_percent = 0.0;
  std::uint64_t seed = 0;
};

struct TruthRecord {
  VectorXd time;
  MatrixXd displacement;  // N_t x N
  MatrixXd velocity;
  MatrixXd acceleration;
  MatrixXd force;
  std::vector<Eigen::Index> sensor_dofs;
  MatrixXd clean;         // N_t x N_m
  MatrixXd noisy;
  double noise_std = 0.0;
  int substeps = 0;

  double dt() const { return time.size() > 1 ? time(1) - time(0) : 0.0; }
  Eigen::Index sample_count() const { return time.size(); }
};

enum class TruthIntegrator {
  /// Classical RK4 on the first-order form, force held over each sample.
  RungeKutta4,
  /// Exact ZOH propagation; linear models only.
  ExactLinear,
};

struct TruthOptions {
  TruthIntegrator integrator = TruthIntegrator::RungeKutta4;
  int substep_factor = 10;
  /// Raise the substep count until h * |lambda|_max stays below this bound.
  bool stability_substeps = true;
};

/// Sampled force history f(t_k), N_t x N.
MatrixXd build_force_series(const FEModel& model, const ExcitationSpec& excitation);

/// Integrates M u'' + C u' + K u + g(u) = f from zero initial conditions with
/// the force held constant over every sample interval. Acceleration at each
/// sample is recomputed from the equation of motion.
TruthRecord simulate_truth(const FEModel& model, const NonlinearRestoringSpec& restoring,
                           const ExcitationSpec& excitation, const TruthOptions& options = {});

/// Same, from a precomputed force series (rows = samples).
TruthRecord simulate_truth(const FEModel& model, const NonlinearRestoringSpec& restoring,
                           const MatrixXd& force, double dt, const TruthOptions& options = {});

/// Smallest RK4 substep count per sample keeping h |lambda|_max <= 2.
int stable_substeps(const FEModel& model, double dt, int minimum);

/// Snap sensors to translation DOFs (within half a node spacing) and add
/// i.i.d. noise with the shared standard deviation
///   sigma_n = p/100 * mean_i sqrt(mean_k u_i(t_k)^2).
TruthRecord apply_sensors_and_noise(const TruthRecord& truth, const FEModel& model,
                                    const SensorSpec& sensors);

std::vector<Eigen::Index> snap_sensors(const FEModel& model, const std::vector<double>& coordinates);

/// eta(t_k) = Phi^T [f - M a - C v - K u] using nominal matrices and the
/// true response; N_t x m.
MatrixXd true_discrepancy_oracle(const FEModel& nominal, const ModalBasis& basis,
                                 const TruthRecord& truth);

/// Cascaded 4th-order Butterworth filter (bilinear transform, prewarped).
/// A non-positive cutoff disables that stage.
VectorXd butterworth_filter(const VectorXd& signal, double dt, double low_hz, double high_hz);

}  // namespace mre
