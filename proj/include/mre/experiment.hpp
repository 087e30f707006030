#pragma once

#include <optional>
#include <vector>

#include "mre/config.hpp"
#include "mre/inference.hpp"
#include "mre/metrics.hpp"
#include "mre/rectified.hpp"
#include "mre/surrogate.hpp"
#include "mre/truth.hpp"

namespace mre {

/// c_w after resolving "auto" against the Euler-Bernoulli calibration mesh.
double beam_damping_w(const ExperimentConfig& cfg);

/// Truth or nominal structure. `elements` > 0 overrides the beam mesh.
FEModel build_structure(const ExperimentConfig& cfg, bool truth, int elements = 0);

TruthOptions truth_options(const ExperimentConfig& cfg);

/// Truth response to one excitation with the configured sensors attached.
/// Noise is added only when `noisy` is set.
TruthRecord simulate_excitation(const ExperimentConfig& cfg, const FEModel& truth,
                                const ExcitationSpec& excitation, bool noisy);

/// DOF index sets the error metrics are reported over.
struct DofGroups {
  std::vector<Eigen::Index> sensors;
  std::vector<Eigen::Index> translations;
  std::vector<Eigen::Index> all;
};
DofGroups dof_groups(const FEModel& model, const std::vector<Eigen::Index>& sensor_dofs);

/// NMSE (percent) of an estimate of every DOF against the truth, per group.
struct NmseSet {
  double sensors = 0.0;
  double translations = 0.0;
  double pooled = 0.0;
};
NmseSet nmse_set(const DofGroups& groups, const MatrixXd& truth, const MatrixXd& estimate);

MatrixXd select_columns(const MatrixXd& m, const std::vector<Eigen::Index>& cols);

struct BasisSelection {
  ModalBasis basis;
  Eigen::Index automatic = 0;  // count suggested by the spectrum, 0 when m is fixed
  bool degenerate = false;
};
/// Nominal basis; with modes = auto the count comes from the spectrum of the
/// measured training signals.
BasisSelection build_basis(const ExperimentConfig& cfg, const FEModel& nominal, const MatrixXd& measured);

InferenceData inference_data(const ExperimentConfig& cfg, const ModalBasis& basis,
                             const TruthRecord& record);

struct InferenceResult {
  MapResult map;
  SmoothedTrajectory smoothed;
};
InferenceResult run_inference(const ExperimentConfig& cfg, const InferenceData& data,
                              const std::vector<VectorXd>& warm_starts = {});

/// Surrogate inputs [q, qdot] from the smoothed trajectory.
MatrixXd surrogate_inputs(const SmoothedTrajectory& smoothed);

struct SurrogateFit {
  TrainedSurrogate trained;
  std::optional<SelectionResult> selection;
};
SurrogateFit fit_surrogate(const ExperimentConfig& cfg, const SmoothedTrajectory& smoothed);

RectifiedOptions rectified_options(const ExperimentConfig& cfg);

/// Which optional parts of run_experiment to execute.
struct ExperimentStages {
  bool surrogate = true;
  bool mesh_transfer = true;
  std::vector<VectorXd> warm_starts;
};

/// All stages in memory, for the acceptance runs and tests.
struct ExperimentOutcome {
  FEModel truth, nominal;
  TruthRecord train, test;
  DofGroups groups;
  BasisSelection basis;
  MatrixXd eta_oracle;  // training record
  MatrixXd p_train;
  InferenceResult inference;
  std::optional<SurrogateFit> surrogate;
  NmseSet nominal_train, inference_train;
  NmseSet nominal_test, rectified_test;
  double extrapolation_fraction = 0.0;
  std::optional<NmseSet> mesh_transfer_test;
  double mesh_frequency_difference = 0.0;  // max relative, same retained modes
  double seconds_simulate = 0.0, seconds_infer = 0.0, seconds_train = 0.0, seconds_predict = 0.0;
};
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const ExperimentStages& stages = {});

}  // namespace mre
