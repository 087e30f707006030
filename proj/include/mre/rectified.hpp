#pragma once

#include <vector>

#include "mre/linalg.hpp"
#include "mre/modal.hpp"
#include "mre/surrogate.hpp"

namespace mre {

struct RectifiedOptions {
  int substeps = 10;          // RK4 steps per sample interval
  double box_margin = 0.10;   // fraction of each input range added to the training box
  double blow_up_factor = 1e9;
};

/// Reduced nominal dynamics, optionally closed with a surrogate:
///   q'' + Xi q' + Omega^2 q + N(q, q') = Phi^T f.
struct RectifiedModel {
  ModalBasis basis;
  const Surrogate* surrogate = nullptr;  // nullptr gives the nominal reduced model
  RectifiedOptions options;
};

struct Prediction {
  VectorXd time;
  MatrixXd q;      // N_t x m
  MatrixXd qdot;
  MatrixXd u;      // N_t x |dofs|
  std::vector<Eigen::Index> dofs;
  double extrapolation_fraction = 0.0;  // samples whose (q, q') leave the training box
  int substeps = 0;
};

/// Integrates from rest with the modal force held over each sample.
Prediction predict_modal(const RectifiedModel& model, const MatrixXd& modal_force, double dt,
                         const std::vector<Eigen::Index>& dofs);

/// Same from a physical force series f (N_t x N).
Prediction predict(const RectifiedModel& model, const MatrixXd& force, double dt,
                   const std::vector<Eigen::Index>& dofs);

/// Runs predictions for several excitations, in parallel when allowed.
std::vector<Prediction> predict_many(const RectifiedModel& model, const std::vector<MatrixXd>& forces,
                                     double dt, const std::vector<Eigen::Index>& dofs,
                                     Execution exec = Execution::Parallel);

/// Prediction with a basis from a different mesh and a surrogate trained on
/// the original one. When `reference` is given, natural frequencies differing
/// by more than freq_tol (relative) raise a warning.
Prediction mesh_transfer_predict(const ModalBasis& new_basis, const Surrogate& surrogate,
                                 const MatrixXd& force, double dt,
                                 const std::vector<Eigen::Index>& dofs,
                                 const RectifiedOptions& options = {},
                                 const ModalBasis* reference = nullptr, double freq_tol = 1e-3);

}  // namespace mre
