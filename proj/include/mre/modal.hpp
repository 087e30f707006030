#pragma once

#include <optional>
#include <vector>

#include "mre/linalg.hpp"
#include "mre/structural.hpp"

namespace mre {

/// Mass-normalized truncated modal basis.
struct ModalBasis {
  MatrixXd shapes;       // N x m
  VectorXd frequencies;  // rad/s, ascending
  VectorXd damping;      // diagonal of Xi, entries 2 zeta_i omega_i (1/s)

  Eigen::Index count() const { return frequencies.size(); }
  Eigen::Index n_dof() const { return shapes.rows(); }
  VectorXd damping_ratios() const { return damping.cwiseQuotient(2.0 * frequencies); }
};

/// How Xi is formed for the retained modes.
struct ModalDampingRule {
  enum class Kind { ExtractFromMatrix, Ratios } kind = Kind::ExtractFromMatrix;
  std::vector<double> ratios;  // for Kind::Ratios; the last entry repeats

  static ModalDampingRule extract() { return {}; }
  static ModalDampingRule uniform(double zeta) { return {Kind::Ratios, {zeta}}; }
  static ModalDampingRule from_ratios(std::vector<double> r) { return {Kind::Ratios, std::move(r)}; }
};

inline constexpr double kDefaultModalDampingRatio = 0.02;

/// The m lowest modes of K phi = M phi w^2, mass-normalized and sign-fixed so
/// the largest-magnitude entry of each mode is positive (near-ties resolved
/// toward the lowest DOF index). An all-zero damping matrix with the extract
/// rule falls back to 2% on every mode.
ModalBasis solve_modes(const FEModel& model, Eigen::Index m,
                       const ModalDampingRule& rule = ModalDampingRule::extract());

/// Flip mode signs in place according to the convention above.
void fix_mode_signs(MatrixXd& shapes);

/// Averaged spectrum used for mode selection: frequency axis in rad/s and the
/// level in dB at each bin.
struct Spectrum {
  VectorXd omega;     // rad/s
  VectorXd hertz;     // Hz
  VectorXd level_db;  // mean over channels of 20 log10 |X|
};

/// Highest natural frequency whose +/-2% neighbourhood in the spectrum rises
/// floor_db above the median spectrum level; at least 1. The returned count
/// never exceeds natural_frequencies.size().
Eigen::Index select_mode_count(const Spectrum& spectrum, const VectorXd& natural_frequencies,
                               double floor_db = 10.0, bool* degenerate = nullptr);

/// Rows are time steps: p(t_k) = Phi^T f(t_k).
MatrixXd project_force(const ModalBasis& basis, const MatrixXd& force_series);

/// Rows are time steps: u(t_k) = Phi q(t_k).
MatrixXd reconstruct(const ModalBasis& basis, const MatrixXd& modal_series);

/// Reconstruct only the listed DOFs.
MatrixXd reconstruct(const ModalBasis& basis, const MatrixXd& modal_series,
                     const std::vector<Eigen::Index>& dofs);

/// Mass-weighted projection of physical displacements: q = Phi^T M u.
MatrixXd project_displacement(const ModalBasis& basis, const MatrixXd& mass,
                              const MatrixXd& displacement_series);

}  // namespace mre
