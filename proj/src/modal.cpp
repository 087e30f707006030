#include "mre/modal.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

void fix_mode_signs(MatrixXd& shapes) {
  constexpr double kTieTolerance = 1e-4;
  for (Eigen::Index j = 0; j < shapes.cols(); ++j) {
    const double peak = shapes.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < shapes.rows(); ++i) {
      if (std::abs(shapes(i, j)) >= (1.0 - kTieTolerance) * peak) {
        if (shapes(i, j) < 0.0) shapes.col(j) *= -1.0;
        break;
      }
    }
  }
}

ModalBasis solve_modes(const FEModel& model, Eigen::Index m, const ModalDampingRule& rule) {
  const Eigen::Index n = model.n_dof();
  require(m >= 1 && m <= n, ErrorKind::InvalidInput,
          "retained mode count must lie in [1, n_dof]");
  if (4 * m > n) log_warning("retaining " + std::to_string(m) + " of " + std::to_string(n) +
                             " modes; modal truncation is barely reducing the model");

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(model.stiffness, model.mass);
  require(solver.info() == Eigen::Success, ErrorKind::NumericalFailure,
          "generalized eigensolver did not converge");

  ModalBasis basis;
  basis.shapes = solver.eigenvectors().leftCols(m);
  // Eigen normalizes to Phi^T M Phi = I already; renormalize per column to
  // remove any residual drift.
  for (Eigen::Index j = 0; j < m; ++j) {
    const double norm2 = basis.shapes.col(j).dot(model.mass * basis.shapes.col(j));
    basis.shapes.col(j) /= std::sqrt(norm2);
  }
  fix_mode_signs(basis.shapes);

  basis.frequencies.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double lambda = solver.eigenvalues()(j);
    require(lambda > 0.0, ErrorKind::NumericalFailure, "non-positive eigenvalue");
    basis.frequencies(j) = std::sqrt(lambda);
  }
  for (Eigen::Index j = 1; j < m; ++j) {
    require(basis.frequencies(j) > basis.frequencies(j - 1), ErrorKind::NumericalFailure,
            "repeated natural frequencies are not supported");
  }

  basis.damping.resize(m);
  const bool use_matrix = rule.kind == ModalDampingRule::Kind::ExtractFromMatrix &&
                          model.damping.size() > 0 && model.damping.cwiseAbs().maxCoeff() > 0.0;
  if (use_matrix) {
    const MatrixXd projected = basis.shapes.transpose() * model.damping * basis.shapes;
    basis.damping = projected.diagonal();
  } else {
    std::vector<double> ratios = rule.ratios;
    if (ratios.empty()) ratios.push_back(kDefaultModalDampingRatio);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double z = ratios[std::min<std::size_t>(static_cast<std::size_t>(j), ratios.size() - 1)];
      require(z > 0.0 && z < 1.0, ErrorKind::InvalidInput, "modal damping ratio must lie in (0, 1)");
      basis.damping(j) = 2.0 * z * basis.frequencies(j);
    }
  }
  return basis;
}

Eigen::Index select_mode_count(const Spectrum& spectrum, const VectorXd& natural_frequencies,
                               double floor_db, bool* degenerate) {
  require(spectrum.level_db.size() > 0 && spectrum.omega.size() == spectrum.level_db.size(),
          ErrorKind::InvalidInput, "empty spectrum");
  require(natural_frequencies.size() > 0, ErrorKind::InvalidInput, "no natural frequencies");

  std::vector<double> levels(spectrum.level_db.data(),
                             spectrum.level_db.data() + spectrum.level_db.size());
  std::nth_element(levels.begin(), levels.begin() + static_cast<long>(levels.size() / 2), levels.end());
  const double median = levels[levels.size() / 2];

  Eigen::Index selected = 0;
  for (Eigen::Index j = 0; j < natural_frequencies.size(); ++j) {
    const double lo = 0.98 * natural_frequencies(j);
    const double hi = 1.02 * natural_frequencies(j);
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < spectrum.omega.size(); ++b) {
      if (spectrum.omega(b) >= lo && spectrum.omega(b) <= hi) peak = std::max(peak, spectrum.level_db(b));
    }
    if (std::isfinite(peak) && peak - median >= floor_db) selected = j + 1;
  }
  if (degenerate) *degenerate = selected == 0;
  if (selected == 0) {
    log_warning("no natural frequency clears the spectral floor; retaining one mode");
    selected = 1;
  }
  return selected;
}

MatrixXd project_force(const ModalBasis& basis, const MatrixXd& force_series) {
  require(force_series.cols() == basis.n_dof(), ErrorKind::InvalidInput,
          "force series width does not match the basis DOF count");
  return force_series * basis.shapes;
}

MatrixXd reconstruct(const ModalBasis& basis, const MatrixXd& modal_series) {
  require(modal_series.cols() == basis.count(), ErrorKind::InvalidInput,
          "modal series width does not match the retained mode count");
  return modal_series * basis.shapes.transpose();
}

MatrixXd reconstruct(const ModalBasis& basis, const MatrixXd& modal_series,
                     const std::vector<Eigen::Index>& dofs) {
  require(modal_series.cols() == basis.count(), ErrorKind::InvalidInput,
          "modal series width does not match the retained mode count");
  MatrixXd rows(static_cast<Eigen::Index>(dofs.size()), basis.count());
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    require(dofs[i] >= 0 && dofs[i] < basis.n_dof(), ErrorKind::InvalidInput, "DOF index out of range");
    rows.row(static_cast<Eigen::Index>(i)) = basis.shapes.row(dofs[i]);
  }
  return modal_series * rows.transpose();
}

MatrixXd project_displacement(const ModalBasis& basis, const MatrixXd& mass,
                              const MatrixXd& displacement_series) {
  require(displacement_series.cols() == basis.n_dof() && mass.rows() == basis.n_dof(),
          ErrorKind::InvalidInput, "displacement series width does not match the basis");
  return displacement_series * (mass * basis.shapes);
}

}  // namespace mre
