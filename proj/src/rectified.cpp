#include "mre/rectified.hpp"

#include <cmath>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

namespace {

void check_model(const RectifiedModel& model) {
  const Eigen::Index m = model.basis.count();
  require(m >= 1, ErrorKind::InvalidInput, "prediction: empty modal basis");
  require(model.options.substeps >= 1, ErrorKind::InvalidInput, "prediction: substeps must be >= 1");
  if (model.surrogate != nullptr) {
    require(model.surrogate->inputs() == 2 * m && model.surrogate->outputs() == m,
            ErrorKind::IncompatibleSurrogate,
            "surrogate maps " + std::to_string(model.surrogate->inputs()) + " -> " +
                std::to_string(model.surrogate->outputs()) + " but the basis has " +
                std::to_string(m) + " modes");
  }
}

}  // namespace

Prediction predict_modal(const RectifiedModel& model, const MatrixXd& modal_force, double dt,
                         const std::vector<Eigen::Index>& dofs) {
  check_model(model);
  const ModalBasis& basis = model.basis;
  const Eigen::Index m = basis.count();
  const Eigen::Index nt = modal_force.rows();
  require(modal_force.cols() == m, ErrorKind::InvalidInput, "prediction: modal force width mismatch");
  require(nt >= 1 && dt > 0.0, ErrorKind::InvalidInput, "prediction: empty time grid");
  for (Eigen::Index d : dofs) {
    require(d >= 0 && d < basis.n_dof(), ErrorKind::InvalidInput, "prediction: DOF out of range");
  }

  const Surrogate* net = model.surrogate;
  const VectorXd omega2 = basis.frequencies.array().square().matrix();
  const VectorXd& xi = basis.damping;
  const double static_scale =
      std::max(modal_force.cwiseAbs().maxCoeff(), 1e-300) / omega2.minCoeff();
  const double limit = model.options.blow_up_factor * static_scale;

  bool have_box = net != nullptr && net->input_min.size() == 2 * m && net->input_max.size() == 2 * m;
  VectorXd box_lo, box_hi;
  if (have_box) {
    const VectorXd range = net->input_max - net->input_min;
    box_lo = net->input_min - model.options.box_margin * range;
    box_hi = net->input_max + model.options.box_margin * range;
  }

  Prediction out;
  out.substeps = model.options.substeps;
  out.dofs = dofs;
  out.time = VectorXd::LinSpaced(nt, 0.0, dt * static_cast<double>(nt - 1));
  out.q = MatrixXd::Zero(nt, m);
  out.qdot = MatrixXd::Zero(nt, m);

  VectorXd x = VectorXd::Zero(2 * m);
  VectorXd k1(2 * m), k2(2 * m), k3(2 * m), k4(2 * m), tmp(2 * m);
  auto rhs = [&](const VectorXd& state, const VectorXd& p, VectorXd& dx) {
    const auto q = state.head(m);
    const auto qd = state.tail(m);
    dx.head(m) = qd;
    dx.tail(m) = p - xi.cwiseProduct(qd) - omega2.cwiseProduct(q);
    if (net != nullptr) dx.tail(m) -= net->evaluate(state);
  };
  const double h = dt / model.options.substeps;
  Eigen::Index outside = 0;
  for (Eigen::Index k = 0; k < nt; ++k) {
    out.q.row(k) = x.head(m).transpose();
    out.qdot.row(k) = x.tail(m).transpose();
    if (have_box && ((x.array() < box_lo.array()).any() || (x.array() > box_hi.array()).any())) {
      ++outside;
    }
    if (k + 1 == nt) break;
    const VectorXd p = modal_force.row(k).transpose();
    for (int s = 0; s < model.options.substeps; ++s) {
      rhs(x, p, k1);
      tmp = x + 0.5 * h * k1;
      rhs(tmp, p, k2);
      tmp = x + 0.5 * h * k2;
      rhs(tmp, p, k3);
      tmp = x + h * k3;
      rhs(tmp, p, k4);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double norm = x.head(m).norm();
    if (!std::isfinite(norm) || norm > limit) {
      throw Error(ErrorKind::UnstablePrediction,
                  "rectified prediction diverged at t = " + std::to_string(out.time(k + 1)) + " s");
    }
  }
  out.extrapolation_fraction = have_box ? static_cast<double>(outside) / static_cast<double>(nt) : 0.0;
  out.u = reconstruct(basis, out.q, dofs);
  return out;
}

Prediction predict(const RectifiedModel& model, const MatrixXd& force, double dt,
                   const std::vector<Eigen::Index>& dofs) {
  require(force.cols() == model.basis.n_dof(), ErrorKind::InvalidInput,
          "prediction: force width does not match the basis");
  return predict_modal(model, project_force(model.basis, force), dt, dofs);
}

std::vector<Prediction> predict_many(const RectifiedModel& model, const std::vector<MatrixXd>& forces,
                                     double dt, const std::vector<Eigen::Index>& dofs, Execution exec) {
  std::vector<Prediction> out(forces.size());
  std::vector<std::string> errors(forces.size());
  std::vector<ErrorKind> kinds(forces.size(), ErrorKind::UnstablePrediction);
  const auto n = static_cast<int>(forces.size());
  auto run = [&](int i) {
    try {
      out[static_cast<std::size_t>(i)] = predict(model, forces[static_cast<std::size_t>(i)], dt, dofs);
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      kinds[static_cast<std::size_t>(i)] = e.kind();
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int i = 0; i < n; ++i) run(i);
  } else {
    for (int i = 0; i < n; ++i) run(i);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(kinds[i], "excitation " + std::to_string(i) + ": " + errors[i]);
  }
  return out;
}

Prediction mesh_transfer_predict(const ModalBasis& new_basis, const Surrogate& surrogate,
                                 const MatrixXd& force, double dt,
                                 const std::vector<Eigen::Index>& dofs,
                                 const RectifiedOptions& options, const ModalBasis* reference,
                                 double freq_tol) {
  require(surrogate.outputs() == new_basis.count() && surrogate.inputs() == 2 * new_basis.count(),
          ErrorKind::IncompatibleSurrogate,
          "surrogate was trained for " + std::to_string(surrogate.outputs()) +
              " modes; new basis has " + std::to_string(new_basis.count()));
  if (reference != nullptr) {
    require(reference->count() == new_basis.count(), ErrorKind::IncompatibleSurrogate,
            "reference basis has a different mode count");
    const VectorXd rel = ((new_basis.frequencies - reference->frequencies).array() /
                          reference->frequencies.array()).abs().matrix();
    if (rel.maxCoeff() > freq_tol) {
      log_warning("mesh transfer: natural frequencies differ by up to " +
                  std::to_string(100.0 * rel.maxCoeff()) + "% between the two meshes");
    }
  }
  RectifiedModel model{new_basis, &surrogate, options};
  return predict(model, force, dt, dofs);
}

}  // namespace mre
