#include "mre/truth.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "mre/error.hpp"
#include "mre/statespace.hpp"

namespace mre {

namespace {

Eigen::Index load_dof(const FEModel& model, double x, DofKind kind) {
  const double tol = 0.5 * model.node_spacing() + 1e-9;
  const auto dof = model.find_dof(x, kind, tol);
  require(dof.has_value(), ErrorKind::InvalidInput,
          "no free DOF near load coordinate x = " + std::to_string(x));
  return *dof;
}

struct Biquad {
  double b0, b1, b2, a1, a2;

  void run(VectorXd& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double in = x(k);
      const double out = b0 * in + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = in;
      y2 = y1;
      y1 = out;
      x(k) = out;
    }
  }
};

// Second-order sections of a 4th-order Butterworth design.
constexpr double kButterworthQ[2] = {1.3065629648763766, 0.5411961001461970};

Biquad lowpass_section(double k, double q) {
  const double norm = 1.0 / (1.0 + k / q + k * k);
  Biquad s;
  s.b0 = k * k * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - k / q + k * k) * norm;
  return s;
}

Biquad highpass_section(double k, double q) {
  const double norm = 1.0 / (1.0 + k / q + k * k);
  Biquad s;
  s.b0 = norm;
  s.b1 = -2.0 * norm;
  s.b2 = norm;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - k / q + k * k) * norm;
  return s;
}

double cubic_term(double u) { return u * u * u; }

}  // namespace

Eigen::Index ExcitationSpec::sample_count() const {
  return static_cast<Eigen::Index>(std::llround(duration / dt));
}

void ExcitationSpec::validate() const {
  require(std::isfinite(duration) && duration > 0.0 && std::isfinite(dt) && dt > 0.0,
          ErrorKind::InvalidInput, "duration and dt must be positive");
  const double ratio = duration / dt;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio),
          ErrorKind::InvalidInput, "duration must be an integer multiple of dt");
  for (const auto& load : noise_loads) {
    require(load.band_high > 0.0 && load.band_high < 0.5 / dt, ErrorKind::InvalidInput,
            "noise band upper edge must lie in (0, Nyquist)");
    require(load.band_low >= 0.0 && load.band_low < load.band_high, ErrorKind::InvalidInput,
            "noise band lower edge must lie in [0, band_high)");
    require(load.scale >= 0.0, ErrorKind::InvalidInput, "noise load scale must be non-negative");
  }
}

void NonlinearRestoringSpec::validate() const {
  require(cubic_coefficient >= 0.0 && std::isfinite(cubic_coefficient), ErrorKind::InvalidInput,
          "cubic coefficient must be non-negative");
}

VectorXd butterworth_filter(const VectorXd& signal, double dt, double low_hz, double high_hz) {
  VectorXd out = signal;
  const double nyquist = 0.5 / dt;
  if (high_hz > 0.0) {
    require(high_hz < nyquist, ErrorKind::InvalidInput, "low-pass cutoff above Nyquist");
    const double k = std::tan(std::numbers::pi * high_hz * dt);
    for (double q : kButterworthQ) lowpass_section(k, q).run(out);
  }
  if (low_hz > 0.0) {
    require(low_hz < nyquist, ErrorKind::InvalidInput, "high-pass cutoff above Nyquist");
    const double k = std::tan(std::numbers::pi * low_hz * dt);
    for (double q : kButterworthQ) highpass_section(k, q).run(out);
  }
  return out;
}

MatrixXd build_force_series(const FEModel& model, const ExcitationSpec& excitation) {
  excitation.validate();
  const Eigen::Index nt = excitation.sample_count();
  MatrixXd force = MatrixXd::Zero(nt, model.n_dof());
  for (const auto& load : excitation.sinusoids) {
    const Eigen::Index dof = load_dof(model, load.x, load.kind);
    for (Eigen::Index k = 0; k < nt; ++k) {
      const double t = static_cast<double>(k) * excitation.dt;
      force(k, dof) += load.amplitude * std::sin(load.omega * t + load.phase);
    }
  }
  for (const auto& load : excitation.noise_loads) {
    const Eigen::Index dof = load_dof(model, load.x, load.kind);
    std::mt19937_64 rng(load.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd white(nt);
    for (Eigen::Index k = 0; k < nt; ++k) white(k) = normal(rng);
    VectorXd band = butterworth_filter(white, excitation.dt, load.band_low, load.band_high);
    band.array() -= band.mean();
    const double std_dev = std::sqrt(band.squaredNorm() / static_cast<double>(nt));
    if (std_dev > 0.0) band *= load.scale / std_dev;
    force.col(dof) += band;
  }
  return force;
}

int stable_substeps(const FEModel& model, double dt, int minimum) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> stiff(model.stiffness, model.mass,
                                                          Eigen::EigenvaluesOnly);
  require(stiff.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigensolver failed");
  double radius = std::sqrt(std::max(stiff.eigenvalues().maxCoeff(), 0.0));
  if (model.damping.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> damp(symmetrized(model.damping), model.mass,
                                                           Eigen::EigenvaluesOnly);
    require(damp.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigensolver failed");
    radius += std::max(damp.eigenvalues().maxCoeff(), 0.0);
  }
  const int needed = static_cast<int>(std::ceil(radius * dt / 2.0));
  return std::max(minimum, needed);
}

TruthRecord simulate_truth(const FEModel& model, const NonlinearRestoringSpec& restoring,
                           const ExcitationSpec& excitation, const TruthOptions& options) {
  return simulate_truth(model, restoring, build_force_series(model, excitation), excitation.dt,
                        options);
}

TruthRecord simulate_truth(const FEModel& model, const NonlinearRestoringSpec& restoring,
                           const MatrixXd& force, double dt, const TruthOptions& options) {
  restoring.validate();
  const Eigen::Index n = model.n_dof();
  const Eigen::Index nt = force.rows();
  require(force.cols() == n, ErrorKind::InvalidInput, "force series width does not match model");
  require(dt > 0.0 && nt >= 1, ErrorKind::InvalidInput, "empty time grid");
  require(options.substep_factor >= 1, ErrorKind::InvalidInput, "substep factor must be >= 1");

  const bool linear = restoring.is_linear();
  require(linear || options.integrator == TruthIntegrator::RungeKutta4, ErrorKind::InvalidInput,
          "exact propagation only applies to linear models");

  const auto mass_lu = model.mass.llt();
  const MatrixXd minv_k = mass_lu.solve(model.stiffness);
  const MatrixXd minv_c = mass_lu.solve(model.damping);
  const MatrixXd minv_f = mass_lu.solve(force.transpose());  // N x N_t

  std::vector<Eigen::Index> translation;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (model.dofs[static_cast<std::size_t>(i)].kind == DofKind::Translation) translation.push_back(i);
  }
  const double kappa = linear ? 0.0 : restoring.cubic_coefficient;
  MatrixXd minv_translation;
  if (!linear) {
    const MatrixXd minv = mass_lu.solve(MatrixXd::Identity(n, n));
    minv_translation.resize(n, static_cast<Eigen::Index>(translation.size()));
    for (std::size_t j = 0; j < translation.size(); ++j) {
      minv_translation.col(static_cast<Eigen::Index>(j)) = minv.col(translation[j]);
    }
  }
  auto restoring_accel = [&](const VectorXd& u) {
    VectorXd g(static_cast<Eigen::Index>(translation.size()));
    for (std::size_t j = 0; j < translation.size(); ++j) {
      g(static_cast<Eigen::Index>(j)) = kappa * cubic_term(u(translation[j]));
    }
    return VectorXd(minv_translation * g);
  };

  TruthRecord rec;
  rec.time = VectorXd::LinSpaced(nt, 0.0, dt * static_cast<double>(nt - 1));
  rec.displacement = MatrixXd::Zero(nt, n);
  rec.velocity = MatrixXd::Zero(nt, n);
  rec.acceleration = MatrixXd::Zero(nt, n);
  rec.force = force;

  const double force_scale = std::max(force.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::SelfAdjointEigenSolver<MatrixXd> k_eig(model.stiffness, Eigen::EigenvaluesOnly);
  const double static_scale = force_scale / std::max(k_eig.eigenvalues().minCoeff(), 1e-300);
  const double blow_up = 1e12 * static_scale;

  VectorXd u = VectorXd::Zero(n);
  VectorXd v = VectorXd::Zero(n);

  if (options.integrator == TruthIntegrator::ExactLinear) {
    MatrixXd a = MatrixXd::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n).setIdentity();
    a.bottomLeftCorner(n, n) = -minv_k;
    a.bottomRightCorner(n, n) = -minv_c;
    MatrixXd b = MatrixXd::Zero(2 * n, n);
    b.bottomRows(n).setIdentity();
    MatrixXd ad, bd;
    discretize_input(a, b, dt, ad, bd);
    VectorXd x = VectorXd::Zero(2 * n);
    for (Eigen::Index k = 0; k < nt; ++k) {
      rec.displacement.row(k) = x.head(n).transpose();
      rec.velocity.row(k) = x.tail(n).transpose();
      if (k + 1 < nt) x = ad * x + bd * minv_f.col(k);
    }
    rec.substeps = 1;
  } else {
    int substeps = options.substep_factor;
    if (options.stability_substeps) substeps = stable_substeps(model, dt, substeps);
    rec.substeps = substeps;
    const double h = dt / substeps;
    VectorXd k1u(n), k1v(n), k2u(n), k2v(n), k3u(n), k3v(n), k4u(n), k4v(n), tu(n), tv(n);
    auto deriv = [&](const VectorXd& uu, const VectorXd& vv, const VectorXd& fa, VectorXd& du,
                     VectorXd& dv) {
      du = vv;
      dv.noalias() = fa - minv_k * uu;
      dv.noalias() -= minv_c * vv;
      if (!linear) dv -= restoring_accel(uu);
    };
    for (Eigen::Index k = 0; k < nt; ++k) {
      rec.displacement.row(k) = u.transpose();
      rec.velocity.row(k) = v.transpose();
      if (k + 1 == nt) break;
      const VectorXd fa = minv_f.col(k);
      for (int s = 0; s < substeps; ++s) {
        deriv(u, v, fa, k1u, k1v);
        tu = u + 0.5 * h * k1u;
        tv = v + 0.5 * h * k1v;
        deriv(tu, tv, fa, k2u, k2v);
        tu = u + 0.5 * h * k2u;
        tv = v + 0.5 * h * k2v;
        deriv(tu, tv, fa, k3u, k3v);
        tu = u + h * k3u;
        tv = v + h * k3v;
        deriv(tu, tv, fa, k4u, k4v);
        u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      }
      const double norm = u.cwiseAbs().maxCoeff();
      if (!std::isfinite(norm) || norm > blow_up) {
        throw Error(ErrorKind::UnstableIntegration,
                    "response blew up at t = " + std::to_string(rec.time(k + 1)) + " with " +
                        std::to_string(substeps) + " substeps per sample");
      }
    }
  }

  for (Eigen::Index k = 0; k < nt; ++k) {
    const VectorXd uk = rec.displacement.row(k).transpose();
    VectorXd acc = minv_f.col(k) - minv_k * uk - minv_c * rec.velocity.row(k).transpose();
    if (!linear) acc -= restoring_accel(uk);
    rec.acceleration.row(k) = acc.transpose();
  }
  return rec;
}

std::vector<Eigen::Index> snap_sensors(const FEModel& model, const std::vector<double>& coordinates) {
  const double tol = 0.5 * model.node_spacing() + 1e-9;
  std::vector<Eigen::Index> dofs;
  for (double x : coordinates) {
    const auto dof = model.find_dof(x, DofKind::Translation, tol);
    require(dof.has_value(), ErrorKind::InvalidSensor,
            "sensor at x = " + std::to_string(x) + " is off the mesh");
    dofs.push_back(*dof);
  }
  return dofs;
}

TruthRecord apply_sensors_and_noise(const TruthRecord& truth, const FEModel& model,
                                    const SensorSpec& sensors) {
  require(!sensors.coordinates.empty(), ErrorKind::InvalidSensor, "no sensors given");
  require(sensors.noise_percent >= 0.0, ErrorKind::InvalidInput, "noise percentage must be >= 0");
  require(truth.displacement.cols() == model.n_dof(), ErrorKind::InvalidInput,
          "truth record does not match the model");
  TruthRecord out = truth;
  out.sensor_dofs = snap_sensors(model, sensors.coordinates);
  const Eigen::Index nt = truth.displacement.rows();
  const Eigen::Index nm = static_cast<Eigen::Index>(out.sensor_dofs.size());
  out.clean.resize(nt, nm);
  for (Eigen::Index j = 0; j < nm; ++j) {
    out.clean.col(j) = truth.displacement.col(out.sensor_dofs[static_cast<std::size_t>(j)]);
  }
  double rms_sum = 0.0;
  for (Eigen::Index j = 0; j < nm; ++j) {
    rms_sum += std::sqrt(out.clean.col(j).squaredNorm() / static_cast<double>(nt));
  }
  out.noise_std = sensors.noise_percent / 100.0 * rms_sum / static_cast<double>(nm);
  out.noisy = out.clean;
  if (out.noise_std > 0.0) {
    std::mt19937_64 rng(sensors.seed);
    std::normal_distribution<double> normal(0.0, out.noise_std);
    for (Eigen::Index k = 0; k < nt; ++k) {
      for (Eigen::Index j = 0; j < nm; ++j) out.noisy(k, j) += normal(rng);
    }
  }
  return out;
}

MatrixXd true_discrepancy_oracle(const FEModel& nominal, const ModalBasis& basis,
                                 const TruthRecord& truth) {
  const Eigen::Index n = nominal.n_dof();
  require(basis.n_dof() == n, ErrorKind::InvalidInput, "basis does not match the nominal model");
  require(truth.displacement.cols() == n && truth.velocity.cols() == n &&
              truth.acceleration.cols() == n && truth.force.cols() == n,
          ErrorKind::InvalidInput, "truth record DOF count does not match the nominal model");
  const Eigen::Index nt = truth.time.size();
  require(truth.displacement.rows() == nt && truth.velocity.rows() == nt &&
              truth.acceleration.rows() == nt && truth.force.rows() == nt,
          ErrorKind::InvalidInput, "truth series are not on a shared time grid");
  const MatrixXd residual = truth.force - truth.acceleration * nominal.mass.transpose() -
                            truth.velocity * nominal.damping.transpose() -
                            truth.displacement * nominal.stiffness.transpose();
  return residual * basis.shapes;
}

}  // namespace mre
