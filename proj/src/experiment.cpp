#include "mre/experiment.hpp"

#include <chrono>
#include <cmath>

#include "mre/error.hpp"
#include "mre/log.hpp"

namespace mre {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void apply_damping(FEModel& model, const DampingConfig& damping) {
  switch (damping.kind) {
    case DampingConfig::Kind::Lumped:
      return;
    case DampingConfig::Kind::Rayleigh: {
      const int highest = std::max(damping.mode_i, damping.mode_j);
      require(highest <= model.n_dof(), ErrorKind::ConfigError,
              "Rayleigh damping targets mode " + std::to_string(highest) + " but the model has " +
                  std::to_string(model.n_dof()) + " DOFs");
      const ModalBasis modes = solve_modes(model, highest);
      model.damping = build_rayleigh_damping(
          model.mass, model.stiffness,
          {damping.zeta_i, modes.frequencies(damping.mode_i - 1), damping.zeta_j,
           modes.frequencies(damping.mode_j - 1)});
      return;
    }
    case DampingConfig::Kind::Modal:
      model.damping = build_modal_damping(model.mass, model.stiffness, damping.ratios);
      return;
  }
}

}  // namespace

double beam_damping_w(const ExperimentConfig& cfg) {
  if (!cfg.model.damping_w_target) return cfg.model.beam.damping_w;
  return calibrate_damping_w(cfg.model.beam, cfg.model.damping_w_calibration_elements,
                             *cfg.model.damping_w_target);
}

FEModel build_structure(const ExperimentConfig& cfg, bool truth, int elements) {
  FEModel model;
  if (cfg.model.kind == ModelConfig::Kind::Beam) {
    BeamProperties props = cfg.model.beam;
    props.damping_w = beam_damping_w(cfg);
    const BeamModelConfig& b = truth ? cfg.model.truth_beam : cfg.model.nominal_beam;
    const int n = elements > 0 ? elements : b.elements;
    model = b.theory == BeamModelConfig::Theory::EulerBernoulli
                ? assemble_euler_bernoulli(props, n, b.boundary)
                : assemble_timoshenko(props, n, b.boundary, b.element);
    apply_damping(model, b.damping);
  } else {
    const BuildingModelConfig& b = truth ? cfg.model.truth_building : cfg.model.nominal_building;
    ShearBuildingSpec spec = cfg.model.building;
    spec.damage_story = b.damage_story;
    spec.damage_fraction = b.damage_fraction;
    model = assemble_shear_building(spec);
    apply_damping(model, b.damping);
  }
  return model;
}

TruthOptions truth_options(const ExperimentConfig& cfg) {
  TruthOptions o;
  o.integrator = cfg.integrator.truth;
  o.substep_factor = cfg.integrator.substep_factor;
  return o;
}

TruthRecord simulate_excitation(const ExperimentConfig& cfg, const FEModel& truth,
                                const ExcitationSpec& excitation, bool noisy) {
  TruthRecord record = simulate_truth(truth, cfg.model.nonlinearity, excitation, truth_options(cfg));
  SensorSpec sensors = cfg.sensors;
  if (!noisy) sensors.noise_percent = 0.0;
  return apply_sensors_and_noise(record, truth, sensors);
}

DofGroups dof_groups(const FEModel& model, const std::vector<Eigen::Index>& sensor_dofs) {
  DofGroups g;
  g.sensors = sensor_dofs;
  for (Eigen::Index i = 0; i < model.n_dof(); ++i) {
    g.all.push_back(i);
    if (model.dofs[static_cast<std::size_t>(i)].kind == DofKind::Translation) g.translations.push_back(i);
  }
  return g;
}

MatrixXd select_columns(const MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

NmseSet nmse_set(const DofGroups& groups, const MatrixXd& truth, const MatrixXd& estimate) {
  NmseSet s;
  s.sensors = nmse(select_columns(truth, groups.sensors), select_columns(estimate, groups.sensors));
  s.translations = nmse(select_columns(truth, groups.translations), select_columns(estimate, groups.translations));
  s.pooled = nmse(select_columns(truth, groups.all), select_columns(estimate, groups.all));
  return s;
}

BasisSelection build_basis(const ExperimentConfig& cfg, const FEModel& nominal, const MatrixXd& measured) {
  BasisSelection out;
  Eigen::Index m = cfg.modal.modes;
  if (m == 0) {
    const Eigen::Index cap = std::min<Eigen::Index>(cfg.modal.max_auto_modes, nominal.n_dof());
    const ModalBasis candidates = solve_modes(nominal, cap, cfg.modal.damping);
    const Spectrum spectrum = averaged_log_fft(measured, cfg.train.dt);
    m = select_mode_count(spectrum, candidates.frequencies, cfg.modal.floor_db, &out.degenerate);
    out.automatic = m;
    log_info("modal: spectrum suggests " + std::to_string(m) + " modes");
  }
  require(m <= nominal.n_dof(), ErrorKind::ConfigError,
          "modal: " + std::to_string(m) + " modes requested but the nominal model has " +
              std::to_string(nominal.n_dof()) + " DOFs");
  out.basis = solve_modes(nominal, m, cfg.modal.damping);
  return out;
}

InferenceData inference_data(const ExperimentConfig& cfg, const ModalBasis& basis, const TruthRecord& record) {
  InferenceData d;
  d.basis = basis;
  d.sensor_dofs = record.sensor_dofs;
  d.y = record.noisy;
  d.p = project_force(basis, record.force);
  d.dt = record.dt();
  d.noise_std = record.noise_std;
  d.jitter = cfg.gp.jitter;
  d.prior_state_var = cfg.gp.prior_state_var;
  d.steady_tol = cfg.gp.steady_tol;
  return d;
}

InferenceResult run_inference(const ExperimentConfig& cfg, const InferenceData& data,
                              const std::vector<VectorXd>& warm_starts) {
  MapOptions options = cfg.gp.map;
  options.warm_starts = warm_starts;
  InferenceResult r;
  r.map = map_optimize(data, cfg.gp.priors, options);
  r.smoothed = smooth(r.map.theta, data, r.map.noise_std);
  return r;
}

MatrixXd surrogate_inputs(const SmoothedTrajectory& smoothed) {
  MatrixXd x(smoothed.q.rows(), 2 * smoothed.q.cols());
  x << smoothed.q, smoothed.qdot;
  return x;
}

SurrogateFit fit_surrogate(const ExperimentConfig& cfg, const SmoothedTrajectory& smoothed) {
  const MatrixXd x = surrogate_inputs(smoothed);
  SurrogateFit fit;
  int hidden = cfg.surrogate.hidden;
  if (hidden == 0) {
    fit.selection = select_hidden_size(x, smoothed.eta, cfg.surrogate.training.hidden_candidates,
                                       cfg.surrogate.training);
    hidden = fit.selection->hidden;
    log_info("surrogate: cross-validation picked H = " + std::to_string(hidden));
  }
  fit.trained = train(x, smoothed.eta, hidden, cfg.surrogate.training);
  return fit;
}

RectifiedOptions rectified_options(const ExperimentConfig& cfg) {
  RectifiedOptions o;
  o.substeps = cfg.integrator.prediction_substeps;
  return o;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const ExperimentStages& stages) {
  ExperimentOutcome out;
  auto t0 = Clock::now();
  out.truth = build_structure(cfg, true);
  out.nominal = build_structure(cfg, false);
  require(out.truth.n_dof() == out.nominal.n_dof(), ErrorKind::ConfigError,
          "truth and nominal meshes must have the same DOFs");
  out.train = simulate_excitation(cfg, out.truth, cfg.train, true);
  out.test = simulate_excitation(cfg, out.truth, cfg.test, false);
  out.groups = dof_groups(out.nominal, out.train.sensor_dofs);
  out.seconds_simulate = seconds_since(t0);

  out.basis = build_basis(cfg, out.nominal, out.train.noisy);
  const ModalBasis& basis = out.basis.basis;
  out.eta_oracle = true_discrepancy_oracle(out.nominal, basis, out.train);
  const RectifiedOptions ropt = rectified_options(cfg);
  const RectifiedModel nominal_model{basis, nullptr, ropt};
  const double dt = out.train.dt();
  const Prediction nominal_train = predict(nominal_model, out.train.force, dt, out.groups.all);
  out.nominal_train = nmse_set(out.groups, out.train.displacement, nominal_train.u);

  t0 = Clock::now();
  const InferenceData data = inference_data(cfg, basis, out.train);
  out.p_train = data.p;
  out.inference = run_inference(cfg, data, stages.warm_starts);
  out.inference_train = nmse_set(out.groups, out.train.displacement, reconstruct(basis, out.inference.smoothed.q));
  out.seconds_infer = seconds_since(t0);
  if (!stages.surrogate) return out;

  t0 = Clock::now();
  out.surrogate = fit_surrogate(cfg, out.inference.smoothed);
  out.seconds_train = seconds_since(t0);

  t0 = Clock::now();
  const Surrogate& net = out.surrogate->trained.model;
  const RectifiedModel rectified{basis, &net, ropt};
  const Prediction nominal_test = predict(nominal_model, out.test.force, dt, out.groups.all);
  const Prediction rectified_test = predict(rectified, out.test.force, dt, out.groups.all);
  out.nominal_test = nmse_set(out.groups, out.test.displacement, nominal_test.u);
  out.rectified_test = nmse_set(out.groups, out.test.displacement, rectified_test.u);
  out.extrapolation_fraction = rectified_test.extrapolation_fraction;

  if (stages.mesh_transfer && cfg.mesh_transfer_elements > 0) {
    const FEModel fine = build_structure(cfg, false, cfg.mesh_transfer_elements);
    const ModalBasis fine_basis = solve_modes(fine, basis.count(), cfg.modal.damping);
    out.mesh_frequency_difference =
        ((fine_basis.frequencies - basis.frequencies).array() / basis.frequencies.array()).abs().maxCoeff();
    // Same physical locations on the alternate mesh.
    const double tol = 0.25 * std::min(fine.node_spacing(), out.nominal.node_spacing());
    std::vector<Eigen::Index> mapped;
    for (Eigen::Index i : out.groups.all) {
      const DofInfo& info = out.nominal.dofs[static_cast<std::size_t>(i)];
      const auto j = fine.find_dof(info.x, info.kind, tol);
      require(j.has_value(), ErrorKind::IncompatibleArtifacts,
              "mesh transfer: no DOF at x = " + std::to_string(info.x) + " on the alternate mesh");
      mapped.push_back(*j);
    }
    const MatrixXd force = build_force_series(fine, cfg.test);
    const Prediction moved = mesh_transfer_predict(fine_basis, net, force, dt, mapped, ropt, &basis);
    out.mesh_transfer_test = nmse_set(out.groups, out.test.displacement, moved.u);
  }
  out.seconds_predict = seconds_since(t0);
  return out;
}

}  // namespace mre
