#include "mre/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "mre/experiment.hpp"
#include "mre/io.hpp"
#include "mre/log.hpp"

namespace mre {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnstableIntegration:
    case ErrorKind::NumericalFailure:
    case ErrorKind::OptimizationFailure:
    case ErrorKind::TrainingDiverged:
    case ErrorKind::SelectionFailure:
    case ErrorKind::UnstablePrediction:
    case ErrorKind::UndefinedMetric:
      return 3;
    case ErrorKind::PipelineOrder:
    case ErrorKind::IncompatibleArtifacts:
    case ErrorKind::IncompatibleSurrogate:
      return 4;
    default:
      return 2;
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = resolved_config(cfg);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

namespace {

const char* producer(const std::string& artifact) {
  if (artifact.rfind("train/", 0) == 0 || artifact.rfind("test/", 0) == 0) return "mre simulate";
  if (artifact == "surrogate.json") return "mre train-surrogate";
  if (artifact.rfind("prediction", 0) == 0 || artifact.rfind("nominal_prediction", 0) == 0) return "mre predict";
  return "mre infer";
}

void require_artifacts(const fs::path& dir, const std::vector<std::string>& names, const std::string& stage) {
  std::vector<std::string> missing;
  std::vector<std::string> fixes;
  for (const auto& n : names) {
    if (fs::exists(dir / n)) continue;
    missing.push_back(n);
    const std::string fix = producer(n);
    if (std::find(fixes.begin(), fixes.end(), fix) == fixes.end()) fixes.push_back(fix);
  }
  if (missing.empty()) return;
  std::string list, run;
  for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
  for (const auto& f : fixes) run += (run.empty() ? "" : ", then ") + f;
  throw Error(ErrorKind::PipelineOrder,
              stage + ": missing artifacts in " + dir.string() + ": " + list + " (run " + run + " first)");
}

void check_config(const json& manifest, const std::string& config_sha, const std::string& what) {
  if (!manifest.contains("config_sha256") || manifest.at("config_sha256") != config_sha) {
    throw Error(ErrorKind::IncompatibleArtifacts,
                what + " was produced with a different configuration; rerun " + producer(what));
  }
}

/// Every entry of manifest[key] (file name -> hash) must match the file on disk.
void check_hashes(const fs::path& dir, const json& manifest, const std::string& key, const std::string& what) {
  if (!manifest.contains(key)) return;
  for (const auto& [name, hash] : manifest.at(key).items()) {
    if (!fs::exists(dir / name)) {
      throw Error(ErrorKind::PipelineOrder, what + " refers to missing artifact " + name);
    }
    if (file_sha256(dir / name) != hash.get<std::string>()) {
      throw Error(ErrorKind::IncompatibleArtifacts,
                  what + " was built from a different " + name + " (mixed provenance); rerun " +
                      producer(what));
    }
  }
}

json hashes(const fs::path& dir, const std::vector<std::string>& names) {
  json j = json::object();
  for (const auto& n : names) j[n] = file_sha256(dir / n);
  return j;
}

void write_snapshot(const ExperimentConfig& cfg) {
  write_json(cfg.output_dir / "config.resolved.json", resolved_config(cfg));
}

const char* kind_name(DofKind k) { return k == DofKind::Rotation ? "rotation" : "translation"; }

Eigen::Index find_in(const std::vector<DofInfo>& dofs, const DofInfo& want, double tol) {
  Eigen::Index best = -1;
  double best_d = tol;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i].kind != want.kind) continue;
    const double d = std::abs(dofs[i].x - want.x);
    if (d <= best_d) {
      best_d = d;
      best = static_cast<Eigen::Index>(i);
    }
  }
  return best;
}

double min_spacing(const std::vector<DofInfo>& dofs) {
  std::vector<double> xs;
  for (const auto& d : dofs) xs.push_back(d.x);
  std::sort(xs.begin(), xs.end());
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] - xs[i - 1] > 1e-12) s = std::min(s, xs[i] - xs[i - 1]);
  }
  return std::isfinite(s) ? s : 1.0;
}

double rms(const VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean();
  const VectorXd cb = b.array() - b.mean();
  const double den = ca.norm() * cb.norm();
  return den > 0.0 ? ca.dot(cb) / den : 0.0;
}

json nmse_json(const NmseSet& s) {
  return {{"sensors", s.sensors}, {"translations", s.translations}, {"pooled", s.pooled}};
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

SmoothedTrajectory read_smoothed(const fs::path& path) {
  const CsvTable t = read_csv(path);
  SmoothedTrajectory s;
  s.q = t.columns_with_prefix("q_");
  s.qdot = t.columns_with_prefix("qdot_");
  s.eta = t.columns_with_prefix("eta_");
  require(s.q.cols() > 0 && s.q.cols() == s.qdot.cols() && s.q.cols() == s.eta.cols(),
          ErrorKind::IncompatibleArtifacts, "smoothed.csv: inconsistent modal columns");
  return s;
}

}  // namespace

void write_record(const fs::path& dir, const TruthRecord& rec, const json& manifest) {
  const Eigen::Index n = rec.displacement.cols();
  const Eigen::Index nt = rec.sample_count();
  std::vector<std::string> header{"t"};
  for (const char* p : {"u_", "v_", "a_", "f_"}) {
    const auto names = numbered(p, n);
    header.insert(header.end(), names.begin(), names.end());
  }
  MatrixXd data(nt, 1 + 4 * n);
  data << rec.time, rec.displacement, rec.velocity, rec.acceleration, rec.force;
  write_csv(dir / "truth.csv", header, data);

  const Eigen::Index ns = rec.clean.cols();
  std::vector<std::string> sheader{"t"};
  for (const char* p : {"clean_", "noisy_"}) {
    const auto names = numbered(p, ns);
    sheader.insert(sheader.end(), names.begin(), names.end());
  }
  MatrixXd sdata(nt, 1 + 2 * ns);
  sdata << rec.time, rec.clean, rec.noisy;
  write_csv(dir / "sensors.csv", sheader, sdata);

  json m = manifest;
  m["samples"] = nt;
  m["dofs"] = n;
  m["dt"] = rec.dt();
  m["sensor_dofs"] = rec.sensor_dofs;
  m["noise_std"] = rec.noise_std;
  m["substeps"] = rec.substeps;
  m["files"] = hashes(dir, {"truth.csv", "sensors.csv"});
  write_json(dir / "manifest.json", m);
}

TruthRecord read_record(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  check_hashes(dir, m, "files", (dir.filename() / "manifest.json").string());
  const CsvTable t = read_csv(dir / "truth.csv");
  const CsvTable s = read_csv(dir / "sensors.csv");
  TruthRecord rec;
  rec.time = t.data.col(t.column("t"));
  rec.displacement = t.columns_with_prefix("u_");
  rec.velocity = t.columns_with_prefix("v_");
  rec.acceleration = t.columns_with_prefix("a_");
  rec.force = t.columns_with_prefix("f_");
  rec.clean = s.columns_with_prefix("clean_");
  rec.noisy = s.columns_with_prefix("noisy_");
  rec.sensor_dofs = m.at("sensor_dofs").get<std::vector<Eigen::Index>>();
  rec.noise_std = m.at("noise_std").get<double>();
  rec.substeps = m.at("substeps").get<int>();
  require(rec.displacement.cols() == m.at("dofs").get<Eigen::Index>() &&
              rec.clean.cols() == static_cast<Eigen::Index>(rec.sensor_dofs.size()),
          ErrorKind::IncompatibleArtifacts, dir.string() + ": record columns do not match its manifest");
  return rec;
}

json basis_to_json(const ModalBasis& basis, const FEModel& model) {
  json dofs = json::array();
  for (const auto& d : model.dofs) dofs.push_back({d.x, kind_name(d.kind)});
  return {{"modes", basis.count()},
          {"n_dof", basis.n_dof()},
          {"elements", model.element_count},
          {"frequencies", vector_to_json(basis.frequencies)},
          {"damping", vector_to_json(basis.damping)},
          {"shapes", matrix_to_json(basis.shapes)},
          {"dofs", dofs}};
}

ModalBasis basis_from_json(const json& j, std::vector<DofInfo>* dofs) {
  ModalBasis b;
  try {
    b.frequencies = vector_from_json(j.at("frequencies"));
    b.damping = vector_from_json(j.at("damping"));
    b.shapes = matrix_from_json(j.at("shapes"));
    if (dofs != nullptr) {
      dofs->clear();
      for (const auto& d : j.at("dofs")) {
        dofs->push_back({d.at(0).get<double>(),
                         d.at(1).get<std::string>() == "rotation" ? DofKind::Rotation : DofKind::Translation});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IncompatibleArtifacts, std::string("basis: ") + e.what());
  }
  require(b.shapes.cols() == b.count() && b.damping.size() == b.count() && b.count() > 0,
          ErrorKind::IncompatibleArtifacts, "basis: inconsistent dimensions");
  require(dofs == nullptr || static_cast<Eigen::Index>(dofs->size()) == b.n_dof(),
          ErrorKind::IncompatibleArtifacts, "basis: DOF list does not match the mode shapes");
  return b;
}

void run_simulate(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  write_snapshot(cfg);
  const FEModel truth = build_structure(cfg, true);
  const std::string sha = config_hash(cfg);
  for (const bool train : {true, false}) {
    const std::string label = train ? "train" : "test";
    log_info("simulate: " + label + " excitation");
    const TruthRecord rec = simulate_excitation(cfg, truth, train ? cfg.train : cfg.test, train);
    json manifest = {{"stage", "simulate"},
                     {"excitation", label},
                     {"config_sha256", sha},
                     {"noise_percent", train ? cfg.sensors.noise_percent : 0.0},
                     {"sensor_coordinates", cfg.sensors.coordinates},
                     {"integrator", cfg.integrator.truth == TruthIntegrator::ExactLinear ? "exact" : "rk4"}};
    write_record(dir / label, rec, manifest);
  }
}

void run_infer(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  require_artifacts(dir, {"train/manifest.json", "train/truth.csv", "train/sensors.csv"}, "infer");
  const std::string sha = config_hash(cfg);
  check_config(read_json(dir / "train/manifest.json"), sha, "train/manifest.json");
  write_snapshot(cfg);
  const TruthRecord rec = read_record(dir / "train");
  const FEModel nominal = build_structure(cfg, false);
  require(nominal.n_dof() == rec.displacement.cols(), ErrorKind::IncompatibleArtifacts,
          "infer: training record does not match the nominal model");

  const BasisSelection sel = build_basis(cfg, nominal, rec.noisy);
  const ModalBasis& basis = sel.basis;
  const Eigen::Index m = basis.count();
  const InferenceData data = inference_data(cfg, basis, rec);
  log_info("infer: MAP over " + std::to_string(2 * m) + " hyperparameters");
  const InferenceResult result = run_inference(cfg, data);
  const SmoothedTrajectory& sm = result.smoothed;
  const json inputs = hashes(dir, {"train/truth.csv", "train/sensors.csv"});

  json bj = basis_to_json(basis, nominal);
  bj["automatic_modes"] = sel.automatic;
  bj["degenerate_spectrum"] = sel.degenerate;
  bj["config_sha256"] = sha;
  bj["inputs"] = inputs;
  write_json(dir / "basis.json", bj);

  std::vector<std::string> header{"t"};
  for (const char* p : {"q_", "qdot_", "eta_", "sd_q_", "sd_qdot_", "sd_eta_"}) {
    const auto names = numbered(p, m);
    header.insert(header.end(), names.begin(), names.end());
  }
  MatrixXd table(rec.sample_count(), 1 + 6 * m);
  table << rec.time, sm.q, sm.qdot, sm.eta, sm.q_std, sm.qdot_std, sm.eta_std;
  write_csv(dir / "smoothed.csv", header, table);

  json starts = json::array();
  for (const auto& t : result.map.traces) {
    starts.push_back({{"start_log_theta", vector_to_json(t.start)},
                      {"best_log_theta", vector_to_json(t.best)},
                      {"start_value", std::isfinite(t.start_value) ? json(t.start_value) : json(nullptr)},
                      {"best_value", std::isfinite(t.best_value) ? json(t.best_value) : json(nullptr)},
                      {"evaluations", t.evaluations},
                      {"converged", t.converged}});
  }
  json theta = {{"kernel", cfg.gp.kernel},
                {"amplitude", vector_to_json(result.map.theta.amplitude)},
                {"length_scale", vector_to_json(result.map.theta.length_scale)},
                {"log_posterior", result.map.log_posterior},
                {"noise_std", result.map.noise_std},
                {"best_start", result.map.best_start},
                {"starts", starts},
                {"config_sha256", sha},
                {"inputs", inputs}};
  write_json(dir / "theta.json", theta);

  // Diagnostics against the oracle, which needs the full true response.
  const MatrixXd oracle = true_discrepancy_oracle(nominal, basis, rec);
  const DofGroups groups = dof_groups(nominal, rec.sensor_dofs);
  const RectifiedModel nominal_model{basis, nullptr, rectified_options(cfg)};
  const Prediction nom = predict(nominal_model, rec.force, rec.dt(), groups.all);
  const NmseSet before = nmse_set(groups, rec.displacement, nom.u);
  const NmseSet after = nmse_set(groups, rec.displacement, reconstruct(basis, sm.q));
  json modes = json::array();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ro = rms(oracle.col(i));
    modes.push_back({{"mode", i + 1},
                     {"frequency", basis.frequencies(i)},
                     {"rms_eta_estimate", rms(sm.eta.col(i))},
                     {"rms_eta_oracle", ro},
                     {"rms_modal_force", rms(data.p.col(i))},
                     {"ratio", ro > 0.0 ? json(rms(sm.eta.col(i)) / ro) : json(nullptr)},
                     {"correlation", correlation(sm.eta.col(i), oracle.col(i))}});
  }
  json summary = {{"nominal_nmse", nmse_json(before)},
                  {"inference_nmse", nmse_json(after)},
                  {"inference_reduction_percent", percent_reduction(before.translations, after.translations)},
                  {"modes", modes},
                  {"config_sha256", sha},
                  {"inputs", inputs},
                  {"files", hashes(dir, {"basis.json", "smoothed.csv", "theta.json"})}};
  write_json(dir / "inference.json", summary);
}

void run_train_surrogate(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  require_artifacts(dir, {"basis.json", "smoothed.csv", "theta.json", "inference.json"}, "train-surrogate");
  const std::string sha = config_hash(cfg);
  const json inference = read_json(dir / "inference.json");
  check_config(inference, sha, "inference.json");
  check_hashes(dir, inference, "files", "inference.json");
  write_snapshot(cfg);

  const SmoothedTrajectory sm = read_smoothed(dir / "smoothed.csv");
  const SurrogateFit fit = fit_surrogate(cfg, sm);
  const TrainingReport& report = fit.trained.report;
  json j = json::parse(to_json(fit.trained.model, &report));
  if (fit.selection) {
    j["selection"] = {{"candidates", fit.selection->candidates},
                      {"mean_validation_mse", fit.selection->mean_val_mse},
                      {"hidden", fit.selection->hidden}};
  }
  j["provenance"] = {{"config_sha256", sha}, {"inputs", hashes(dir, {"smoothed.csv", "basis.json"})}};
  write_json(dir / "surrogate.json", j);

  const auto epochs = static_cast<Eigen::Index>(report.train_loss.size());
  MatrixXd history(epochs, 4);
  for (Eigen::Index e = 0; e < epochs; ++e) {
    const auto k = static_cast<std::size_t>(e);
    history.row(e) << static_cast<double>(e + 1), report.train_loss[k], report.val_loss[k], report.best_val_so_far[k];
  }
  write_csv(dir / "training_history.csv", {"epoch", "train_loss", "val_loss", "best_val"}, history);
}

void run_predict(const ExperimentConfig& cfg, const std::string& basis_choice) {
  const fs::path dir = cfg.output_dir;
  require_artifacts(dir, {"surrogate.json", "basis.json", "test/manifest.json", "test/truth.csv", "test/sensors.csv"},
                    "predict");
  const std::string sha = config_hash(cfg);
  const json sj = read_json(dir / "surrogate.json");
  require(sj.contains("provenance"), ErrorKind::IncompatibleArtifacts, "surrogate.json has no provenance record");
  check_config(sj.at("provenance"), sha, "surrogate.json");
  check_hashes(dir, sj.at("provenance"), "inputs", "surrogate.json");
  check_config(read_json(dir / "test/manifest.json"), sha, "test/manifest.json");
  write_snapshot(cfg);

  const Surrogate net = surrogate_from_json(sj.dump());
  const ModalBasis train_basis = basis_from_json(read_json(dir / "basis.json"));
  const TruthRecord test = read_record(dir / "test");
  const FEModel nominal = build_structure(cfg, false);
  const RectifiedOptions ropt = rectified_options(cfg);
  const double dt = test.dt();
  const Eigen::Index m = train_basis.count();
  std::vector<Eigen::Index> all;
  for (Eigen::Index i = 0; i < nominal.n_dof(); ++i) all.push_back(i);

  auto write_prediction = [&](const std::string& stem, const Prediction& p) {
    std::vector<std::string> header{"t"};
    for (const auto& names : {numbered("q_", m), numbered("u_", p.u.cols())}) {
      header.insert(header.end(), names.begin(), names.end());
    }
    MatrixXd data(p.time.size(), 1 + m + p.u.cols());
    data << p.time, p.q, p.u;
    write_csv(dir / (stem + ".csv"), header, data);
  };

  json manifest = {{"config_sha256", sha}, {"substeps", ropt.substeps}};
  if (basis_choice.empty()) {
    const RectifiedModel rectified{train_basis, &net, ropt};
    const RectifiedModel plain{train_basis, nullptr, ropt};
    const Prediction p = predict(rectified, test.force, dt, all);
    write_prediction("prediction", p);
    write_prediction("nominal_prediction", predict(plain, test.force, dt, all));
    manifest["basis"] = "basis.json";
    manifest["extrapolation_fraction"] = p.extrapolation_fraction;
    manifest["inputs"] = hashes(dir, {"surrogate.json", "basis.json", "test/truth.csv"});
    manifest["files"] = hashes(dir, {"prediction.csv", "nominal_prediction.csv"});
    write_json(dir / "prediction_manifest.json", manifest);
    return;
  }

  ModalBasis alt;
  std::vector<DofInfo> alt_dofs;
  std::string basis_file;
  if (basis_choice == "alt_mesh") {
    require(cfg.model.kind == ModelConfig::Kind::Beam, ErrorKind::ConfigError,
            "predict: --basis alt_mesh needs a beam model");
    const int elements =
        cfg.mesh_transfer_elements > 0 ? cfg.mesh_transfer_elements : 2 * cfg.model.nominal_beam.elements;
    const FEModel fine = build_structure(cfg, false, elements);
    alt = solve_modes(fine, m, cfg.modal.damping);
    alt_dofs = fine.dofs;
    basis_file = "basis_alt_mesh.json";
    json bj = basis_to_json(alt, fine);
    bj["config_sha256"] = sha;
    write_json(dir / basis_file, bj);
  } else {
    const fs::path path = basis_choice;
    if (!fs::exists(path)) throw Error(ErrorKind::PipelineOrder, "predict: basis file " + path.string() + " not found");
    alt = basis_from_json(read_json(path), &alt_dofs);
    basis_file = fs::absolute(path).string();
  }
  const double tol = 0.25 * std::min(min_spacing(alt_dofs), min_spacing(nominal.dofs));
  std::vector<Eigen::Index> mapped;
  for (const DofInfo& d : nominal.dofs) {
    const Eigen::Index j = find_in(alt_dofs, d, tol);
    if (j < 0) {
      throw Error(ErrorKind::IncompatibleArtifacts, "predict: alternate basis has no " + std::string(kind_name(d.kind)) +
                                                        " DOF at x = " + format_number(d.x));
    }
    mapped.push_back(j);
  }
  MatrixXd force = MatrixXd::Zero(test.force.rows(), alt.n_dof());
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    force.col(mapped[i]) += test.force.col(static_cast<Eigen::Index>(i));
  }
  const Prediction p = mesh_transfer_predict(alt, net, force, dt, mapped, ropt, &train_basis);
  write_prediction("prediction_alt", p);
  manifest["basis"] = basis_file;
  manifest["elements"] = basis_choice == "alt_mesh" ? json(cfg.mesh_transfer_elements > 0
                                                                ? cfg.mesh_transfer_elements
                                                                : 2 * cfg.model.nominal_beam.elements)
                                                    : json(nullptr);
  manifest["max_frequency_difference"] =
      ((alt.frequencies - train_basis.frequencies).array() / train_basis.frequencies.array()).abs().maxCoeff();
  manifest["extrapolation_fraction"] = p.extrapolation_fraction;
  std::vector<std::string> in{"surrogate.json", "basis.json", "test/truth.csv"};
  if (basis_choice == "alt_mesh") in.push_back(basis_file);
  manifest["inputs"] = hashes(dir, in);
  manifest["files"] = hashes(dir, {"prediction_alt.csv"});
  write_json(dir / "prediction_alt_manifest.json", manifest);
}

json run_report(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  require_artifacts(dir,
                    {"train/manifest.json", "test/manifest.json", "basis.json", "theta.json", "smoothed.csv",
                     "inference.json", "surrogate.json", "prediction_manifest.json", "prediction.csv",
                     "nominal_prediction.csv"},
                    "report");
  const std::string sha = config_hash(cfg);
  const json inference = read_json(dir / "inference.json");
  const json sj = read_json(dir / "surrogate.json");
  const json pm = read_json(dir / "prediction_manifest.json");
  check_config(read_json(dir / "train/manifest.json"), sha, "train/manifest.json");
  check_config(read_json(dir / "test/manifest.json"), sha, "test/manifest.json");
  check_config(inference, sha, "inference.json");
  check_hashes(dir, inference, "inputs", "inference.json");
  check_hashes(dir, inference, "files", "inference.json");
  require(sj.contains("provenance"), ErrorKind::IncompatibleArtifacts, "surrogate.json has no provenance record");
  check_config(sj.at("provenance"), sha, "surrogate.json");
  check_hashes(dir, sj.at("provenance"), "inputs", "surrogate.json");
  check_config(pm, sha, "prediction_manifest.json");
  check_hashes(dir, pm, "inputs", "prediction_manifest.json");
  check_hashes(dir, pm, "files", "prediction_manifest.json");
  const bool have_alt = fs::exists(dir / "prediction_alt_manifest.json");
  json am;
  if (have_alt) {
    am = read_json(dir / "prediction_alt_manifest.json");
    check_config(am, sha, "prediction_alt_manifest.json");
    check_hashes(dir, am, "inputs", "prediction_alt_manifest.json");
    check_hashes(dir, am, "files", "prediction_alt_manifest.json");
  }
  write_snapshot(cfg);

  const TruthRecord train = read_record(dir / "train");
  const TruthRecord test = read_record(dir / "test");
  const FEModel nominal = build_structure(cfg, false);
  require(nominal.n_dof() == test.displacement.cols(), ErrorKind::IncompatibleArtifacts,
          "report: records do not match the nominal model");
  const DofGroups groups = dof_groups(nominal, train.sensor_dofs);
  const ModalBasis basis = basis_from_json(read_json(dir / "basis.json"));
  const SmoothedTrajectory sm = read_smoothed(dir / "smoothed.csv");
  const RectifiedModel plain{basis, nullptr, rectified_options(cfg)};

  const NmseSet nominal_train = nmse_set(groups, train.displacement, predict(plain, train.force, train.dt(), groups.all).u);
  const NmseSet inferred = nmse_set(groups, train.displacement, reconstruct(basis, sm.q));
  const NmseSet nominal_test =
      nmse_set(groups, test.displacement, read_csv(dir / "nominal_prediction.csv").columns_with_prefix("u_"));
  const NmseSet rectified = nmse_set(groups, test.displacement, read_csv(dir / "prediction.csv").columns_with_prefix("u_"));
  std::optional<NmseSet> moved;
  if (have_alt) moved = nmse_set(groups, test.displacement, read_csv(dir / "prediction_alt.csv").columns_with_prefix("u_"));

  const double noise = cfg.sensors.noise_percent;
  json rows = json::object();
  auto row = [&](const std::string& name, double NmseSet::*field) {
    json r = {{"nominal_train_nmse", nominal_train.*field},
              {"inference_nmse", inferred.*field},
              {"inference_reduction_percent", percent_reduction(nominal_train.*field, inferred.*field)},
              {"nominal_test_nmse", nominal_test.*field},
              {"rectified_nmse", rectified.*field},
              {"rectified_reduction_percent", percent_reduction(nominal_test.*field, rectified.*field)}};
    if (moved) {
      r["mesh_transfer_nmse"] = (*moved).*field;
      r["mesh_transfer_reduction_percent"] = percent_reduction(nominal_test.*field, (*moved).*field);
    }
    rows[name] = r;
  };
  row("translations", &NmseSet::translations);
  row("pooled", &NmseSet::pooled);
  row("sensors", &NmseSet::sensors);

  json table = {{"name", cfg.name},
                {"noise_percent", noise},
                {"modes", basis.count()},
                {"hidden", sj.at("hidden")},
                {"rows", rows},
                {"extrapolation_fraction", pm.at("extrapolation_fraction")},
                {"config_sha256", sha}};
  if (have_alt) {
    table["mesh_transfer"] = {{"basis", am.at("basis")},
                              {"max_frequency_difference", am.at("max_frequency_difference")},
                              {"extrapolation_fraction", am.at("extrapolation_fraction")}};
  }
  write_json(dir / "results_table.json", table);

  const std::string tag = format_number(noise) + "pct";
  std::ostringstream csv;
  csv << "group,nominal_train_nmse,inference_nmse_" << tag << ",inference_reduction_" << tag
      << ",nominal_test_nmse,rectified_nmse_" << tag << ",rectified_reduction_" << tag;
  if (have_alt) csv << ",mesh_transfer_nmse_" << tag << ",mesh_transfer_reduction_" << tag;
  csv << "\n";
  for (const char* name : {"translations", "pooled", "sensors"}) {
    const json& r = rows.at(name);
    csv << name;
    for (const char* key : {"nominal_train_nmse", "inference_nmse", "inference_reduction_percent",
                            "nominal_test_nmse", "rectified_nmse", "rectified_reduction_percent"}) {
      csv << "," << format_number(r.at(key).get<double>());
    }
    if (have_alt) {
      csv << "," << format_number(r.at("mesh_transfer_nmse").get<double>()) << ","
          << format_number(r.at("mesh_transfer_reduction_percent").get<double>());
    }
    csv << "\n";
  }
  write_text(dir / "results_table.csv", csv.str());
  return table;
}

}  // namespace mre
