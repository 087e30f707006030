#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mre/inference.hpp"
#include "mre/modal.hpp"
#include "mre/structural.hpp"
#include "mre/surrogate.hpp"
#include "mre/truth.hpp"

namespace mre {

struct DampingConfig {
  enum class Kind { Lumped, Rayleigh, Modal } kind = Kind::Lumped;
  double zeta_i = 0.02, zeta_j = 0.02;
  int mode_i = 1, mode_j = 2;  // 1-based
  std::vector<double> ratios{0.02};
};

struct BeamModelConfig {
  enum class Theory { EulerBernoulli, Timoshenko } theory = Theory::Timoshenko;
  int elements = 50;
  BoundarySpec boundary;
  TimoshenkoElement element = TimoshenkoElement::ExactStiffness;
  DampingConfig damping;
};

struct BuildingModelConfig {
  std::optional<int> damage_story;
  double damage_fraction = 0.0;
  DampingConfig damping{DampingConfig::Kind::Rayleigh};
};

struct ModelConfig {
  enum class Kind { Beam, ShearBuilding } kind = Kind::Beam;
  BeamProperties beam;
  std::optional<double> damping_w_target;  // set when damping_w = "auto"
  int damping_w_calibration_elements = 50;
  ShearBuildingSpec building;              // undamaged base structure
  BeamModelConfig truth_beam, nominal_beam;
  BuildingModelConfig truth_building, nominal_building;
  NonlinearRestoringSpec nonlinearity;     // truth only
};

struct ModalConfig {
  Eigen::Index modes = 4;     // 0 = choose from the training spectrum
  Eigen::Index max_auto_modes = 12;
  double floor_db = 10.0;
  ModalDampingRule damping;
};

struct GpConfig {
  std::string kernel = "matern12";
  double jitter = kDefaultJitter;
  double prior_state_var = 1e-6;
  double steady_tol = 1e-13;
  PriorSpec priors;
  MapOptions map;
};

struct SurrogateConfig {
  TrainingConfig training;
  int hidden = 0;  // 0 = cross-validated choice among training.hidden_candidates
};

struct IntegratorConfig {
  TruthIntegrator truth = TruthIntegrator::RungeKutta4;
  int substep_factor = 10;
  int prediction_substeps = 10;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "mre_out";
  ModelConfig model;
  ExcitationSpec train;
  ExcitationSpec test;
  SensorSpec sensors;
  bool sensor_seed_explicit = false;
  ModalConfig modal;
  GpConfig gp;
  SurrogateConfig surrogate;
  IntegratorConfig integrator;
  int mesh_transfer_elements = 0;  // 0 = no alternate mesh
  nlohmann::json source;           // the parsed input document
};

/// Parses and validates a configuration document. Unknown keys, wrong types
/// and out-of-range values raise ErrorKind::ConfigError with the JSON path
/// and, where it can be located, the line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field with defaults filled in.
nlohmann::json resolved_config(const ExperimentConfig& cfg);

/// Stable per-stage seed: the first 8 bytes of SHA-256("<global>:<label>").
std::uint64_t derive_seed(std::uint64_t global, const std::string& label);

}  // namespace mre
