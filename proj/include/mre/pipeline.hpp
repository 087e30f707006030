#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mre/config.hpp"
#include "mre/error.hpp"
#include "mre/modal.hpp"
#include "mre/truth.hpp"

namespace mre {

/// Process exit status for a failure: 2 configuration, 3 numerical,
/// 4 pipeline order or inconsistent artifacts.
int exit_code(ErrorKind kind);

/// SHA-256 of the resolved configuration without the output directory.
std::string config_hash(const ExperimentConfig& cfg);

/// Record directory layout: truth.csv (t, u_*, v_*, a_*, f_*),
/// sensors.csv (t, clean_*, noisy_*) and manifest.json.
void write_record(const std::filesystem::path& dir, const TruthRecord& record,
                  const nlohmann::json& manifest);
TruthRecord read_record(const std::filesystem::path& dir);

nlohmann::json basis_to_json(const ModalBasis& basis, const FEModel& model);
/// Basis plus the DOF layout (coordinates and kinds) it was solved on.
ModalBasis basis_from_json(const nlohmann::json& j, std::vector<DofInfo>* dofs = nullptr);

// Pipeline stages. Each reads and writes under cfg.output_dir.
void run_simulate(const ExperimentConfig& cfg);
void run_infer(const ExperimentConfig& cfg);
void run_train_surrogate(const ExperimentConfig& cfg);
/// `basis` is empty for the training mesh, "alt_mesh" for the configured
/// alternate mesh, or the path of a basis JSON file.
void run_predict(const ExperimentConfig& cfg, const std::string& basis = "");
nlohmann::json run_report(const ExperimentConfig& cfg);

}  // namespace mre
