#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mre/linalg.hpp"

namespace mre {

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd data;

  /// Column index by header name; throws if absent.
  Eigen::Index column(const std::string& name) const;
  /// All columns whose header starts with `prefix`, in file order.
  MatrixXd columns_with_prefix(const std::string& prefix) const;
};

/// Shortest round-trip decimal representation of every value.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const MatrixXd& data);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& path);

/// Row-major nested arrays.
nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j);

/// Names "<prefix>0", "<prefix>1", ...
std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count);

}  // namespace mre
