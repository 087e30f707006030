#include "mre/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mre/error.hpp"

namespace mre {

namespace fs = std::filesystem;

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorKind::IncompatibleArtifacts, "CSV column '" + name + "' not found");
}

MatrixXd CsvTable::columns_with_prefix(const std::string& prefix) const {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind(prefix, 0) == 0) idx.push_back(static_cast<Eigen::Index>(i));
  }
  MatrixXd out(data.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = data.col(idx[j]);
  return out;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& data) {
  require(static_cast<Eigen::Index>(header.size()) == data.cols(), ErrorKind::InvalidInput,
          "CSV header does not match the column count");
  std::string out;
  out.reserve(static_cast<std::size_t>(data.size()) * 24 + 64);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  std::array<char, 64> buf{};
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out += ',';
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), data(r, c));
      out.append(buf.data(), res.ptr);
    }
    out += '\n';
  }
  write_text(path, out);
}

CsvTable read_csv(const fs::path& path) {
  const std::string text = read_text(path);
  CsvTable t;
  std::size_t pos = text.find('\n');
  require(pos != std::string::npos, ErrorKind::IncompatibleArtifacts, "empty CSV file " + path.string());
  {
    std::stringstream hs(text.substr(0, pos));
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  const auto cols = static_cast<Eigen::Index>(t.header.size());
  std::vector<double> values;
  Eigen::Index rows = 0;
  const char* p = text.data() + pos + 1;
  const char* end = text.data() + text.size();
  while (p < end) {
    if (*p == '\n') {
      ++p;
      continue;
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw Error(ErrorKind::IncompatibleArtifacts,
                    path.string() + ": unreadable number on data line " + std::to_string(rows + 1));
      }
      values.push_back(v);
      p = res.ptr;
      if (c + 1 < cols) {
        require(p < end && *p == ',', ErrorKind::IncompatibleArtifacts,
                path.string() + ": short row on data line " + std::to_string(rows + 1));
        ++p;
      }
    }
    require(p == end || *p == '\n', ErrorKind::IncompatibleArtifacts,
            path.string() + ": long row on data line " + std::to_string(rows + 1));
    ++rows;
  }
  t.data.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) t.data(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return t;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::PipelineOrder, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::InvalidInput, "cannot write " + path.string());
    out << text;
    require(out.good(), ErrorKind::InvalidInput, "failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IncompatibleArtifacts, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) == 1,
          ErrorKind::NumericalFailure, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text(path)); }

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  require(j.is_array(), ErrorKind::IncompatibleArtifacts, "expected a matrix array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
    require(static_cast<Eigen::Index>(row.size()) == cols, ErrorKind::IncompatibleArtifacts, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace mre
