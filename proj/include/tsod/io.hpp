#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tsod {

/// 17 significant digits, shortest exponent form; round-trips every double.
std::string format_double(double value);

/// Minimal CSV writer: comma separated, LF line endings, no quoting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void field(double value);
  void field(std::int64_t value);
  void field(const std::string& value);
  void end_row();
  void close();

 private:
  void separator();

  std::string path_;
  std::ofstream out_;
  bool row_started_ = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws IoError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
void ensure_directory(const std::string& path);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat);
/// Nested row arrays -> matrix; `key` names the entry in error messages.
Eigen::MatrixXd matrix_from_json(const nlohmann::json& node, const std::string& key);

}  // namespace tsod
