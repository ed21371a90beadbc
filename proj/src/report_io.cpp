#include "tsod/io.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>

#include "tsod/error.hpp"

namespace tsod {

std::string format_double(double value) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
  for (const auto& name : header) field(name);
  end_row();
}

void CsvWriter::separator() {
  if (row_started_) out_.put(',');
  row_started_ = true;
}

void CsvWriter::field(double value) {
  separator();
  out_ << format_double(value);
}

void CsvWriter::field(std::int64_t value) {
  separator();
  out_ << value;
}

void CsvWriter::field(const std::string& value) {
  separator();
  out_ << value;
}

void CsvWriter::end_row() {
  out_.put('\n');
  row_started_ = false;
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw IoError("failed writing " + path_);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("csv column not found: " + name);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv: " + path);
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split_line(line));
  }
  return table;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  out.close();
  if (out.fail()) throw IoError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& node, const std::string& key) {
  if (!node.is_array() || node.empty())
    throw ConfigError(key, "expected a non-empty array of rows");
  // A flat numeric array is read as a single row.
  if (!node.front().is_array()) {
    Eigen::MatrixXd mat(1, static_cast<Eigen::Index>(node.size()));
    for (std::size_t j = 0; j < node.size(); ++j) {
      if (!node[j].is_number()) throw ConfigError(key, "entries must be numbers");
      mat(0, static_cast<Eigen::Index>(j)) = node[j].get<double>();
    }
    return mat;
  }
  const auto rows = static_cast<Eigen::Index>(node.size());
  const auto cols = static_cast<Eigen::Index>(node.front().size());
  Eigen::MatrixXd mat(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = node[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(key, "rows must all have the same length");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number()) throw ConfigError(key, "entries must be numbers");
      mat(i, j) = cell.get<double>();
    }
  }
  return mat;
}

}  // namespace tsod
