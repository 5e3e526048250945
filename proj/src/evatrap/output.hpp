#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evatrap/grid.hpp"

namespace evatrap {

using Json = nlohmann::ordered_json;

/// Fixed-precision number formatting shared by every table.
std::string format_number(double v);

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  std::string csv() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Output directory that remembers what it wrote. Writes happen on the
/// calling thread only; the content hash covers every data file.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  OutputDir sub(const std::string& name) const;

  void write(const std::string& name, const std::string& content);
  void write(const std::string& name, const Table& table) { write(name, table.csv()); }
  void write(const std::string& name, const Json& json) { write(name, json.dump(2) + "\n"); }

  /// Columns x_um, y_um, value on every stride-th cell.
  void write_field(const std::string& name, const SimulationGrid& grid, const std::function<double(std::size_t)>& value,
                   int stride, const std::string& value_name);

  /// FNV-1a over (name, content) of all files written through this object and its subdirectories.
  std::string content_hash() const;
  std::vector<std::string> files() const;

 private:
  OutputDir(std::filesystem::path root, std::string prefix, std::shared_ptr<std::map<std::string, std::uint64_t>> log);

  std::filesystem::path root_;
  std::string prefix_;
  std::shared_ptr<std::map<std::string, std::uint64_t>> log_;
};

std::uint64_t fnv1a(const std::string& data, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace evatrap
