#include "evatrap/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "evatrap/errors.hpp"

namespace evatrap {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw Error("table row has the wrong number of cells");
  rows_.push_back(std::move(row));
}

std::string Table::csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      const bool quote = cells[k].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out += cells[k];
        continue;
      }
      out += '"';
      for (char c : cells[k]) {
        if (c == '"') out += '"';
        out += c;
      }
      out += '"';
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

OutputDir::OutputDir(std::filesystem::path root)
    : OutputDir(std::move(root), "", std::make_shared<std::map<std::string, std::uint64_t>>()) {}

OutputDir::OutputDir(std::filesystem::path root, std::string prefix,
                     std::shared_ptr<std::map<std::string, std::uint64_t>> log)
    : root_(std::move(root)), prefix_(std::move(prefix)), log_(std::move(log)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error("cannot create output directory " + root_.string() + ": " + ec.message());
}

OutputDir OutputDir::sub(const std::string& name) const { return OutputDir(root_ / name, prefix_ + name + "/", log_); }

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = root_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
  (*log_)[prefix_ + name] = fnv1a(content);
}

void OutputDir::write_field(const std::string& name, const SimulationGrid& grid,
                            const std::function<double(std::size_t)>& value, int stride, const std::string& value_name) {
  Table t({"x_um", "y_um", value_name});
  for (int j = 0; j < grid.ny; j += stride)
    for (int i = 0; i < grid.nx; i += stride)
      t.add({format_number(grid.x(i) * 1e6), format_number(grid.y(j) * 1e6), format_number(value(grid.index(i, j)))});
  write(name, t);
}

std::string OutputDir::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, digest] : *log_) {
    if (name.ends_with("run_report.json")) continue;
    h = fnv1a(name, h);
    h = fnv1a(std::to_string(digest), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> OutputDir::files() const {
  std::vector<std::string> out;
  for (const auto& kv : *log_) out.push_back(kv.first);
  return out;
}

}  // namespace evatrap
