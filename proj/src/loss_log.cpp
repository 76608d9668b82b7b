#include "aiparse/loss_log.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aiparse {

std::vector<double> LossLog::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("loss log has no column '" + name + "'");
  const auto idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(idx));
  return out;
}

void LossLog::append(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("loss log row width mismatch");
  rows.push_back(std::move(row));
}

void LossLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  char buf[64];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

LossLog LossLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing loss log " + path.string());
  LossLog log;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty loss log " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) log.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    log.append(std::move(row));
  }
  return log;
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out;
  out.reserve(values.size());
  double sum = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= static_cast<std::size_t>(window)) sum -= values[i - window];
    const auto n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

}  // namespace aiparse
