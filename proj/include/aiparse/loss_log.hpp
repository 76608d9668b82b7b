#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace aiparse {

/// Table of per-epoch (or per-step) loss terms, persisted as CSV.
struct LossLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Throws std::out_of_range for an unknown column.
  std::vector<double> column(const std::string& name) const;
  void append(std::vector<double> row);

  void write_csv(const std::filesystem::path& path) const;
  static LossLog read_csv(const std::filesystem::path& path);

  bool operator==(const LossLog&) const = default;
};

/// Trailing moving average over `window` entries (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& values, int window);

}  // namespace aiparse
