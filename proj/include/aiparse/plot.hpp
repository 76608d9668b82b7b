#pragma once

#include <filesystem>
#include <string>

#include "aiparse/loss_log.hpp"
#include "aiparse/metrics.hpp"

namespace aiparse {

/// SVG line chart of one loss-log column (default: total loss), one vertex
/// per row.
std::string loss_curve_svg(const LossLog& log, const std::string& column = "L_total");

/// SVG bar chart with one bar per MetricReport scalar field.
std::string metric_bars_svg(const MetricReport& report);

/// Dispatches on the input: *.csv is a loss log, *.json a metric report.
/// Throws std::runtime_error if the input is missing.
void plot_file(const std::filesystem::path& in, const std::filesystem::path& out);

}  // namespace aiparse
