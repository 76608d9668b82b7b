#include "aiparse/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace aiparse {
namespace {

constexpr double kWidth = 640, kHeight = 400, kMargin = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string header(const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << title << "</text>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string loss_curve_svg(const LossLog& log, const std::string& column) {
  const auto values = log.column(column);
  std::ostringstream out;
  out << header(column + " per epoch");
  if (values.empty()) {
    out << "</svg>\n";
    return out.str();
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = std::min(0.0, *lo_it);
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double plot_w = kWidth - 2 * kMargin, plot_h = kHeight - 2 * kMargin;
  out << "<polyline id=\"curve\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = kMargin + (values.size() > 1 ? plot_w * i / (values.size() - 1.0) : plot_w / 2);
    const double y = kHeight - kMargin - plot_h * (values[i] - lo) / (hi - lo);
    out << (i ? " " : "") << fmt(x) << "," << fmt(y);
  }
  out << "\"/>\n";
  out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin << "\" text-anchor=\"end\" font-size=\"11\">"
      << fmt(hi) << "</text>\n";
  out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(lo) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string metric_bars_svg(const MetricReport& r) {
  const std::vector<std::pair<std::string, double>> bars = {
      {"miou", r.miou},     {"ap_p_50", r.ap_p_50},   {"ap_p_vol", r.ap_p_vol},
      {"pcp_50", r.pcp_50}, {"ap_r_vol", r.ap_r_vol}, {"map_bbox", r.map_bbox}};
  std::ostringstream out;
  out << header("evaluation metrics");
  const double plot_w = kWidth - 2 * kMargin, plot_h = kHeight - 2 * kMargin;
  const double slot = plot_w / bars.size();
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double v = std::isfinite(bars[i].second) ? std::clamp(bars[i].second, 0.0, 1.0) : 0.0;
    const double x = kMargin + slot * i + slot * 0.15;
    const double h = plot_h * v;
    out << "<rect class=\"bar\" data-metric=\"" << bars[i].first << "\" x=\"" << fmt(x) << "\" y=\""
        << fmt(kHeight - kMargin - h) << "\" width=\"" << fmt(slot * 0.7) << "\" height=\"" << fmt(h)
        << "\" fill=\"darkorange\"/>\n";
    out << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << bars[i].first << "</text>\n";
    out << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << fmt(kHeight - kMargin - h - 4)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(bars[i].second) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void plot_file(const std::filesystem::path& in, const std::filesystem::path& out) {
  if (!std::filesystem::exists(in)) throw std::runtime_error("plot: missing input " + in.string());
  if (in.extension() == ".csv") {
    write_text(out, loss_curve_svg(LossLog::read_csv(in)));
    return;
  }
  std::ifstream f(in);
  std::stringstream buf;
  buf << f.rdbuf();
  write_text(out, metric_bars_svg(report_from_json(buf.str())));
}

}  // namespace aiparse
