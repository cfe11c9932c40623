#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "humot/tasks/evaluation.hpp"

namespace humot {

// Report files written by emit_report() into the output directory:
//
//   <protocol>.csv          one row per evaluated item (and sweep value)
//   <protocol>_summary.csv  mean/std per (sweep, topology) and pooled ("all")
//   <protocol>.svg          sweep plot, only for protocols with a sweep axis
//   <protocol>.json         rows and fingerprint, readable by from_json
//
// Item CSV columns, in order:
//   protocol,item,topology,unseen,sweep,input_mpjpe_cm,mpjpe_cm,
//   normalized_mpjpe,kept_mpjpe_cm,heldout_mpjpe_cm
// Summary CSV columns:
//   protocol,topology,sweep,count,input_mpjpe_cm,mpjpe_cm_mean,
//   mpjpe_cm_std,normalized_mpjpe_mean,kept_mpjpe_cm,heldout_mpjpe_cm
// Missing values are written as empty fields.

enum class ReportFormat { kCsv, kSvg, kJson };

inline constexpr const char* kReportColumns =
    "protocol,item,topology,unseen,sweep,input_mpjpe_cm,mpjpe_cm,normalized_mpjpe,kept_mpjpe_cm,heldout_mpjpe_cm";
inline constexpr const char* kSummaryColumns =
    "protocol,topology,sweep,count,input_mpjpe_cm,mpjpe_cm_mean,mpjpe_cm_std,normalized_mpjpe_mean,kept_mpjpe_cm,"
    "heldout_mpjpe_cm";

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6f") {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

inline std::string report_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << kReportColumns << "\n";
  for (const auto& r : rep.rows)
    os << rep.protocol << ',' << r.item << ',' << r.topology << ',' << (r.unseen ? 1 : 0) << ','
       << detail::fmt(r.sweep, "%g") << ',' << detail::fmt(r.input_mpjpe) << ',' << detail::fmt(r.mpjpe) << ','
       << detail::fmt(r.normalized, "%.8f") << ',' << detail::fmt(r.kept_mpjpe) << ',' << detail::fmt(r.heldout_mpjpe)
       << "\n";
  return os.str();
}

inline std::string summary_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << kSummaryColumns << "\n";
  for (const auto& a : rep.aggregates())
    os << rep.protocol << ',' << a.topology << ',' << detail::fmt(a.sweep, "%g") << ',' << a.count << ','
       << detail::fmt(a.input_mean) << ',' << detail::fmt(a.mean) << ',' << detail::fmt(a.stddev) << ','
       << detail::fmt(a.normalized_mean, "%.8f") << ',' << detail::fmt(a.kept_mean) << ','
       << detail::fmt(a.heldout_mean) << "\n";
  return os.str();
}

/// Line plot of the pooled sweep. Denoising plots output against input
/// error with a y = x reference; other sweeps plot error against the sweep
/// value.
inline std::string report_svg(const EvalReport& rep) {
  struct Point {
    double x, y;
  };
  std::vector<Point> pts;
  const bool denoise = rep.sweep_axis == "sigma_cm";
  for (const auto& a : rep.aggregates())
    if (a.topology == "all") pts.push_back({denoise ? a.input_mean : a.sweep, a.mean});
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });

  const double W = 480, H = 360, L = 60, R = 20, T = 30, B = 50;
  double xmax = 0, ymax = 0;
  for (const auto& p : pts) xmax = std::max(xmax, p.x), ymax = std::max(ymax, p.y);
  if (denoise) xmax = ymax = std::max(xmax, ymax);
  xmax = xmax > 0 ? xmax * 1.05 : 1.0;
  ymax = ymax > 0 ? ymax * 1.05 : 1.0;
  auto sx = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto sy = [&](double y) { return H - B - (H - T - B) * y / ymax; };
  auto f = [](double v) { return detail::fmt(v, "%.2f"); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << rep.protocol << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmax * i / 4, yv = ymax * i / 4;
    os << "<text x=\"" << f(sx(xv)) << "\" y=\"" << H - B + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fmt(xv, "%.3g")
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << f(sy(yv) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fmt(yv, "%.3g")
       << "</text>\n";
  }
  const std::string xlabel = denoise ? "input MPJPE (cm)" : (rep.sweep_axis == "proportion" ? "proportion of input joints" : rep.sweep_axis);
  const std::string ylabel = denoise ? "output MPJPE (cm)" : "MPJPE (cm)";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel << "</text>\n";
  os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 14 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << ylabel << "</text>\n";
  if (denoise)
    os << "<line x1=\"" << f(sx(0)) << "\" y1=\"" << f(sy(0)) << "\" x2=\"" << f(sx(xmax)) << "\" y2=\"" << f(sy(xmax))
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  if (!pts.empty()) {
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << f(sx(pts[i].x)) << ',' << f(sy(pts[i].y));
    os << "\"/>\n";
    for (const auto& p : pts)
      os << "<circle cx=\"" << f(sx(p.x)) << "\" cy=\"" << f(sy(p.y)) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace detail {

inline nlohmann::json nan_to_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

inline double null_to_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const EvalReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"item", r.item},
                    {"topology", r.topology},
                    {"unseen", r.unseen},
                    {"sweep", r.sweep},
                    {"input_mpjpe_cm", r.input_mpjpe},
                    {"mpjpe_cm", r.mpjpe},
                    {"normalized_mpjpe", r.normalized},
                    {"kept_mpjpe_cm", detail::nan_to_null(r.kept_mpjpe)},
                    {"heldout_mpjpe_cm", detail::nan_to_null(r.heldout_mpjpe)}});
  j = {{"protocol", rep.protocol}, {"sweep_axis", rep.sweep_axis}, {"fingerprint", rep.fingerprint}, {"rows", rows}};
}

inline void from_json(const nlohmann::json& j, EvalReport& rep) {
  rep.protocol = j.at("protocol").get<std::string>();
  rep.sweep_axis = j.value("sweep_axis", std::string());
  rep.fingerprint = j.value("fingerprint", std::string());
  rep.rows.clear();
  for (const auto& r : j.at("rows")) {
    EvalRow row;
    row.item = r.at("item").get<std::string>();
    row.topology = r.at("topology").get<std::string>();
    row.unseen = r.value("unseen", false);
    row.sweep = r.value("sweep", 0.0);
    row.input_mpjpe = r.value("input_mpjpe_cm", 0.0);
    row.mpjpe = r.at("mpjpe_cm").get<double>();
    row.normalized = r.value("normalized_mpjpe", 0.0);
    row.kept_mpjpe = detail::null_to_nan(r.value("kept_mpjpe_cm", nlohmann::json()));
    row.heldout_mpjpe = detail::null_to_nan(r.value("heldout_mpjpe_cm", nlohmann::json()));
    rep.rows.push_back(std::move(row));
  }
}

/// Writes the report files; returns their paths.
inline std::vector<std::filesystem::path> emit_report(const EvalReport& rep, const std::filesystem::path& dir,
                                                      const std::vector<ReportFormat>& formats = {ReportFormat::kCsv,
                                                                                                  ReportFormat::kSvg}) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for writing");
    os << text;
    written.push_back(path);
  };
  const std::string base = rep.protocol.empty() ? "report" : rep.protocol;
  for (ReportFormat f : formats) {
    if (f == ReportFormat::kCsv) {
      put(base + ".csv", report_csv(rep));
      put(base + "_summary.csv", summary_csv(rep));
    } else if (f == ReportFormat::kJson) {
      put(base + ".json", nlohmann::json(rep).dump(1) + "\n");
    } else if (!rep.sweep_axis.empty()) {
      put(base + ".svg", report_svg(rep));
    }
  }
  return written;
}

}  // namespace humot
