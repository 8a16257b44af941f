#pragma once

#include "nyqsurf/io/scene_io.hpp"
#include "nyqsurf/nyquist.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nyqsurf::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One row per surfel. Unsampled surfels carry ratio=nan and satisfied=0.
inline void write_report_csv(std::ostream& out, const FrequencyReport& rep) {
  out << "index,nu_hat,nu,ratio,satisfied\n";
  for (const SurfelRecord& r : rep.records) {
    out << r.index << "," << format_double(r.nu_hat) << "," << format_double(r.nu) << ","
        << format_double(r.sampled ? r.ratio : std::nan("")) << "," << (r.satisfied ? 1 : 0) << "\n";
  }
}

inline nlohmann::json report_summary_json(const FrequencyReport& rep) {
  const ReportSummary& s = rep.summary;
  nlohmann::json j;
  j["surfel_count"] = s.surfel_count;
  j["sampled_count"] = s.sampled_count;
  j["unsampled_count"] = rep.unsampled.size();
  j["satisfied_count"] = s.satisfied_count;
  j["fraction_satisfied"] = s.fraction_satisfied;
  j["min_ratio"] = s.min_ratio;
  j["max_ratio"] = s.max_ratio;
  j["mean_ratio"] = s.mean_ratio;
  j["histogram"] = {{"edges", rep.histogram.edges}, {"counts", rep.histogram.counts}};
  j["unsampled"] = rep.unsampled;
  return j;
}

// Companion JSON path: report.csv -> report.json.
inline std::filesystem::path summary_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

inline void save_report(const std::filesystem::path& csv, const FrequencyReport& rep) {
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + csv.string() + "'");
  write_report_csv(out, rep);
  if (!out) throw std::runtime_error("write failed for '" + csv.string() + "'");
  detail::write_text(summary_path(csv), report_summary_json(rep).dump(2) + "\n");
}

}  // namespace nyqsurf::io
