#pragma once

// Result files: dip.csv, counts.csv, summary.json, budget.json, servo.csv.
// Output bytes depend only on the result, so equal runs give equal files.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qsync/dip_fit.hpp"
#include "qsync/simulation.hpp"

namespace qsync {

inline constexpr const char* dip_csv_header = "position_mm,fourfolds,err_fourfolds,expected_rate";

namespace detail {

inline std::string num(double v) { return fmt::format("{:.10g}", v); }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Rounds through the same 10 significant digits as the CSVs.
inline double round10(double v) { return std::isfinite(v) ? std::stod(num(v)) : v; }

inline nlohmann::json budget_json(const LinkBudgetReport& r) {
  nlohmann::json j;
  j["input_power_mw"] = round10(r.input_power_mw);
  j["output_power_mw"] = round10(r.output_power_mw);
  j["total_gain_db"] = round10(r.total_gain_db);
  j["final_duration_ps"] = round10(r.final_duration_ps);
  j["stages"] = nlohmann::json::array();
  for (const auto& e : r.entries)
    j["stages"].push_back({{"stage", e.stage},
                           {"input_power_mw", round10(e.input_power_mw)},
                           {"output_power_mw", round10(e.output_power_mw)},
                           {"gain_db", round10(e.gain_db)},
                           {"duration_after_ps", round10(e.duration_after_ps)}});
  return j;
}

}  // namespace detail

inline std::string dip_csv(const RunResult& r) {
  std::string s = std::string(dip_csv_header) + "\n";
  for (const auto& p : r.points) {
    const auto n = static_cast<double>(p.tally.fourfolds);
    s += fmt::format("{},{},{},{}\n", detail::num(p.position_mm), p.tally.fourfolds, detail::num(std::sqrt(n)),
                     detail::num(p.expected_fourfolds));
  }
  return s;
}

inline std::string counts_csv(const RunResult& r) {
  std::string s =
      "position_mm,singles_apd1,singles_apd2,singles_apd3,singles_apd4,"
      "twofold_12,twofold_13,twofold_14,twofold_23,twofold_24,twofold_34,fourfolds,integration_h,mean_overlap\n";
  for (const auto& p : r.points) {
    const auto& t = p.tally;
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", detail::num(p.position_mm), t.singles[0],
                     t.singles[1], t.singles[2], t.singles[3], t.twofolds[0][1], t.twofolds[0][2], t.twofolds[0][3],
                     t.twofolds[1][2], t.twofolds[1][3], t.twofolds[2][3], t.fourfolds,
                     detail::num(t.integration_time_h), detail::num(p.mean_overlap));
  }
  return s;
}

inline std::string servo_csv(const ServoTrace& trace) {
  std::string s = "time_s,drift_mm,measured_offset_mm,correction_mm,residual_mm,tracking_ok\n";
  for (const auto& row : trace.rows)
    s += fmt::format("{},{},{},{},{},{}\n", detail::num(row.time_s), detail::num(row.drift_mm),
                     std::isnan(row.measured_offset_mm) ? std::string("nan") : detail::num(row.measured_offset_mm),
                     detail::num(row.correction_mm), detail::num(row.residual_mm), row.tracking_ok ? 1 : 0);
  return s;
}

inline nlohmann::json summary_json(const RunResult& r) {
  using detail::round10;
  const auto& m = r.fit.model;
  nlohmann::json j;
  j["scenario"] = r.scenario_name;
  j["mode"] = to_string(r.mode);
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["points"] = r.points.size();
  j["visibility"] = round10(r.visibility.visibility);
  j["sigma_visibility"] = round10(r.visibility.sigma);
  j["visibility_lower_bound"] = round10(r.visibility.lower_bound);
  j["fwhm_mm"] = round10(m.fwhm_mm());
  j["fwhm_ps"] = round10(m.fwhm_mm() * r.ps_per_mm);
  j["baseline"] = round10(m.baseline);
  j["center_mm"] = round10(m.center_mm);
  j["width_sigma_mm"] = round10(m.width_sigma_mm);
  j["errors"] = {{"baseline", round10(r.fit.errors[0])},
                 {"visibility", round10(r.fit.errors[1])},
                 {"center_mm", round10(r.fit.errors[2])},
                 {"width_sigma_mm", round10(r.fit.errors[3])}};
  j["chi2"] = round10(r.fit.chi2);
  j["ndof"] = r.fit.ndof;
  j["fit_converged"] = r.fit.converged;
  j["fit_message"] = r.fit.message;
  j["model_dip_sigma_ps"] = round10(r.dip_sigma_ps);
  j["relative_jitter_ps"] = round10(r.relative_jitter_ps);
  j["visibility_ceiling"] = round10(r.visibility_ceiling);
  if (r.visibility.lower_bound > 0.0)
    j["jitter_bound_ps"] = round10(infer_jitter_bound(r.visibility.lower_bound, r.dip_sigma_ps));
  if (r.servo) {
    j["servo"] = {{"tracking_lost", r.servo->tracking_lost},
                  {"residual_rms_mm", round10(r.servo->residual_rms(r.servo->rows.back().time_s))}};
  }
  return j;
}

inline nlohmann::json budget_report_json(const std::array<ArmBudget, 2>& budgets) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : budgets)
    j.push_back({{"distribution", detail::budget_json(b.distribution)}, {"node", detail::budget_json(b.node)}});
  return j;
}

/// Writes every result file into `directory` (created if needed).
inline std::vector<std::filesystem::path> emit_outputs(const RunResult& r, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create " + directory.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const auto p = directory / name;
    detail::write_file(p, content);
    written.push_back(p);
  };
  put("dip.csv", dip_csv(r));
  put("counts.csv", counts_csv(r));
  put("summary.json", summary_json(r).dump(2) + "\n");
  put("budget.json", budget_report_json(r.budgets).dump(2) + "\n");
  if (r.servo) put("servo.csv", servo_csv(*r.servo));
  return written;
}

/// Reads a dip CSV (header as written by dip_csv; expected_rate optional).
/// Errors below 1 count are raised to 1 for fitting.
inline std::vector<DipPoint> read_dip_csv(std::istream& in, const std::string& name = "input") {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("position_mm,fourfolds,err_fourfolds", 0) != 0)
    throw std::runtime_error(name + ": unexpected header '" + line + "'");
  std::vector<DipPoint> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      DipPoint p{std::stod(a), std::stod(b), std::stod(c)};
      p.count_error = std::max(p.count_error, 1.0);
      pts.push_back(p);
    } catch (const std::exception&) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  return pts;
}

inline std::vector<DipPoint> read_dip_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dip_csv(in, path.string());
}

}  // namespace qsync
