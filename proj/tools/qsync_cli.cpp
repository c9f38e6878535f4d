// Command-line front end: run, sweep, fit, budget, project, presets.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 scenario load error,
// 3 dip fit failure, 4 servo tracking lost.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qsync/qsync.hpp"

namespace {

constexpr int exit_load_error = 2;
constexpr int exit_fit_failure = 3;
constexpr int exit_tracking_lost = 4;

struct ScenarioArgs {
  std::string path;
  std::string preset;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    auto* s = app->add_option("--scenario", path, "scenario file");
    auto* p = app->add_option("--preset", preset, "built-in scenario name");
    s->excludes(p);
    app->add_option("--seed", seed, "override the scenario seed");
  }

  qsync::Scenario load() const {
    qsync::Scenario sc;
    if (!preset.empty()) {
      sc = qsync::load_preset(preset);
    } else if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path);
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        sc = qsync::load_scenario(ss.str());
      } catch (const qsync::LoadError& e) {
        throw qsync::LoadError(path + ": " + e.what());
      }
    } else {
      throw qsync::LoadError("give --scenario PATH or --preset NAME");
    }
    if (seed) sc.seed = *seed;
    return sc;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

void print_budget(const qsync::LinkBudgetReport& r, const std::string& title) {
  fmt::print("{}\n", title);
  fmt::print("  {:<24} {:>14} {:>14} {:>10} {:>14}\n", "stage", "in [mW]", "out [mW]", "dB", "duration [ps]");
  for (const auto& e : r.entries)
    fmt::print("  {:<24} {:>14.6g} {:>14.6g} {:>10.3f} {:>14.4g}\n", e.stage, e.input_power_mw, e.output_power_mw,
               e.gain_db, e.duration_after_ps);
  fmt::print("  total {:.3f} dB, {:.6g} mW -> {:.6g} mW\n", r.total_gain_db, r.input_power_mw, r.output_power_mw);
}

int run_cmd(const ScenarioArgs& args, const std::string& mode, const std::string& out, unsigned threads) {
  const auto sc = args.load();
  qsync::RunOptions opt;
  opt.mode = qsync::parse_mode(mode);
  opt.threads = threads;
  const auto r = qsync::run_dip_scan(sc, opt);
  qsync::emit_outputs(r, out);
  fmt::print("{} [{}] seed {}: V = {:.4f} +- {:.4f} (lower bound {:.4f}), FWHM {:.3f} mm\n", r.scenario_name,
             qsync::to_string(r.mode), r.seed, r.visibility.visibility, r.visibility.sigma,
             r.visibility.lower_bound, r.fit.model.fwhm_mm());
  fmt::print("outputs written to {}\n", out);
  if (r.tracking_lost()) {
    std::cerr << "servo lost track of the interference envelope\n";
    return exit_tracking_lost;
  }
  if (!r.fit.converged) {
    std::cerr << "dip fit failed: " << r.fit.message << "\n";
    return exit_fit_failure;
  }
  return 0;
}

int sweep_cmd(const ScenarioArgs& args, const std::string& param, const std::string& values,
              const std::string& mode, const std::string& out) {
  const auto sc = args.load();
  qsync::RunOptions opt;
  opt.mode = qsync::parse_mode(mode);
  const auto vals = parse_list(values);
  const auto rows = qsync::run_sweep(sc, param, vals, opt);
  std::string csv = "value,visibility,sigma_visibility,lower_bound,fit_converged\n";
  for (const auto& row : rows)
    csv += fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{}\n", row.value, row.visibility, row.sigma,
                       row.lower_bound, row.converged ? 1 : 0);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + out + " for writing");
    f << csv;
  }
  for (const auto& row : rows)
    if (!row.converged) return exit_fit_failure;
  return 0;
}

int fit_cmd(const std::string& input) {
  const auto pts = qsync::read_dip_csv(std::filesystem::path(input));
  qsync::DipFit fit;
  try {
    fit = qsync::fit_dip(pts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "dip fit failed: " << e.what() << "\n";
    return exit_fit_failure;
  }
  const auto v = qsync::visibility_with_uncertainty(fit);
  const auto line = qsync::DelayLine::free_space();
  nlohmann::json j;
  j["visibility"] = v.visibility;
  j["sigma_visibility"] = v.sigma;
  j["visibility_lower_bound"] = v.lower_bound;
  j["baseline"] = fit.model.baseline;
  j["center_mm"] = fit.model.center_mm;
  j["width_sigma_mm"] = fit.model.width_sigma_mm;
  j["fwhm_mm"] = fit.model.fwhm_mm();
  j["fwhm_ps"] = line.to_ps(fit.model.fwhm_mm());
  j["chi2"] = fit.chi2;
  j["ndof"] = fit.ndof;
  j["fit_converged"] = fit.converged;
  std::cout << j.dump(2) << "\n";
  return fit.converged ? 0 : exit_fit_failure;
}

int budget_cmd(const ScenarioArgs& args) {
  const auto sc = args.load();
  for (int i = 0; i < 2; ++i) {
    const auto b = qsync::arm_budget(sc, i);
    print_budget(b.distribution, fmt::format("arm {} ({}), clock distribution:", i + 1, sc.arms[i].name));
    print_budget(b.node, fmt::format("arm {} ({}), node:", i + 1, sc.arms[i].name));
  }
  return 0;
}

int project_cmd(const ScenarioArgs& args, double clock_ghz, const std::string& eff) {
  const auto sc = args.load();
  auto up = qsync::current_parameters(sc);
  up.clock_rate_ghz = clock_ghz;
  if (!eff.empty()) {
    const auto e = parse_list(eff);
    if (e.size() != 4) throw std::invalid_argument("--efficiencies needs four values (APD1..APD4)");
    for (int i = 0; i < 4; ++i) up.detector_efficiency[i] = e[i];
  }
  const auto p = qsync::throughput_projection(sc, up);
  fmt::print("baseline: {:.4g} GHz, efficiencies {:.3g}/{:.3g}/{:.3g}/{:.3g}, {:.4g} fourfolds/h\n",
             p.baseline.clock_rate_ghz, p.baseline.detector_efficiency[0], p.baseline.detector_efficiency[1],
             p.baseline.detector_efficiency[2], p.baseline.detector_efficiency[3], p.baseline_rate_hz * 3600.0);
  fmt::print("upgraded: {:.4g} GHz, efficiencies {:.3g}/{:.3g}/{:.3g}/{:.3g}, {:.4g} fourfolds/h\n",
             p.upgraded.clock_rate_ghz, p.upgraded.detector_efficiency[0], p.upgraded.detector_efficiency[1],
             p.upgraded.detector_efficiency[2], p.upgraded.detector_efficiency[3], p.upgraded_rate_hz * 3600.0);
  fmt::print("rate ratio {:.3f}\n", p.ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsync: all-optical clock distribution and HOM synchronisation simulator"};
  app.require_subcommand(1);

  ScenarioArgs run_args, sweep_args, budget_args, project_args;
  std::string mode = "analytic", out = "out", sweep_mode = "analytic", sweep_out, param, values, input, preset_name,
              eff;
  unsigned threads = 1;
  double clock_ghz = 10.0;

  auto* run = app.add_subcommand("run", "simulate a HOM dip scan and write result files");
  run_args.add(run);
  run->add_option("--mode", mode, "analytic or micro_mc")->check(CLI::IsMember({"analytic", "micro_mc"}));
  run->add_option("--out", out, "output directory");
  run->add_option("--threads", threads, "worker threads (results do not depend on it)");

  auto* sweep = app.add_subcommand("sweep", "repeat the scan for several values of one scenario field");
  sweep_args.add(sweep);
  sweep->add_option("--param", param, "dotted path, e.g. relay.relative_jitter_ps or arms.*.spdc.mu")->required();
  sweep->add_option("--values", values, "comma separated values")->required();
  sweep->add_option("--mode", sweep_mode, "analytic or micro_mc")->check(CLI::IsMember({"analytic", "micro_mc"}));
  sweep->add_option("--out", sweep_out, "CSV file (default: stdout)");

  auto* fit = app.add_subcommand("fit", "fit a Gaussian dip to a dip CSV");
  fit->add_option("--input", input, "dip CSV")->required();

  auto* budget = app.add_subcommand("budget", "print the link budget of both arms");
  budget_args.add(budget);

  auto* project = app.add_subcommand("project", "fourfold rate ratio for a clock/detector upgrade");
  project_args.add(project);
  project->add_option("--clock-ghz", clock_ghz, "upgraded clock rate");
  project->add_option("--efficiencies", eff, "upgraded APD1..APD4 efficiencies, comma separated");

  auto* presets = app.add_subcommand("presets", "built-in scenarios");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "list preset names");
  auto* show = presets->add_subcommand("show", "print a preset as a scenario file");
  show->add_option("name", preset_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_cmd(run_args, mode, out, threads);
    if (*sweep) return sweep_cmd(sweep_args, param, values, sweep_mode, sweep_out);
    if (*fit) return fit_cmd(input);
    if (*budget) return budget_cmd(budget_args);
    if (*project) return project_cmd(project_args, clock_ghz, eff);
    if (*list) {
      for (const auto& p : qsync::presets) fmt::print("{:<18} {}\n", p.name, p.description);
      return 0;
    }
    if (*show) {
      std::cout << qsync::find_preset(preset_name).text;
      return 0;
    }
  } catch (const qsync::LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return exit_load_error;
  } catch (const qsync::TrackingLost& e) {
    std::cerr << "tracking lost: " << e.what() << "\n";
    return exit_tracking_lost;
  } catch (const qsync::FitFailure& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return exit_fit_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
