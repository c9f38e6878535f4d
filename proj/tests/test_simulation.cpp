#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsync/output.hpp"
#include "qsync/presets.hpp"
#include "qsync/simulation.hpp"

using namespace qsync;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Bright, lossless, dead-time-free variant where the event-level engine
// collects enough fourfolds in a short run.
Scenario bright_scenario() {
  auto sc = load_preset("short_symmetric");
  sc = with_override(sc, "arms.*.spdc.mu", 0.05);
  sc = with_override(sc, "micro_mc.mu", 0.05);
  sc = with_override(sc, "arms.*.signal_transmission", 1.0);
  sc = with_override(sc, "arms.*.idler_transmission", 1.0);
  sc = with_override(sc, "detectors.*.efficiency", 0.9);
  sc = with_override(sc, "detectors.*.dead_time_us", 0.0);
  sc = with_override(sc, "scan.integration_s", 4e-4);
  sc = with_override(sc, "micro_mc.cycles_per_point", 1e6);
  return sc;
}

}  // namespace

TEST(Network, PresetBudgets) {
  const auto sc = load_preset("long_100km");
  const auto m = build_network(sc);
  for (int i = 0; i < 2; ++i) {
    const double uw = m.budgets[i].distribution.output_power_mw * 1e3;
    EXPECT_GT(uw, 24.0);
    EXPECT_LT(uw, 33.0);
    EXPECT_NEAR(m.pumps[i].mean_power_mw, 15.0, 1e-9);
    EXPECT_NEAR(m.mu[i], 0.0012, 1e-12);
  }
  // the 1 km mismatch puts the two pumps on different clock pulses
  EXPECT_FALSE(m.same_pump_pulse);
  EXPECT_NEAR(m.dip_sigma_ps, 10.59, 0.01);
}

TEST(Network, UnequalArmsLoseCommonModeJitter) {
  const auto sc = load_preset("asymmetric_400m");
  const auto m = build_network(sc);
  EXPECT_FALSE(m.same_pump_pulse);
  EXPECT_NEAR(m.relative_jitter_ps, std::hypot(0.1, 0.1), 1e-12);
  EXPECT_EQ(build_network(load_preset("short_symmetric")).relative_jitter_ps, 0.0);
}

TEST(RunDipScan, DeterministicBytes) {
  const auto sc = load_preset("short_symmetric");
  const auto dir = std::filesystem::temp_directory_path() / "qsync_test_det";
  std::filesystem::remove_all(dir);
  emit_outputs(run_dip_scan(sc), dir / "a");
  emit_outputs(run_dip_scan(sc), dir / "b");
  for (const char* f : {"dip.csv", "counts.csv", "summary.json", "budget.json"}) {
    const auto a = slurp(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(RunDipScan, SeedChangesCounts) {
  auto sc = load_preset("short_symmetric");
  const auto a = dip_csv(run_dip_scan(sc));
  sc.seed += 1;
  EXPECT_NE(a, dip_csv(run_dip_scan(sc)));
}

TEST(RunDipScan, ThreadsDoNotChangeResults) {
  const auto sc = load_preset("long_100km");
  RunOptions one, four;
  four.threads = 4;
  EXPECT_EQ(dip_csv(run_dip_scan(sc, one)), dip_csv(run_dip_scan(sc, four)));
}

TEST(RunDipScan, CsvHeaderAndErrors) {
  const auto r = run_dip_scan(load_preset("short_symmetric"));
  const auto csv = dip_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "position_mm,fourfolds,err_fourfolds,expected_rate");
  std::istringstream in(csv);
  const auto pts = read_dip_csv(in);
  ASSERT_EQ(pts.size(), r.points.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_DOUBLE_EQ(pts[i].counts, static_cast<double>(r.points[i].tally.fourfolds));
    EXPECT_NEAR(pts[i].count_error, std::max(1.0, std::sqrt(pts[i].counts)), 1e-8);
  }
}

TEST(RunDipScan, FitBelowCeiling) {
  for (const auto& p : presets) {
    const auto r = run_dip_scan(load_preset(p.name));
    ASSERT_TRUE(r.fit.converged) << p.name;
    EXPECT_LE(r.visibility.visibility, r.visibility_ceiling + 3.0 * r.visibility.sigma) << p.name;
    EXPECT_LE(r.visibility_ceiling, 1.0);
  }
}

TEST(RunDipScan, ExpectedMatchesCountsOnAverage) {
  const auto r = run_dip_scan(load_preset("short_symmetric"));
  double chi2 = 0.0;
  for (const auto& p : r.points) {
    const double d = static_cast<double>(p.tally.fourfolds) - p.expected_fourfolds;
    chi2 += d * d / p.expected_fourfolds;
  }
  EXPECT_LT(chi2, 21.0 + 5.0 * std::sqrt(42.0));
}

TEST(Sweep, JitterReducesVisibility) {
  auto sc = load_preset("short_symmetric");
  sc = with_override(sc, "scan.integration_s", 36000);
  const std::vector<double> js{0.0, 3.0, 8.49};
  const auto rows = run_sweep(sc, "relay.relative_jitter_ps", js);
  ASSERT_EQ(rows.size(), 3u);
  const double sd = 10.59;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double expected = rows[0].visibility * sd / std::hypot(sd, js[i]);
    const double err = std::hypot(rows[i].sigma, rows[0].sigma);
    EXPECT_LE(std::abs(rows[i].visibility - expected), 3.0 * err) << js[i];
  }
  EXPECT_LT(rows[2].visibility, rows[0].visibility);
}

TEST(Sweep, MultipairReducesCeiling) {
  const auto sc = load_preset("short_symmetric");
  double last = 2.0;
  for (double mu : {0.0012, 0.01, 0.05}) {
    const auto s = with_override(sc, "arms.*.spdc.mu", mu);
    const double c = visibility_ceiling(s, build_network(s));
    EXPECT_LT(c, last);
    last = c;
  }
  EXPECT_TRUE(run_sweep(sc, "arms.*.spdc.mu", std::vector<double>{}).empty());
}

TEST(Projection, ClockRateScalesLinearly) {
  const auto sc = load_preset("short_symmetric");
  auto up = current_parameters(sc);
  EXPECT_NEAR(throughput_projection(sc, up).ratio, 1.0, 1e-12);
  up.clock_rate_ghz = 10.0;
  EXPECT_NEAR(throughput_projection(sc, up).ratio, 4.0, 1e-9);
  up.clock_rate_ghz = 0.0;
  EXPECT_THROW(throughput_projection(sc, up), std::invalid_argument);
}

TEST(Projection, EfficiencyUpgradeRaisesRate) {
  const auto sc = load_preset("short_symmetric");
  auto up = current_parameters(sc);
  up.detector_efficiency = {0.8, 0.8, 0.8, 0.8};
  EXPECT_GT(throughput_projection(sc, up).ratio, 10.0);
}

TEST(MicroMc, AgreesWithAnalyticVisibility) {
  const auto sc = bright_scenario();
  RunOptions mc;
  mc.mode = SimulationMode::micro_mc;
  const auto a = run_dip_scan(sc);
  const auto b = run_dip_scan(sc, mc);
  ASSERT_TRUE(a.fit.converged);
  ASSERT_TRUE(b.fit.converged);
  EXPECT_LE(std::abs(a.visibility.visibility - b.visibility.visibility),
            3.0 * std::hypot(a.visibility.sigma, b.visibility.sigma));
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const double e = b.points[i].expected_fourfolds;
    EXPECT_LE(std::abs(b.points[i].tally.fourfolds - e), 4.0 * std::sqrt(e) + 1.0) << i;
  }
}

TEST(MicroMc, PumpPhaseGivesBitwiseIdenticalDip) {
  auto sc = bright_scenario();
  sc = with_override(sc, "micro_mc.cycles_per_point", 2e5);
  RunOptions random_phase, fixed_phase;
  random_phase.mode = fixed_phase.mode = SimulationMode::micro_mc;
  fixed_phase.randomize_pump_phase = false;
  EXPECT_EQ(dip_csv(run_dip_scan(sc, random_phase)), dip_csv(run_dip_scan(sc, fixed_phase)));
}

TEST(MicroMc, Deterministic) {
  auto sc = bright_scenario();
  sc = with_override(sc, "micro_mc.cycles_per_point", 2e5);
  RunOptions mc;
  mc.mode = SimulationMode::micro_mc;
  mc.threads = 3;
  const auto a = run_dip_scan(sc, mc);
  mc.threads = 1;
  EXPECT_EQ(dip_csv(a), dip_csv(run_dip_scan(sc, mc)));
}

TEST(Servo, LongPresetTrace) {
  const auto r = run_dip_scan(load_preset("long_100km"));
  ASSERT_TRUE(r.servo.has_value());
  EXPECT_FALSE(r.tracking_lost());
  EXPECT_LE(r.servo->residual_rms(21 * 3600.0), 0.3);
  const auto csv = servo_csv(*r.servo);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "time_s,drift_mm,measured_offset_mm,correction_mm,residual_mm,tracking_ok");
}

TEST(Modes, ParseAndPrint) {
  EXPECT_EQ(parse_mode("micro_mc"), SimulationMode::micro_mc);
  EXPECT_STREQ(to_string(SimulationMode::analytic), "analytic");
  EXPECT_THROW(parse_mode("exact"), std::invalid_argument);
}
