#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qsync/simulation.hpp"

using namespace qsync;

namespace {

FourfoldGeometry ideal(double mu, double eff) {
  FourfoldGeometry g;
  g.mu_1 = g.mu_2 = mu;
  for (auto& d : g.detectors) d = {eff, 0.0, 1.0, false};
  return g;
}

double total(const std::vector<RoutingOutcome>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0, [](double s, const RoutingOutcome& o) { return s + o.probability; });
}

double p_hv(const std::vector<RoutingOutcome>& v, int h, int vv) {
  double p = 0.0;
  for (const auto& o : v)
    if (o.photons_h == h && o.photons_v == vv) p += o.probability;
  return p;
}

}  // namespace

TEST(Routing, SinglePhotonsSplitEvenly) {
  const auto r = route_through_relay(1, 0, 0.3);
  EXPECT_NEAR(p_hv(r, 1, 0), 0.5, 1e-12);
  EXPECT_NEAR(p_hv(r, 0, 1), 0.5, 1e-12);
}

TEST(Routing, PairBunchesAtFullOverlap) {
  EXPECT_NEAR(p_hv(route_through_relay(1, 1, 1.0), 1, 1), 0.0, 1e-12);
  EXPECT_NEAR(p_hv(route_through_relay(1, 1, 0.0), 1, 1), 0.5, 1e-12);
  EXPECT_NEAR(p_hv(route_through_relay(1, 1, 0.5), 1, 1), 0.25, 1e-12);
}

TEST(Routing, NormalisedAndNumberConserving) {
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b)
      for (double o : {0.0, 0.37, 1.0}) {
        const auto r = route_through_relay(a, b, o, 45.0);
        EXPECT_NEAR(total(r), 1.0, 1e-12);
        for (const auto& x : r) EXPECT_EQ(x.photons_h + x.photons_v, a + b);
      }
  EXPECT_THROW(route_through_relay(-1, 0, 0.5), std::invalid_argument);
  EXPECT_THROW(route_through_relay(1, 1, 1.5), std::invalid_argument);
}

TEST(ClickDistribution, NoPairsNoDarkNoClicks) {
  const auto d = click_distribution(ideal(0.0, 1.0), 0.0);
  EXPECT_EQ(d.fourfold(), 0.0);
  EXPECT_NEAR(d.pattern[0], 1.0, 1e-15);
}

TEST(ClickDistribution, SumsToOne) {
  auto g = ideal(0.008, 0.3);
  g.detectors[0].gated = g.detectors[2].gated = true;
  g.detectors[1].dark_probability = 1e-3;
  for (double o : {0.0, 0.6, 1.0}) {
    const auto d = click_distribution(g, o);
    // the n <= 2 truncation drops the remaining Poisson weight
    const double kept = [&] {
      double s = 0.0;
      for (int n = 0; n <= 2; ++n) s += detail::poisson_weight(0.008, n);
      return s * s;
    }();
    EXPECT_NEAR(std::accumulate(d.pattern.begin(), d.pattern.end(), 0.0), kept, 1e-14);
  }
}

TEST(ClickDistribution, DarkOnlyAccidentals) {
  auto g = ideal(0.0, 0.5);
  const std::array<double, 4> dark{1e-3, 2e-3, 3e-3, 4e-3};
  for (int i = 0; i < 4; ++i) g.detectors[i].dark_probability = dark[i];
  EXPECT_NEAR(click_distribution(g, 0.3).fourfold(), dark[0] * dark[1] * dark[2] * dark[3], 1e-22);
}

TEST(ClickDistribution, GatedDetectorsSilentWithoutTrigger) {
  auto g = ideal(0.0, 0.5);
  for (auto& d : g.detectors) d.dark_probability = 0.01;
  g.detectors[0].gated = true;
  const auto d = click_distribution(g, 0.0);
  for (int k = 0; k < 16; ++k)
    if ((k & 1) && !(k & 2)) EXPECT_EQ(d.pattern[k], 0.0);
  EXPECT_NEAR(d.single(0), 0.01 * 0.01, 1e-15);
}

TEST(ClickDistribution, LowRateLeadingOrder) {
  auto g = ideal(1e-4, 1.0);
  g.signal_transmission_1 = 0.5;
  g.signal_transmission_2 = 0.4;
  g.idler_transmission_1 = 0.3;
  g.idler_transmission_2 = 0.2;
  for (int i = 0; i < 4; ++i) g.detectors[i].efficiency = 0.2 + 0.1 * i;
  const double eta = 0.5 * 0.2 * 0.4 * 0.5 * 0.3 * 0.2 * 0.3 * 0.4;
  // one pair per source: HV coincidence is (1 - O) / 2
  for (double o : {0.0, 0.5}) {
    const double lead = 1e-8 * eta * 0.5 * (1.0 - o);
    EXPECT_NEAR(click_distribution(g, o).fourfold() / lead, 1.0, 2e-3) << o;
  }
}

TEST(ClickDistribution, FullOverlapFloorIsMultipairOnly) {
  auto g = ideal(0.001, 1.0);
  const double floor = click_distribution(g, 1.0).fourfold();
  const double base = click_distribution(g, 0.0).fourfold();
  EXPECT_GT(floor, 0.0);
  EXPECT_NEAR(1.0 - floor / base, multipair_visibility_penalty(0.001), 1e-12);
  EXPECT_LT(floor / base, 0.01);
}

TEST(ClickDistribution, OutOfRangeFlagged) {
  EXPECT_FALSE(click_distribution(ideal(0.0012, 0.2), 0.0).mu_out_of_range);
  EXPECT_TRUE(click_distribution(ideal(0.05, 0.2), 0.0).mu_out_of_range);
  EXPECT_THROW(click_distribution(ideal(-0.1, 0.2), 0.0), std::invalid_argument);
}

TEST(LiveFractions, NoDeadTimeMeansFullyLive) {
  const auto live = estimate_live_fractions(ideal(0.01, 0.5), 0.0, 2.5e9, {0, 0, 0, 0}, {1, 1, 1, 1});
  for (double l : live) EXPECT_EQ(l, 1.0);
}

TEST(LiveFractions, NonParalyzableFormula) {
  auto g = ideal(0.0012, 0.2);
  g.idler_transmission_1 = g.idler_transmission_2 = 0.2;
  const double rate = 2.5e9;
  const std::array<double, 4> tau{7e-6, 7e-6, 7e-6, 7e-6};
  const auto live = estimate_live_fractions(g, 0.0, rate, tau, {1, 4, 1, 1});
  const auto d = click_distribution(g, 0.0);
  EXPECT_NEAR(live[1], 1.0 / (1.0 + d.single(1) * rate * 7e-6 / 4), 1e-12);
  EXPECT_NEAR(live[0], 1.0 / (1.0 + d.single(0) * rate * 7e-6), 1e-12);
  for (double l : live) {
    EXPECT_GT(l, 0.0);
    EXPECT_LE(l, 1.0);
  }
}

namespace {

MicroMcSetup mc_setup(double delay_ps, std::int64_t cycles) {
  MicroMcSetup s;
  s.geometry = ideal(0.05, 0.9);
  s.geometry.idler_transmission_1 = s.geometry.idler_transmission_2 = 0.8;
  for (auto& d : s.detectors) {
    d.spec = {0.9, 0.0, 0.0, DetectorMode::free_running};
    d.elements = 1;
  }
  s.cycles = cycles;
  s.overlap.delay_ps = delay_ps;
  return s;
}

MicroMcStreams mc_streams(std::uint64_t seed) {
  return {make_stream(seed, StreamPurpose::pairs), make_stream(seed, StreamPurpose::detectors),
          make_stream(seed, StreamPurpose::timing), make_stream(seed, StreamPurpose::pump_phase), true};
}

}  // namespace

TEST(SimulateCycles, AgreesWithAnalyticEngine) {
  const double sd = dip_sigma_ps(17.64, 17.64);
  const std::int64_t cycles = 2'000'000;
  for (double delay : {0.0, sd, 3.0 * sd}) {
    const auto s = mc_setup(delay, cycles);
    auto st = mc_streams(static_cast<std::uint64_t>(delay * 1000) + 1);
    const auto tally = simulate_cycles(s, st);
    OverlapParams p;
    p.delay_ps = delay;
    const auto d = click_distribution(s.geometry, temporal_overlap(p));
    const double expected = d.fourfold() * cycles;
    EXPECT_LE(std::abs(tally.fourfolds - expected), 3.0 * std::sqrt(expected)) << "delay " << delay;
    for (int i = 0; i < 4; ++i) {
      const double e = d.single(i) * cycles;
      EXPECT_LE(std::abs(tally.singles[i] - e), 4.0 * std::sqrt(e)) << "detector " << i;
    }
  }
}

TEST(SimulateCycles, NoPairsOnlyTriggerDarkCounts) {
  auto s = mc_setup(0.0, 1'000'000);
  s.geometry.mu_1 = s.geometry.mu_2 = 0.0;
  s.detectors[1].spec.dark_count_prob_per_ns = 1e-3;
  auto st = mc_streams(3);
  const auto t = simulate_cycles(s, st);
  EXPECT_EQ(t.fourfolds, 0);
  EXPECT_EQ(t.singles[0], 0);
  const double e = s.detectors[1].spec.dark_probability(0.4) * 1e6;
  EXPECT_LE(std::abs(t.singles[1] - e), 4.0 * std::sqrt(e));
}

TEST(SimulateCycles, PumpPhaseDoesNotChangeCounts) {
  const auto s = mc_setup(3.0, 300'000);
  auto a = mc_streams(9);
  auto b = mc_streams(9);
  b.randomize_pump_phase = false;
  const auto ta = simulate_cycles(s, a);
  const auto tb = simulate_cycles(s, b);
  EXPECT_EQ(ta.fourfolds, tb.fourfolds);
  EXPECT_EQ(ta.singles, tb.singles);
  EXPECT_EQ(ta.twofolds, tb.twofolds);
}
