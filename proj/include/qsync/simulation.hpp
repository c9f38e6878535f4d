#pragma once

// End-to-end HOM dip scans over a Scenario.
//
// analytic: per-cycle click distribution from the fourfold engine, averaged
// over the servo residual inside each point's integration window, then
// Poisson counts for every click pattern.
// micro_mc: event-level simulation of individual clock cycles at an
// inflated pair rate, kept as a cross-check of the analytic path.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qsync/detection.hpp"
#include "qsync/dip_fit.hpp"
#include "qsync/fourfold.hpp"
#include "qsync/hom.hpp"
#include "qsync/optics.hpp"
#include "qsync/relay_routing.hpp"
#include "qsync/rng.hpp"
#include "qsync/scenario.hpp"
#include "qsync/spdc.hpp"
#include "qsync/stabilizer.hpp"

namespace qsync {

enum class SimulationMode { analytic, micro_mc };

inline const char* to_string(SimulationMode m) { return m == SimulationMode::analytic ? "analytic" : "micro_mc"; }

inline SimulationMode parse_mode(const std::string& s) {
  if (s == "analytic") return SimulationMode::analytic;
  if (s == "micro_mc") return SimulationMode::micro_mc;
  throw std::invalid_argument("mode must be analytic or micro_mc");
}

struct RunOptions {
  SimulationMode mode = SimulationMode::analytic;
  unsigned threads = 1;
  bool randomize_pump_phase = true;
};

/// Clock distribution (splitter output -> spans -> compensator) and the
/// node chain (EDFA -> SHG) of one arm.
struct ArmBudget {
  LinkBudgetReport distribution;
  LinkBudgetReport node;
};

inline ArmBudget arm_budget(const Scenario& sc, int arm) {
  const auto& a = sc.arms.at(arm);
  const OpticalPulse after_split = split(sc.clock, sc.splitter);
  std::vector<NamedStage> dist;
  for (std::size_t i = 0; i < a.spans.size(); ++i)
    dist.push_back({"fiber span " + std::to_string(i + 1), a.spans[i]});
  if (a.dcm) dist.push_back({"dispersion compensator", *a.dcm});
  ArmBudget b;
  b.distribution = link_budget(after_split, dist);
  const std::vector<NamedStage> node{{"EDFA", a.edfa}, {"SHG", a.shg}};
  b.node = link_budget(b.distribution.output_pulse, node);
  return b;
}

/// Quantities derived once per scenario and shared by both modes.
struct NetworkModel {
  std::array<ArmBudget, 2> budgets;
  std::array<OpticalPulse, 2> pumps;
  std::array<double, 2> mu{};
  std::array<double, 2> idler_transmission{};  // polarization projection included
  bool same_pump_pulse = true;
  double relative_jitter_ps = 0.0;
  OverlapParams overlap;  // delay_ps left at zero
  double dip_sigma_ps = 0.0;
  double dip_sigma_mm = 0.0;
  double cycles_per_s = 0.0;
};

inline NetworkModel build_network(const Scenario& sc) {
  NetworkModel m;
  for (int i = 0; i < 2; ++i) {
    const auto& a = sc.arms[i];
    m.budgets[i] = arm_budget(sc, i);
    m.pumps[i] = m.budgets[i].node.output_pulse;
    m.mu[i] = a.spdc.mean_pairs_per_pulse * m.pumps[i].mean_power_mw / a.reference_pump_mw;
    // arm 2 carries a fixed 90 degree rotation so its idler leaves port b as V
    const auto pa = Polarization::linear(a.polarization_misalignment_deg + (i == 0 ? 0.0 : 90.0));
    m.idler_transmission[i] = a.idler_transmission * (i == 0 ? pa.probability_h() : pa.probability_v());
  }
  // One emitted clock pulse pumps both sources when the arm delays differ by
  // less than half a period; its jitter is then common mode.
  const double mismatch_ps =
      std::abs(sc.arms[0].length_km() - sc.arms[1].length_km()) * 1e6 * DelayLine::fiber().ps_per_mm();
  m.same_pump_pulse = mismatch_ps < 0.5 * sc.clock.period_ps();
  const double clock_rel = m.same_pump_pulse ? 0.0 : std::hypot(m.pumps[0].timing_jitter_rms_ps, m.pumps[1].timing_jitter_rms_ps);
  m.relative_jitter_ps = std::hypot(clock_rel, sc.relay.relative_jitter_ps);

  m.overlap.coherence_time_1_ps = bandwidth_to_coherence_time(sc.arms[0].spdc.idler_channel.bandwidth_ghz);
  m.overlap.coherence_time_2_ps = bandwidth_to_coherence_time(sc.arms[1].spdc.idler_channel.bandwidth_ghz);
  m.overlap.spectral_center_offset_ghz = sc.relay.spectral_offset_ghz;
  m.overlap.indistinguishability_cap = sc.relay.indistinguishability_cap;
  m.dip_sigma_ps = dip_sigma_ps(m.overlap.coherence_time_1_ps, m.overlap.coherence_time_2_ps);
  m.dip_sigma_mm = sc.relay.delay_line.to_mm(m.dip_sigma_ps);
  m.cycles_per_s = sc.clock.repetition_rate_ghz * 1e9;
  return m;
}

/// Per-cycle geometry for the fourfold engine; live fractions left at 1.
inline FourfoldGeometry make_geometry(const Scenario& sc, const NetworkModel& m, double mu_1, double mu_2) {
  FourfoldGeometry g;
  g.mu_1 = mu_1;
  g.mu_2 = mu_2;
  g.signal_transmission_1 = sc.arms[0].signal_transmission;
  g.signal_transmission_2 = sc.arms[1].signal_transmission;
  g.idler_transmission_1 = m.idler_transmission[0];
  g.idler_transmission_2 = m.idler_transmission[1];
  g.rotation_deg = sc.relay.rotation_deg;
  g.trigger = 1;
  for (int i = 0; i < 4; ++i) {
    const auto& d = sc.detectors[i];
    const double single = d.spec.dark_probability(sc.relay.window.width_ns);
    g.detectors[i] = {d.spec.efficiency, 1.0 - std::pow(1.0 - single, d.elements), 1.0,
                      d.spec.mode == DetectorMode::gated};
  }
  return g;
}

inline std::array<double, 4> dead_times_s(const Scenario& sc) {
  std::array<double, 4> t{};
  for (int i = 0; i < 4; ++i) t[i] = sc.detectors[i].spec.dead_time_us * 1e-6;
  return t;
}

inline std::array<int, 4> element_counts(const Scenario& sc) {
  std::array<int, 4> e{};
  for (int i = 0; i < 4; ++i) e[i] = sc.detectors[i].elements;
  return e;
}

/// Click distribution with dead-time live fractions at the given cycle rate.
inline ClickDistribution live_click_distribution(const Scenario& sc, FourfoldGeometry g, double overlap,
                                                 double cycles_per_s) {
  const auto live = estimate_live_fractions(g, overlap, cycles_per_s, dead_times_s(sc), element_counts(sc));
  for (int i = 0; i < 4; ++i) g.detectors[i].live_fraction = live[i];
  return click_distribution(g, overlap);
}

inline CountTally tally_from_patterns(const std::array<std::int64_t, 16>& n, double integration_h) {
  CountTally t;
  t.integration_time_h = integration_h;
  for (int k = 1; k < 16; ++k) {
    for (int i = 0; i < 4; ++i) {
      if (!(k & (1 << i))) continue;
      t.singles[i] += n[k];
      for (int j = i + 1; j < 4; ++j)
        if (k & (1 << j)) {
          t.twofolds[i][j] += n[k];
          t.twofolds[j][i] += n[k];
        }
    }
  }
  t.fourfolds = n[15];
  return t;
}

// ---------------------------------------------------------------------------
// Event-level simulation

struct MicroMcSetup {
  FourfoldGeometry geometry;  // mu, transmissions, efficiencies, rotation
  std::array<DetectorConfig, 4> detectors = default_detectors();
  double window_ns = 0.4;
  double cycle_spacing_ns = 0.4;  // wall-clock spacing of simulated cycles
  std::int64_t cycles = 0;
  OverlapParams overlap;  // delay_ps: static relay delay for this point
  bool same_pump_pulse = true;
  std::array<double, 2> pump_jitter_ps{0.0, 0.0};
  double injected_jitter_ps = 0.0;
  /// Additional delay (ps) as a function of time since the point started (s).
  std::function<double(double)> drift_delay_ps;
};

struct MicroMcStreams {
  RngStream pairs;
  RngStream detectors;
  RngStream timing;
  RngStream pump_phase;
  bool randomize_pump_phase = true;
};

namespace detail {

/// n >= 1 from Poisson(mean) by inversion.
inline int poisson_at_least_one(double mean, RngStream& rng) {
  const double p0 = std::exp(-mean);
  const double target = p0 + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (1.0 - p0);
  int k = 0;
  double term = p0;
  double cum = p0;
  while (cum < target && k < 64) {
    ++k;
    term *= mean / k;
    cum += term;
  }
  return std::max(k, 1);
}

inline std::int64_t next_event(std::int64_t after, double p, RngStream& rng) {
  if (!(p > 0.0)) return std::numeric_limits<std::int64_t>::max();
  if (p >= 1.0) return after + 1;
  return after + 1 + std::geometric_distribution<std::int64_t>(p)(rng);
}

}  // namespace detail

inline CountTally simulate_cycles(const MicroMcSetup& s, MicroMcStreams& st) {
  const auto& g = s.geometry;
  const double mu_total = g.mu_1 + g.mu_2;
  const double p_pairs = -std::expm1(-mu_total);

  std::array<DetectorSpec, 4> spec;
  for (int i = 0; i < 4; ++i) spec[i] = s.detectors[i].spec;
  MultiplexedDetector trigger;
  trigger.elements.assign(static_cast<std::size_t>(s.detectors[1].elements), spec[1]);
  std::vector<DeadTimeTracker> trigger_trackers(trigger.elements.size());
  std::array<DeadTimeTracker, 4> trackers{};

  const double trigger_dark = 1.0 - std::pow(1.0 - spec[1].dark_probability(s.window_ns), s.detectors[1].elements);
  const double dead_ns = spec[1].dead_time_us * 1000.0;

  std::array<std::vector<std::int64_t>, 4> trains;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  SpdcSpec spdc;  // channel metadata only; pair numbers are drawn here

  std::int64_t next_pair = detail::next_event(-1, p_pairs, st.pairs);
  std::int64_t next_dark = detail::next_event(-1, trigger_dark, st.detectors);

  while (true) {
    const std::int64_t slot = std::min(next_pair, next_dark);
    if (slot >= s.cycles) break;
    const double t_ns = static_cast<double>(slot) * s.cycle_spacing_ns;
    std::array<bool, 4> click{};

    if (slot == next_pair) {
      if (next_dark == slot) next_dark = detail::next_event(slot, trigger_dark, st.detectors);
      next_pair = detail::next_event(slot, p_pairs, st.pairs);

      const int n = detail::poisson_at_least_one(mu_total, st.pairs);
      const int n1 = std::binomial_distribution<int>(n, g.mu_1 / mu_total)(st.pairs);
      const std::array<int, 2> pairs{n1, n - n1};

      std::array<PumpPulseEvent, 2> pump{};
      const double shared = n01(st.timing);
      for (int a = 0; a < 2; ++a) {
        const double z = s.same_pump_pulse ? shared : n01(st.timing);
        pump[a].timing_offset_ps = s.pump_jitter_ps[s.same_pump_pulse ? 0 : a] * z;
        pump[a].phase_rad = st.randomize_pump_phase
                                ? std::uniform_real_distribution<double>(0.0, 2.0 * pi)(st.pump_phase)
                                : 0.0;
      }
      const std::array<PairEmission, 2> em{emit_pairs(spdc, pump[0], pairs[0]), emit_pairs(spdc, pump[1], pairs[1])};

      std::array<int, 2> heralds{}, idlers{};
      const std::array<double, 2> ts{g.signal_transmission_1, g.signal_transmission_2};
      const std::array<double, 2> ti{g.idler_transmission_1, g.idler_transmission_2};
      for (int a = 0; a < 2; ++a)
        for (int k = 0; k < em[a].pair_count; ++k) {
          if (u(st.pairs) < ts[a]) ++heralds[a];
          if (u(st.pairs) < ti[a]) ++idlers[a];
        }

      int to_h = 0, to_v = 0;
      if (idlers[0] + idlers[1] > 0) {
        double overlap = 0.0;
        if (idlers[0] > 0 && idlers[1] > 0) {
          OverlapParams p = s.overlap;
          p.delay_ps += em[1].idlers[0].emission_time_offset_ps - em[0].idlers[0].emission_time_offset_ps;
          if (s.injected_jitter_ps > 0.0) p.delay_ps += s.injected_jitter_ps * n01(st.timing);
          if (s.drift_delay_ps) p.delay_ps += s.drift_delay_ps(t_ns * 1e-9);
          overlap = temporal_overlap(p);
        }
        const auto outcomes = route_through_relay(idlers[0], idlers[1], overlap, g.rotation_deg);
        double r = u(st.pairs);
        const RoutingOutcome* pick = &outcomes.back();
        for (const auto& o : outcomes) {
          if (r < o.probability) {
            pick = &o;
            break;
          }
          r -= o.probability;
        }
        to_h = pick->photons_h;
        to_v = pick->photons_v;
      }

      click[1] = detect_multiplexed(t_ns, to_h, trigger, trigger_trackers, st.detectors, s.window_ns);
      click[0] = detect(t_ns, heralds[0], spec[0], trackers[0], st.detectors, s.window_ns, click[1]);
      click[2] = detect(t_ns, to_v, spec[2], trackers[2], st.detectors, s.window_ns, click[1]);
      click[3] = detect(t_ns, heralds[1], spec[3], trackers[3], st.detectors, s.window_ns, click[1]);
    } else {
      // dark count of the free-running trigger in a cycle without pairs
      next_dark = detail::next_event(slot, trigger_dark, st.detectors);
      const auto e = std::uniform_int_distribution<std::size_t>(0, trigger_trackers.size() - 1)(st.detectors);
      auto& tr = trigger_trackers[e];
      tr.last_event_ns = t_ns;
      if (t_ns - tr.last_click_ns >= dead_ns) {
        tr.last_click_ns = t_ns;
        ++tr.clicks;
        click[1] = true;
      }
      for (int i : {0, 2, 3}) click[i] = detect(t_ns, 0, spec[i], trackers[i], st.detectors, s.window_ns, click[1]);
    }
    for (int i = 0; i < 4; ++i)
      if (click[i]) trains[i].push_back(slot);
  }

  CoincidenceWindow w{s.window_ns, std::max(s.window_ns, s.cycle_spacing_ns)};
  return fourfold_coincidences({trains[0], trains[1], trains[2], trains[3]}, w);
}

// ---------------------------------------------------------------------------
// Dip scans

struct PointResult {
  double position_mm = 0.0;
  CountTally tally;
  double expected_fourfolds = 0.0;  // Poisson mean of the fourfold count
  double mean_overlap = 0.0;
};

struct RunResult {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::string config_hash;
  SimulationMode mode = SimulationMode::analytic;
  std::vector<PointResult> points;
  DipFit fit;
  VisibilityEstimate visibility;
  double dip_sigma_ps = 0.0;
  double relative_jitter_ps = 0.0;
  double visibility_ceiling = 1.0;
  double ps_per_mm = 0.0;
  std::array<ArmBudget, 2> budgets;
  std::optional<ServoTrace> servo;

  bool tracking_lost() const { return servo && servo->tracking_lost; }

  std::vector<DipPoint> dip_points() const {
    std::vector<DipPoint> out;
    for (const auto& p : points) {
      const auto n = static_cast<double>(p.tally.fourfolds);
      out.push_back({p.position_mm, n, std::max(std::sqrt(n), 1.0)});
    }
    return out;
  }
};

/// Highest visibility the model can produce: multipair penalty x cap x
/// spectral factor x jitter factor.
inline double visibility_ceiling(const Scenario& sc, const NetworkModel& m) {
  HeraldedHomEfficiencies eff;
  eff.herald_1 = sc.arms[0].signal_transmission * sc.detectors[0].spec.efficiency;
  eff.herald_2 = sc.arms[1].signal_transmission * sc.detectors[3].spec.efficiency;
  eff.idler_1 = m.idler_transmission[0];
  eff.idler_2 = m.idler_transmission[1];
  eff.relay_h = sc.detectors[1].spec.efficiency;
  eff.relay_v = sc.detectors[2].spec.efficiency;
  const double mu = std::max(m.mu[0], m.mu[1]);
  const double sd = m.dip_sigma_ps;
  return multipair_visibility_penalty(mu, eff) * m.overlap.indistinguishability_cap * spectral_factor(m.overlap) *
         sd / std::hypot(sd, m.relative_jitter_ps);
}

inline std::optional<ServoTrace> servo_trace_for(const Scenario& sc) {
  if (!sc.servo.enabled && sc.drift.mode == DriftMode::none) return std::nullopt;
  const double duration = sc.scan.integration_s * static_cast<double>(sc.scan.positions_mm.size());
  auto drift_rng = make_stream(sc.seed, StreamPurpose::drift);
  auto noise_rng = make_stream(sc.seed, StreamPurpose::servo_noise);
  return simulate_servo(sc.drift, sc.servo.config, sc.clock, duration, sc.servo.enabled, drift_rng, noise_rng);
}

namespace detail {

template <class F>
void for_each_point(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline PointResult analytic_point(const Scenario& sc, const NetworkModel& m, const std::optional<ServoTrace>& trace,
                                  std::size_t index) {
  const double x = sc.scan.positions_mm[index];
  const double t_int = sc.scan.integration_s;
  const double t0 = t_int * static_cast<double>(index);
  const int samples = trace ? std::max(1, static_cast<int>(std::ceil(t_int / trace->interval_s - 1e-9))) : 1;
  const FourfoldGeometry g = make_geometry(sc, m, m.mu[0], m.mu[1]);

  std::array<double, 16> pattern{};
  double mean_overlap = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (k + 0.5) * t_int / samples;
    const double residual = trace ? trace->residual_at(t) : 0.0;
    OverlapParams p = m.overlap;
    p.delay_ps = sc.relay.delay_line.to_ps(x - sc.scan.dip_center_mm - residual);
    const double o = jittered_overlap(p, m.relative_jitter_ps);
    mean_overlap += o / samples;
    const auto dist = live_click_distribution(sc, g, o, m.cycles_per_s);
    for (int j = 0; j < 16; ++j) pattern[j] += dist.pattern[j] / samples;
  }

  const double cycles = m.cycles_per_s * t_int;
  auto rng = make_stream(sc.seed, StreamPurpose::counts, index);
  std::array<std::int64_t, 16> n{};
  for (int j = 1; j < 16; ++j) {
    const double mean = pattern[j] * cycles;
    if (mean > 0.0) n[j] = std::poisson_distribution<std::int64_t>(mean)(rng);
  }
  PointResult r;
  r.position_mm = x;
  r.tally = tally_from_patterns(n, t_int / 3600.0);
  r.expected_fourfolds = pattern[15] * cycles;
  r.mean_overlap = mean_overlap;
  return r;
}

inline PointResult micro_mc_point(const Scenario& sc, const NetworkModel& m, const std::optional<ServoTrace>& trace,
                                  std::size_t index, bool randomize_pump_phase) {
  const double x = sc.scan.positions_mm[index];
  const double t_int = sc.scan.integration_s;
  const double t0 = t_int * static_cast<double>(index);
  const double mu = sc.micro_mc.mu;
  const auto cycles = sc.micro_mc.cycles_per_point;

  MicroMcSetup s;
  s.geometry = make_geometry(sc, m, mu, mu);
  s.detectors = sc.detectors;
  s.window_ns = sc.relay.window.width_ns;
  s.cycle_spacing_ns = t_int * 1e9 / static_cast<double>(cycles);
  s.cycles = cycles;
  s.overlap = m.overlap;
  s.overlap.delay_ps = sc.relay.delay_line.to_ps(x - sc.scan.dip_center_mm);
  s.same_pump_pulse = m.same_pump_pulse;
  s.pump_jitter_ps = {m.pumps[0].timing_jitter_rms_ps, m.pumps[1].timing_jitter_rms_ps};
  s.injected_jitter_ps = sc.relay.relative_jitter_ps;
  if (trace) {
    const ServoTrace* tr = &*trace;
    const DelayLine line = sc.relay.delay_line;
    s.drift_delay_ps = [tr, line, t0](double t) { return -line.to_ps(tr->residual_at(t0 + t)); };
  }

  MicroMcStreams st{make_stream(sc.seed, StreamPurpose::pairs, index),
                    make_stream(sc.seed, StreamPurpose::detectors, index),
                    make_stream(sc.seed, StreamPurpose::timing, index),
                    make_stream(sc.seed, StreamPurpose::pump_phase, index), randomize_pump_phase};

  PointResult r;
  r.position_mm = x;
  r.tally = simulate_cycles(s, st);
  r.tally.integration_time_h = t_int / 3600.0;

  const double rate = static_cast<double>(cycles) / t_int;
  const int samples = trace ? std::max(1, static_cast<int>(std::ceil(t_int / trace->interval_s - 1e-9))) : 1;
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (k + 0.5) * t_int / samples;
    OverlapParams p = m.overlap;
    p.delay_ps = sc.relay.delay_line.to_ps(x - sc.scan.dip_center_mm - (trace ? trace->residual_at(t) : 0.0));
    const double o = jittered_overlap(p, m.relative_jitter_ps);
    r.mean_overlap += o / samples;
    r.expected_fourfolds += live_click_distribution(sc, s.geometry, o, rate).fourfold() * cycles / samples;
  }
  return r;
}

inline RunResult run_dip_scan(const Scenario& sc, const RunOptions& options = {}) {
  const NetworkModel m = build_network(sc);
  RunResult res;
  res.scenario_name = sc.name;
  res.seed = sc.seed;
  res.config_hash = sc.config_hash;
  res.mode = options.mode;
  res.budgets = m.budgets;
  res.dip_sigma_ps = m.dip_sigma_ps;
  res.relative_jitter_ps = m.relative_jitter_ps;
  res.ps_per_mm = sc.relay.delay_line.ps_per_mm();
  res.visibility_ceiling = visibility_ceiling(sc, m);
  res.servo = servo_trace_for(sc);

  const std::size_t n = sc.scan.positions_mm.size();
  res.points.resize(n);
  detail::for_each_point(n, options.threads, [&](std::size_t i) {
    res.points[i] = options.mode == SimulationMode::analytic
                        ? analytic_point(sc, m, res.servo, i)
                        : micro_mc_point(sc, m, res.servo, i, options.randomize_pump_phase);
  });

  const auto pts = res.dip_points();
  try {
    res.fit = fit_dip(pts);
  } catch (const std::invalid_argument& e) {
    res.fit.converged = false;
    res.fit.message = e.what();
  }
  res.visibility = visibility_with_uncertainty(res.fit);
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps and projections

struct SweepRow {
  double value = 0.0;
  double visibility = 0.0;
  double sigma = 0.0;
  double lower_bound = 0.0;
  bool converged = false;
};

inline std::vector<SweepRow> run_sweep(const Scenario& sc, const std::string& path, std::span<const double> values,
                                       const RunOptions& options = {}) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    const Scenario s = with_override(sc, path, v);
    const auto r = run_dip_scan(s, options);
    rows.push_back({v, r.visibility.visibility, r.visibility.sigma, r.visibility.lower_bound, r.fit.converged});
  }
  return rows;
}

struct ThroughputUpgrade {
  double clock_rate_ghz = 2.5;
  std::array<double, 4> detector_efficiency{};
};

struct ThroughputProjection {
  ThroughputUpgrade baseline;
  ThroughputUpgrade upgraded;
  double baseline_rate_hz = 0.0;
  double upgraded_rate_hz = 0.0;
  double ratio = 1.0;
};

inline ThroughputUpgrade current_parameters(const Scenario& sc) {
  ThroughputUpgrade u;
  u.clock_rate_ghz = sc.clock.repetition_rate_ghz;
  for (int i = 0; i < 4; ++i) u.detector_efficiency[i] = sc.detectors[i].spec.efficiency;
  return u;
}

/// Distinguishable-baseline fourfold rate at fixed pair number per pulse,
/// dead time ignored: pure pumping-rate and efficiency scaling.
inline ThroughputProjection throughput_projection(const Scenario& sc, const ThroughputUpgrade& upgraded) {
  if (!(upgraded.clock_rate_ghz > 0.0)) throw std::invalid_argument("throughput_projection: clock rate must be positive");
  for (double e : upgraded.detector_efficiency)
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("throughput_projection: efficiency must be in [0,1]");
  const NetworkModel m = build_network(sc);
  auto rate = [&](const ThroughputUpgrade& u) {
    FourfoldGeometry g = make_geometry(sc, m, m.mu[0], m.mu[1]);
    for (int i = 0; i < 4; ++i) g.detectors[i].efficiency = u.detector_efficiency[i];
    return click_distribution(g, 0.0).fourfold() * u.clock_rate_ghz * 1e9;
  };
  ThroughputProjection p;
  p.baseline = current_parameters(sc);
  p.upgraded = upgraded;
  p.baseline_rate_hz = rate(p.baseline);
  p.upgraded_rate_hz = rate(upgraded);
  p.ratio = p.baseline_rate_hz > 0.0 ? p.upgraded_rate_hz / p.baseline_rate_hz : 0.0;
  return p;
}

}  // namespace qsync
