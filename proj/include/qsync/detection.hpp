#pragma once

// Single-photon detectors: efficiency, dark counts, non-paralyzable dead
// time, gating, OR-multiplexing, and slot-grid coincidence tallies.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <ranges>
#include <span>
#include <stdexcept>
#include <vector>

#include "qsync/rng.hpp"

namespace qsync {

enum class DetectorMode { free_running, gated };

struct DetectorSpec {
  double efficiency = 0.2;
  double dark_count_prob_per_ns = 1e-5;
  double dead_time_us = 7.0;
  DetectorMode mode = DetectorMode::gated;
  double saturation_rate_khz = 60.0;  // datasheet figure; not enforced

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("efficiency must be in [0,1]");
    if (!(dark_count_prob_per_ns >= 0.0 && dark_count_prob_per_ns <= 1.0))
      throw std::invalid_argument("dark count probability must be in [0,1]");
    if (!(dead_time_us >= 0.0)) throw std::invalid_argument("dead time must be non-negative");
  }

  /// Probability of a dark click inside a window of the given width.
  double dark_probability(double window_ns) const {
    return -std::expm1(window_ns * std::log1p(-std::min(dark_count_prob_per_ns, 1.0 - 1e-15)));
  }
};

/// Several detectors behind a 1xN splitter with their outputs OR-ed.
struct MultiplexedDetector {
  std::vector<DetectorSpec> elements;

  void validate() const {
    if (elements.empty()) throw std::invalid_argument("multiplexed detector needs at least one element");
    for (const auto& e : elements) e.validate();
  }
};

/// Per-detector dead-time state; single owner.
struct DeadTimeTracker {
  double last_click_ns = -std::numeric_limits<double>::infinity();
  double last_event_ns = -std::numeric_limits<double>::infinity();
  std::int64_t clicks = 0;
};

/// One detection window. Clicks iff (a photon is detected or a dark count
/// fires) while the detector is live. `gate_open` is ignored for free-running
/// detectors. Photons arriving during dead time are lost without extending it.
inline bool detect(double time_ns, int photons, const DetectorSpec& spec, DeadTimeTracker& state,
                   RngStream& rng, double window_ns, bool gate_open = true) {
  if (time_ns < state.last_event_ns)
    throw std::invalid_argument("detect: event times must be non-decreasing");
  if (photons < 0) throw std::invalid_argument("detect: negative photon number");
  state.last_event_ns = time_ns;
  if (spec.mode == DetectorMode::gated && !gate_open) return false;
  if (time_ns - state.last_click_ns < spec.dead_time_us * 1000.0) return false;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool click = false;
  for (int i = 0; i < photons && !click; ++i) click = u(rng) < spec.efficiency;
  if (!click) click = u(rng) < spec.dark_probability(window_ns);
  if (click) {
    state.last_click_ns = time_ns;
    ++state.clicks;
  }
  return click;
}

template <std::ranges::input_range Clicks>
bool multiplex_or(const Clicks& element_clicks) {
  return std::ranges::any_of(element_clicks, [](const auto& c) { return static_cast<bool>(c); });
}

inline bool multiplex_or(std::initializer_list<bool> element_clicks) {
  return std::ranges::any_of(element_clicks, [](bool c) { return c; });
}

/// Routes each photon to a uniformly chosen element, evaluates every element
/// with its own dead-time tracker, and ORs the results.
inline bool detect_multiplexed(double time_ns, int photons, const MultiplexedDetector& det,
                               std::vector<DeadTimeTracker>& trackers, RngStream& rng, double window_ns,
                               bool gate_open = true) {
  const std::size_t n = det.elements.size();
  if (trackers.size() != n) throw std::invalid_argument("detect_multiplexed: one tracker per element");
  std::vector<int> per_element(n, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int i = 0; i < photons; ++i) ++per_element[pick(rng)];
  std::vector<char> clicks(n, 0);
  for (std::size_t e = 0; e < n; ++e)
    clicks[e] = detect(time_ns, per_element[e], det.elements[e], trackers[e], rng, window_ns, gate_open);
  return multiplex_or(clicks);
}

// ---------------------------------------------------------------------------
// Coincidences

struct CoincidenceWindow {
  double width_ns = 0.4;
  double slot_period_ns = 0.4;

  void validate() const {
    if (!(width_ns > 0.0)) throw std::invalid_argument("coincidence window must be positive");
    if (width_ns > slot_period_ns + 1e-12)
      throw std::invalid_argument("coincidence window must not exceed one clock slot");
  }
};

/// Click counts for one delay point. Detector order: APD1 (herald of source
/// 1), APD2 (relay, H output), APD3 (relay, V output), APD4 (herald of
/// source 2).
struct CountTally {
  std::array<std::int64_t, 4> singles{};
  std::array<std::array<std::int64_t, 4>, 4> twofolds{};
  std::int64_t fourfolds = 0;
  double integration_time_h = 0.0;
};

/// Tallies slot coincidences. Each train holds the sorted slot indices in
/// which that detector clicked.
inline CountTally fourfold_coincidences(const std::array<std::span<const std::int64_t>, 4>& trains,
                                        const CoincidenceWindow& window) {
  window.validate();
  CountTally tally;
  for (int i = 0; i < 4; ++i) tally.singles[i] = static_cast<std::int64_t>(trains[i].size());

  // k-way merge over slot indices
  std::array<std::size_t, 4> pos{};
  while (true) {
    std::int64_t slot = std::numeric_limits<std::int64_t>::max();
    for (int i = 0; i < 4; ++i)
      if (pos[i] < trains[i].size()) slot = std::min(slot, trains[i][pos[i]]);
    if (slot == std::numeric_limits<std::int64_t>::max()) break;
    std::array<bool, 4> hit{};
    for (int i = 0; i < 4; ++i) {
      while (pos[i] < trains[i].size() && trains[i][pos[i]] == slot) {
        hit[i] = true;
        ++pos[i];
      }
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (hit[i] && hit[j]) {
          ++tally.twofolds[i][j];
          ++tally.twofolds[j][i];
        }
    if (hit[0] && hit[1] && hit[2] && hit[3]) ++tally.fourfolds;
  }
  return tally;
}

struct SampledCount {
  std::int64_t count = 0;
  double error = 0.0;  // sqrt(count)
};

inline SampledCount sample_counts(double expected_rate_per_cycle, double cycles, RngStream& rng) {
  if (!(expected_rate_per_cycle >= 0.0)) throw std::invalid_argument("sample_counts: negative rate");
  const double mean = expected_rate_per_cycle * cycles;
  SampledCount s;
  if (mean > 0.0) s.count = std::poisson_distribution<std::int64_t>(mean)(rng);
  s.error = std::sqrt(static_cast<double>(s.count));
  return s;
}

}  // namespace qsync
