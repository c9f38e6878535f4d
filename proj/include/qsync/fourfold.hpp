#pragma once

// Per-clock-cycle click statistics of the four-detector relay experiment.
//
// Enumerates n1, n2 in {0, 1, 2} pairs per source with Poisson weights,
// binomial photon loss on every path, exact bosonic routing at the relay
// (relay_routing.hpp) and threshold detectors with dark counts. Events with
// three or more pairs from one source are dropped; the neglected weight is
// O(mu^3) per source and O(mu) relative to the leading two-pair term.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qsync/detection.hpp"
#include "qsync/relay_routing.hpp"

namespace qsync {

/// Detector as seen by the per-cycle model.
struct DetectorChannel {
  double efficiency = 0.2;
  double dark_probability = 0.0;  // per coincidence window
  double live_fraction = 1.0;
  bool gated = false;
};

/// Detector order matches CountTally: APD1 herald 1, APD2 relay H (trigger),
/// APD3 relay V, APD4 herald 2.
struct FourfoldGeometry {
  double mu_1 = 0.0012;
  double mu_2 = 0.0012;
  double signal_transmission_1 = 1.0;
  double signal_transmission_2 = 1.0;
  /// Idler transmission to the relay, including the first f-PBS projection.
  double idler_transmission_1 = 1.0;
  double idler_transmission_2 = 1.0;
  std::array<DetectorChannel, 4> detectors{};
  int trigger = 1;
  double rotation_deg = 45.0;

  static constexpr double validated_mu_max = 0.01;
};

/// Joint distribution of the four click indicators in one cycle, gating
/// applied. Pattern index bit i is detector i.
struct ClickDistribution {
  std::array<double, 16> pattern{};
  bool mu_out_of_range = false;

  double fourfold() const { return pattern[15]; }
  double single(int i) const {
    double p = 0.0;
    for (int k = 0; k < 16; ++k)
      if (k & (1 << i)) p += pattern[k];
    return p;
  }
  double twofold(int i, int j) const {
    double p = 0.0;
    for (int k = 0; k < 16; ++k)
      if ((k & (1 << i)) && (k & (1 << j))) p += pattern[k];
    return p;
  }
};

namespace detail {

inline double poisson_weight(double mu, int n) {
  double w = std::exp(-mu);
  for (int i = 1; i <= n; ++i) w *= mu / i;
  return w;
}

inline double binomial_weight(int n, int k, double p) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

/// P(click | k photons impinge).
inline double click_probability(const DetectorChannel& d, double per_photon_efficiency, int k) {
  const double none = (1.0 - d.dark_probability) * std::pow(1.0 - per_photon_efficiency, k);
  return d.live_fraction * (1.0 - none);
}

}  // namespace detail

inline constexpr int max_pairs_per_source = 2;

inline ClickDistribution click_distribution(const FourfoldGeometry& g, double overlap) {
  if (!(g.mu_1 >= 0.0 && g.mu_2 >= 0.0)) throw std::invalid_argument("mean pair number must be >= 0");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw std::invalid_argument("overlap must be in [0,1]");

  ClickDistribution out;
  out.mu_out_of_range = g.mu_1 > FourfoldGeometry::validated_mu_max || g.mu_2 > FourfoldGeometry::validated_mu_max;

  constexpr int N = max_pairs_per_source;
  std::map<std::pair<int, int>, std::vector<RoutingOutcome>> routes;
  for (int m1 = 0; m1 <= N; ++m1)
    for (int m2 = 0; m2 <= N; ++m2) routes[{m1, m2}] = route_through_relay(m1, m2, overlap, g.rotation_deg);

  const auto& d = g.detectors;
  std::array<double, 16> raw{};
  for (int n1 = 0; n1 <= N; ++n1) {
    for (int n2 = 0; n2 <= N; ++n2) {
      const double w = detail::poisson_weight(g.mu_1, n1) * detail::poisson_weight(g.mu_2, n2);
      const double h1 = detail::click_probability(d[0], d[0].efficiency * g.signal_transmission_1, n1);
      const double h4 = detail::click_probability(d[3], d[3].efficiency * g.signal_transmission_2, n2);
      for (int m1 = 0; m1 <= n1; ++m1) {
        const double w1 = detail::binomial_weight(n1, m1, g.idler_transmission_1);
        for (int m2 = 0; m2 <= n2; ++m2) {
          const double w2 = detail::binomial_weight(n2, m2, g.idler_transmission_2);
          for (const auto& r : routes[{m1, m2}]) {
            const double wr = w * w1 * w2 * r.probability;
            if (wr == 0.0) continue;
            const double c2 = detail::click_probability(d[1], d[1].efficiency, r.photons_h);
            const double c3 = detail::click_probability(d[2], d[2].efficiency, r.photons_v);
            const std::array<double, 4> p{h1, c2, c3, h4};
            for (int k = 0; k < 16; ++k) {
              double q = wr;
              for (int i = 0; i < 4; ++i) q *= (k & (1 << i)) ? p[i] : 1.0 - p[i];
              raw[k] += q;
            }
          }
        }
      }
    }
  }

  // Gated detectors only see the gates opened by the trigger detector.
  const int trig = 1 << g.trigger;
  for (int k = 0; k < 16; ++k) {
    int gated_k = k;
    if (!(k & trig))
      for (int i = 0; i < 4; ++i)
        if (d[i].gated) gated_k &= ~(1 << i);
    out.pattern[gated_k] += raw[k];
  }
  return out;
}

struct FourfoldProbability {
  double probability = 0.0;
  bool mu_out_of_range = false;
};

/// Probability per clock cycle that all four detectors click.
inline FourfoldProbability expected_fourfold_probability(const FourfoldGeometry& g, double overlap) {
  const auto dist = click_distribution(g, overlap);
  return {dist.fourfold(), dist.mu_out_of_range};
}

/// Dead-time live fractions for non-paralyzable detectors, from the mean
/// click rates at the given cycle rate. The trigger detector is free running
/// with `elements[trigger]` OR-ed elements sharing the load; gated detectors
/// are armed at the trigger's measured rate.
inline std::array<double, 4> estimate_live_fractions(FourfoldGeometry g, double overlap, double cycles_per_s,
                                                     const std::array<double, 4>& dead_time_s,
                                                     const std::array<int, 4>& elements) {
  for (auto& d : g.detectors) d.live_fraction = 1.0;
  const auto dist = click_distribution(g, overlap);
  std::array<double, 4> live{1.0, 1.0, 1.0, 1.0};
  const int t = g.trigger;
  const double trigger_rate = dist.single(t) * cycles_per_s;
  live[t] = 1.0 / (1.0 + trigger_rate * dead_time_s[t] / std::max(1, elements[t]));
  const double measured_trigger = trigger_rate * live[t];
  for (int i = 0; i < 4; ++i) {
    if (i == t) continue;
    const double per_gate = dist.single(t) > 0.0 ? dist.twofold(i, t) / dist.single(t) : 0.0;
    const double rate = g.detectors[i].gated ? measured_trigger * per_gate : dist.single(i) * cycles_per_s;
    live[i] = 1.0 / (1.0 + rate * dead_time_s[i] / std::max(1, elements[i]));
  }
  return live;
}

}  // namespace qsync
