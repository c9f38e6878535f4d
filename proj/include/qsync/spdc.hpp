#pragma once

// Photon-pair sources pumped by the distributed clock.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "qsync/fourfold.hpp"
#include "qsync/optics.hpp"
#include "qsync/photon.hpp"
#include "qsync/rng.hpp"

namespace qsync {

struct SpdcSpec {
  double mean_pairs_per_pulse = 0.0012;
  SpectralFilter signal_channel{1543.73, 100.0};
  SpectralFilter idler_channel{1536.27, 25.0};

  void validate() const {
    if (!(mean_pairs_per_pulse >= 0.0)) throw std::invalid_argument("mean pairs per pulse must be >= 0");
    if (!(signal_channel.bandwidth_ghz > 0.0) || !(idler_channel.bandwidth_ghz > 0.0))
      throw std::invalid_argument("channel bandwidths must be positive");
    const double separation =
        std::abs(signal_channel.center_frequency_ghz() - idler_channel.center_frequency_ghz());
    if (separation <= 0.5 * (signal_channel.bandwidth_ghz + idler_channel.bandwidth_ghz))
      throw std::invalid_argument("signal and idler channels overlap");
  }
};

struct PairEmission {
  int pair_count = 0;
  std::vector<PhotonWavePacket> signals;
  std::vector<PhotonWavePacket> idlers;
};

/// Timing and optical phase of one pump pulse at a source.
struct PumpPulseEvent {
  double timing_offset_ps = 0.0;
  double phase_rad = 0.0;
};

inline PumpPulseEvent sample_pump_event(const OpticalPulse& pump, RngStream& rng) {
  PumpPulseEvent e;
  if (pump.timing_jitter_rms_ps > 0.0)
    e.timing_offset_ps = std::normal_distribution<double>(0.0, pump.timing_jitter_rms_ps)(rng);
  e.phase_rad = std::uniform_real_distribution<double>(0.0, 2.0 * pi)(rng);
  return e;
}

inline int sample_pair_count(double mu, RngStream& rng) {
  if (!(mu >= 0.0)) throw std::invalid_argument("sample_pair_count: mu must be >= 0");
  if (mu == 0.0) return 0;
  return std::poisson_distribution<int>(mu)(rng);
}

/// Wave packets for a given number of pairs from one pump pulse.
inline PairEmission emit_pairs(const SpdcSpec& spec, const PumpPulseEvent& event, int pair_count) {
  if (pair_count < 0) throw std::invalid_argument("emit_pairs: negative pair count");
  PairEmission e;
  e.pair_count = pair_count;
  const double tau_s = bandwidth_to_coherence_time(spec.signal_channel.bandwidth_ghz);
  const double tau_i = bandwidth_to_coherence_time(spec.idler_channel.bandwidth_ghz);
  for (int k = 0; k < pair_count; ++k) {
    e.signals.push_back({spec.signal_channel.center_wavelength_nm, tau_s, event.timing_offset_ps,
                         Polarization::horizontal(), event.phase_rad});
    e.idlers.push_back({spec.idler_channel.center_wavelength_nm, tau_i, event.timing_offset_ps,
                        Polarization::horizontal(), event.phase_rad});
  }
  return e;
}

/// Pairs from one pump pulse. Both photons of every pair carry the pump's
/// timing offset and phase. Type-0 phase matching: all photons share the
/// pump's (H) polarization.
inline PairEmission emit_pair(const SpdcSpec& spec, const OpticalPulse& pump, const PumpPulseEvent& event,
                              RngStream& rng) {
  const double phase_matched_nm = 1.0 / (1.0 / spec.signal_channel.center_wavelength_nm +
                                         1.0 / spec.idler_channel.center_wavelength_nm);
  if (std::abs(pump.center_wavelength_nm - phase_matched_nm) > 2.0)
    throw std::invalid_argument("emit_pair: pump wavelength does not match the signal/idler channels");
  return emit_pairs(spec, event, sample_pair_count(spec.mean_pairs_per_pulse, rng));
}

inline PairEmission emit_pair(const SpdcSpec& spec, const OpticalPulse& pump, RngStream& rng) {
  const PumpPulseEvent event = sample_pump_event(pump, rng);
  return emit_pair(spec, pump, event, rng);
}

/// Transmissions and efficiencies that set the multipair contamination.
struct HeraldedHomEfficiencies {
  double herald_1 = 1.0;  // signal transmission x detector efficiency
  double herald_2 = 1.0;
  double idler_1 = 1.0;  // idler transmission to the relay
  double idler_2 = 1.0;
  double relay_h = 1.0;  // relay detector efficiencies
  double relay_v = 1.0;
};

/// Heralded HOM visibility achievable at perfect mode overlap, limited only
/// by multi-pair emission (no dark counts). 1 at mu = 0.
inline double multipair_visibility_penalty(double mu, const HeraldedHomEfficiencies& eff) {
  if (!(mu >= 0.0)) throw std::invalid_argument("multipair_visibility_penalty: mu must be >= 0");
  if (mu == 0.0) return 1.0;
  FourfoldGeometry g;
  g.mu_1 = g.mu_2 = mu;
  g.signal_transmission_1 = g.signal_transmission_2 = 1.0;
  g.idler_transmission_1 = eff.idler_1;
  g.idler_transmission_2 = eff.idler_2;
  g.detectors[0] = {eff.herald_1, 0.0, 1.0, false};
  g.detectors[1] = {eff.relay_h, 0.0, 1.0, false};
  g.detectors[2] = {eff.relay_v, 0.0, 1.0, false};
  g.detectors[3] = {eff.herald_2, 0.0, 1.0, false};
  const double coincident = expected_fourfold_probability(g, 1.0).probability;
  const double distinguishable = expected_fourfold_probability(g, 0.0).probability;
  return distinguishable > 0.0 ? std::clamp(1.0 - coincident / distinguishable, 0.0, 1.0) : 1.0;
}

/// Ideal detectors and lossless paths.
inline double multipair_visibility_penalty(double mu) {
  return multipair_visibility_penalty(mu, HeraldedHomEfficiencies{});
}

}  // namespace qsync
