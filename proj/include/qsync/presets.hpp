#pragma once

// Built-in scenarios for the three HOM experiments: a short symmetric
// network, the same with a 400 m arm mismatch, and two 50 km arms with
// dispersion compensation and the path-length servo.

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qsync/scenario.hpp"

namespace qsync {

struct Preset {
  std::string_view name;
  std::string_view description;
  std::string_view text;
};

inline constexpr std::string_view short_symmetric_yaml = R"(name: short_symmetric
seed: 20140701
clock:
  wavelength_nm: 1540
  duration_ps: 2
  spectral_width_nm: 1.0
  power_mw: 2.5
  repetition_rate_ghz: 2.5
  jitter_ps: 0.1
  coherence_length_m: 200
splitter:
  ratio: 0.5
arms:
  - name: alice
    spans:
      - length_km: 0.005
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
  - name: bob
    spans:
      - length_km: 0.005
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
relay:
  delay_line_group_index: 1.0
  indistinguishability_cap: 1.0
  relative_jitter_ps: 0
  rotation_deg: 45
  coincidence_window_ns: 0.4
detectors:
  apd1: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd2: {efficiency: 0.25, dark_per_ns: 1.0e-6, dead_time_us: 7, mode: free_running, elements: 4}
  apd3: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd4: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
scan:
  start_mm: -15
  stop_mm: 15
  points: 21
  integration_s: 3600
servo:
  enabled: false
drift:
  mode: none
micro_mc:
  mu: 0.05
  cycles_per_point: 10000000
)";

inline constexpr std::string_view asymmetric_400m_yaml = R"(name: asymmetric_400m
seed: 20140702
clock:
  wavelength_nm: 1540
  duration_ps: 2
  spectral_width_nm: 1.0
  power_mw: 2.5
  repetition_rate_ghz: 2.5
  jitter_ps: 0.1
  coherence_length_m: 200
splitter:
  ratio: 0.5
arms:
  - name: alice
    spans:
      - length_km: 0.005
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
  - name: bob
    spans:
      - length_km: 0.405
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
relay:
  delay_line_group_index: 1.0
  indistinguishability_cap: 1.0
  relative_jitter_ps: 0
  rotation_deg: 45
  coincidence_window_ns: 0.4
detectors:
  apd1: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd2: {efficiency: 0.25, dark_per_ns: 1.0e-6, dead_time_us: 7, mode: free_running, elements: 4}
  apd3: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd4: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
scan:
  start_mm: -15
  stop_mm: 15
  points: 21
  integration_s: 3600
servo:
  enabled: false
drift:
  mode: none
micro_mc:
  mu: 0.05
  cycles_per_point: 10000000
)";

inline constexpr std::string_view long_100km_yaml = R"(name: long_100km
seed: 20140703
clock:
  wavelength_nm: 1540
  duration_ps: 2
  spectral_width_nm: 1.0
  power_mw: 2.5
  repetition_rate_ghz: 2.5
  jitter_ps: 0.1
  coherence_length_m: 200
splitter:
  ratio: 0.5
arms:
  - name: alice
    spans:
      - {length_km: 49.5, attenuation_db_per_km: 0.2, dispersion_ps_per_nm_km: 17, thermal_drift_mm_per_h: 2.5}
    dcm: {net_dispersion_ps_per_nm: 850, insertion_loss_db: 6}
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
  - name: bob
    spans:
      - {length_km: 50.5, attenuation_db_per_km: 0.2, dispersion_ps_per_nm_km: 17, thermal_drift_mm_per_h: 2.5}
    dcm: {net_dispersion_ps_per_nm: 850, insertion_loss_db: 6}
    edfa: {target_power_w: 1.0, max_gain_db: 50}
    shg: {efficiency: 0.015}
    spdc:
      mu: 0.0012
      reference_pump_mw: 15
      signal: {wavelength_nm: 1543.73, bandwidth_ghz: 100}
      idler: {wavelength_nm: 1536.27, bandwidth_ghz: 25}
    signal_transmission: 0.5
    idler_transmission: 0.2
relay:
  delay_line_group_index: 1.0
  indistinguishability_cap: 1.0
  relative_jitter_ps: 0
  rotation_deg: 45
  coincidence_window_ns: 0.4
detectors:
  apd1: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd2: {efficiency: 0.25, dark_per_ns: 1.0e-6, dead_time_us: 7, mode: free_running, elements: 4}
  apd3: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
  apd4: {efficiency: 0.2, dark_per_ns: 1.0e-5, dead_time_us: 7, mode: gated}
scan:
  start_mm: -12
  stop_mm: 12
  points: 21
  integration_s: 3600
servo:
  enabled: true
  interval_s: 60
  scan_step_mm: 0.05
  scan_half_range_mm: 1.5
  samples_per_step: 8
  intensity_noise: 0.05
  accuracy_budget_mm: 0.3
drift:
  mode: ramp
  rate_mm_per_h: 5
micro_mc:
  mu: 0.05
  cycles_per_point: 10000000
)";

inline constexpr std::array<Preset, 3> presets{{
    {"short_symmetric", "two 5 m arms, clock halfway between the sources", short_symmetric_yaml},
    {"asymmetric_400m", "arm mismatch of 400 m, beyond the pulse-train coherence length", asymmetric_400m_yaml},
    {"long_100km", "two ~50 km arms with dispersion compensation, 5 mm/h drift, servo on", long_100km_yaml},
}};

inline const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets)
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

inline Scenario load_preset(std::string_view name) { return load_scenario(std::string(find_preset(name).text)); }

}  // namespace qsync
