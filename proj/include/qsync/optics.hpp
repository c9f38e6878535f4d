#pragma once

// Classical optics of the clock distribution: lossy dispersive fiber,
// dispersion compensation, amplification, frequency doubling and the
// link-budget bookkeeping that strings them together.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qsync/units.hpp"

namespace qsync {

/// A pulse of the master clock train.
///
/// Broadening is tracked through the signed accumulated dispersion
/// (ps/nm); the reported duration is the quadrature of the transform
/// limited duration and accumulated_dispersion * spectral_width, so a
/// compensation module with the opposite sign restores the original pulse.
struct OpticalPulse {
  double center_wavelength_nm = 1540.0;
  double duration_fwhm_ps = 2.0;
  double transform_limited_duration_ps = 2.0;
  double spectral_width_nm = 1.0;
  double mean_power_mw = 2.5;
  double repetition_rate_ghz = 2.5;
  double timing_jitter_rms_ps = 0.1;
  double train_coherence_length_m = 200.0;
  double accumulated_dispersion_ps_per_nm = 0.0;

  double period_ps() const { return 1000.0 / repetition_rate_ghz; }

  void validate() const {
    if (!(duration_fwhm_ps > 0.0) || !(transform_limited_duration_ps > 0.0))
      throw std::invalid_argument("pulse duration must be positive");
    if (!(spectral_width_nm > 0.0)) throw std::invalid_argument("spectral width must be positive");
    if (!(mean_power_mw >= 0.0)) throw std::invalid_argument("mean power must be non-negative");
    if (!(timing_jitter_rms_ps >= 0.0)) throw std::invalid_argument("timing jitter must be non-negative");
    if (!(repetition_rate_ghz > 0.0)) throw std::invalid_argument("repetition rate must be positive");
    if (!(center_wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be positive");
    if (!(train_coherence_length_m > 0.0))
      throw std::invalid_argument("train coherence length must be positive");
  }
};

struct FiberSpan {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.2;
  double dispersion_ps_per_nm_km = 17.0;
  double excess_loss_db = 0.0;
  double thermal_drift_rate_max_mm_per_h = 0.0;

  double loss_db() const { return attenuation_db_per_km * length_km + excess_loss_db; }

  void validate() const {
    if (!(length_km >= 0.0)) throw std::invalid_argument("fiber length must be non-negative");
    if (!(attenuation_db_per_km >= 0.0)) throw std::invalid_argument("attenuation must be non-negative");
    if (!(excess_loss_db >= 0.0)) throw std::invalid_argument("excess loss must be non-negative");
  }
};

struct DispersionCompensator {
  double net_dispersion_ps_per_nm = 0.0;
  double insertion_loss_db = 0.0;
};

struct AmplifierSpec {
  double target_output_power_w = 1.0;
  double max_gain_db = 50.0;
};

struct ShgSpec {
  double conversion_efficiency = 0.015;
};

/// Power splitter; split_ratio is the fraction sent to the followed arm.
struct Splitter {
  double split_ratio = 0.5;
  double excess_loss_db = 0.0;
};

enum class FilterShape { gaussian };

struct SpectralFilter {
  double center_wavelength_nm = 1536.27;
  double bandwidth_ghz = 25.0;
  FilterShape shape = FilterShape::gaussian;

  double center_frequency_ghz() const {
    return speed_of_light_m_per_s / center_wavelength_nm;  // m/s / nm = GHz
  }
};

namespace detail {
inline void refresh_duration(OpticalPulse& p) {
  const double chirp = p.accumulated_dispersion_ps_per_nm * p.spectral_width_nm;
  p.duration_fwhm_ps = std::hypot(p.transform_limited_duration_ps, chirp);
}
}  // namespace detail

/// Scales the mean power by 10^(-loss_db/10).
inline OpticalPulse attenuate(OpticalPulse pulse, double loss_db) {
  if (!(loss_db >= 0.0)) throw std::invalid_argument("attenuate: loss_db must be >= 0");
  pulse.mean_power_mw *= db_to_ratio(-loss_db);
  return pulse;
}

inline OpticalPulse disperse(OpticalPulse pulse, const FiberSpan& span) {
  span.validate();
  pulse.accumulated_dispersion_ps_per_nm += span.dispersion_ps_per_nm_km * span.length_km;
  detail::refresh_duration(pulse);
  return attenuate(pulse, span.loss_db());
}

inline OpticalPulse compensate_dispersion(OpticalPulse pulse, double module_net_dispersion_ps_per_nm,
                                          double insertion_loss_db) {
  if (!(insertion_loss_db >= 0.0))
    throw std::invalid_argument("compensate_dispersion: insertion loss must be >= 0");
  pulse.accumulated_dispersion_ps_per_nm -= module_net_dispersion_ps_per_nm;
  detail::refresh_duration(pulse);
  return attenuate(pulse, insertion_loss_db);
}

/// Ideal gain clamp: no ASE, output limited by both target power and gain.
inline OpticalPulse amplify(OpticalPulse pulse, const AmplifierSpec& amp) {
  if (!(amp.target_output_power_w > 0.0))
    throw std::invalid_argument("amplify: target output power must be positive");
  if (!(pulse.mean_power_mw > 0.0))
    throw std::domain_error("amplify: no input signal to amplify");
  const double target_mw = amp.target_output_power_w * 1000.0;
  pulse.mean_power_mw = std::min(target_mw, pulse.mean_power_mw * db_to_ratio(amp.max_gain_db));
  return pulse;
}

/// Second-harmonic generation. Halves the wavelength and adds no timing
/// jitter. Gaussian pulse shortening (1/sqrt 2) and the matching spectral
/// width in nm (sqrt 2 / 4) are applied.
inline OpticalPulse shg_convert(OpticalPulse pulse, const ShgSpec& spec) {
  if (!(spec.conversion_efficiency >= 0.0 && spec.conversion_efficiency <= 1.0))
    throw std::invalid_argument("shg_convert: efficiency must be in [0,1]");
  pulse.center_wavelength_nm *= 0.5;
  pulse.mean_power_mw *= spec.conversion_efficiency;
  pulse.transform_limited_duration_ps /= std::sqrt(2.0);
  pulse.spectral_width_nm *= std::sqrt(2.0) / 4.0;
  // Chirped part shortens by 1/sqrt 2 as well: (D*L) * dlambda must drop by
  // sqrt 2 while dlambda drops by 2 sqrt 2.
  pulse.accumulated_dispersion_ps_per_nm *= 2.0;
  detail::refresh_duration(pulse);
  return pulse;
}

inline OpticalPulse split(OpticalPulse pulse, const Splitter& s) {
  if (!(s.split_ratio > 0.0 && s.split_ratio <= 1.0))
    throw std::invalid_argument("split: ratio must be in (0,1]");
  pulse.mean_power_mw *= s.split_ratio;
  return attenuate(pulse, s.excess_loss_db);
}

/// Coherence time (FWHM, ps) of a Gaussian filter of the given FWHM bandwidth.
inline double bandwidth_to_coherence_time(double bandwidth_ghz) {
  if (!(bandwidth_ghz > 0.0))
    throw std::invalid_argument("bandwidth_to_coherence_time: bandwidth must be positive");
  return gaussian_time_bandwidth / bandwidth_ghz * 1000.0;
}

// ---------------------------------------------------------------------------
// Link budget

struct Attenuator {
  double loss_db = 0.0;
};

using OpticalStage =
    std::variant<Splitter, FiberSpan, DispersionCompensator, AmplifierSpec, ShgSpec, Attenuator>;

struct NamedStage {
  std::string name;
  OpticalStage stage;
};

struct LinkBudgetEntry {
  std::string stage;
  double input_power_mw = 0.0;
  double output_power_mw = 0.0;
  double gain_db = 0.0;  // negative for losses
  double duration_after_ps = 0.0;
};

struct LinkBudgetReport {
  std::vector<LinkBudgetEntry> entries;
  double input_power_mw = 0.0;
  double output_power_mw = 0.0;
  double total_gain_db = 0.0;
  double final_duration_ps = 0.0;
  OpticalPulse output_pulse;
};

inline bool is_passive(const OpticalStage& stage) {
  return !std::holds_alternative<AmplifierSpec>(stage);
}

inline OpticalPulse apply_stage(const OpticalPulse& pulse, const OpticalStage& stage) {
  struct Visitor {
    const OpticalPulse& in;
    OpticalPulse operator()(const Splitter& s) const { return split(in, s); }
    OpticalPulse operator()(const FiberSpan& s) const { return disperse(in, s); }
    OpticalPulse operator()(const DispersionCompensator& s) const {
      return compensate_dispersion(in, s.net_dispersion_ps_per_nm, s.insertion_loss_db);
    }
    OpticalPulse operator()(const AmplifierSpec& s) const { return amplify(in, s); }
    OpticalPulse operator()(const ShgSpec& s) const { return shg_convert(in, s); }
    OpticalPulse operator()(const Attenuator& s) const { return attenuate(in, s.loss_db); }
  };
  return std::visit(Visitor{pulse}, stage);
}

inline LinkBudgetReport link_budget(const OpticalPulse& input, std::span<const NamedStage> chain) {
  if (chain.empty()) throw std::invalid_argument("link_budget: chain must not be empty");
  input.validate();
  LinkBudgetReport report;
  report.input_power_mw = input.mean_power_mw;
  OpticalPulse pulse = input;
  for (const auto& named : chain) {
    const OpticalPulse out = apply_stage(pulse, named.stage);
    LinkBudgetEntry e;
    e.stage = named.name;
    e.input_power_mw = pulse.mean_power_mw;
    e.output_power_mw = out.mean_power_mw;
    e.gain_db = ratio_to_db(out.mean_power_mw / pulse.mean_power_mw);
    e.duration_after_ps = out.duration_fwhm_ps;
    report.total_gain_db += e.gain_db;
    report.entries.push_back(std::move(e));
    pulse = out;
  }
  report.output_power_mw = pulse.mean_power_mw;
  report.final_duration_ps = pulse.duration_fwhm_ps;
  report.output_pulse = pulse;
  return report;
}

}  // namespace qsync
