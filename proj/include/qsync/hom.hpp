#pragma once

// Two-photon interference at the relay station: polarization-state algebra
// through f-PBS -> rotation -> f-PBS, mode overlap of Gaussian wave packets,
// and the Gaussian jitter model of the resulting dip.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "qsync/photon.hpp"
#include "qsync/units.hpp"

namespace qsync {

/// Two-photon polarization amplitudes over the ordered basis HH, HV, VH, VV.
/// The first label is the photon that entered the first f-PBS at port a.
struct TwoPhotonPolarizationState {
  using Amplitudes = std::array<std::complex<double>, 4>;
  enum Index { HH = 0, HV = 1, VH = 2, VV = 3 };

  Amplitudes amplitudes{0.0, 1.0, 0.0, 0.0};

  double norm() const {
    double n = 0.0;
    for (const auto& a : amplitudes) n += std::norm(a);
    return std::sqrt(n);
  }
  const std::complex<double>& operator[](int i) const { return amplitudes[i]; }
};

struct ProjectionResult {
  TwoPhotonPolarizationState state;
  double probability = 0.0;
};

/// The first f-PBS transmits H from port a and reflects V from port b, so the
/// pair always leaves as |H>|V>. Misaligned input polarizations only cost rate.
inline ProjectionResult pbs_project(const PhotonWavePacket& photon_a, const PhotonWavePacket& photon_b) {
  return {TwoPhotonPolarizationState{},
          photon_a.polarization.probability_h() * photon_b.polarization.probability_v()};
}

/// Applies the same polarization rotation to both photons.
inline TwoPhotonPolarizationState rotate(const TwoPhotonPolarizationState& state, double angle_deg) {
  const double t = angle_deg * pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  // single photon: H -> c H + s V, V -> -s H + c V; r[in][out]
  const double r[2][2] = {{c, s}, {-s, c}};
  TwoPhotonPolarizationState out;
  out.amplitudes.fill(0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto a = state.amplitudes[2 * i + j];
      if (a == 0.0) continue;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out.amplitudes[2 * k + l] += a * r[i][k] * r[j][l];
    }
  return out;
}

/// Probability that the second f-PBS sends one photon to each detector.
/// `overlap` is the squared mode overlap of the two photons in every degree
/// of freedom except polarization: HV and VH interfere with weight overlap.
inline double coincidence_probability(const TwoPhotonPolarizationState& state, double overlap) {
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw std::invalid_argument("coincidence_probability: overlap must be in [0,1]");
  using S = TwoPhotonPolarizationState;
  const auto& hv = state.amplitudes[S::HV];
  const auto& vh = state.amplitudes[S::VH];
  const double p = std::norm(hv) + std::norm(vh) + 2.0 * overlap * std::real(std::conj(hv) * vh);
  return std::max(0.0, p);
}

/// State conditioned on no coincidence for perfectly indistinguishable
/// photons: the HV/VH sector is symmetrized, the antisymmetric remainder
/// routes to a single detector. Returned normalized.
inline TwoPhotonPolarizationState hom_output_state(const TwoPhotonPolarizationState& state) {
  using S = TwoPhotonPolarizationState;
  TwoPhotonPolarizationState out;
  out.amplitudes = {state.amplitudes[S::HH], 0.0, 0.0, state.amplitudes[S::VV]};
  const double n = out.norm();
  if (n == 0.0) throw std::domain_error("hom_output_state: no amplitude outside the coincidence sector");
  for (auto& a : out.amplitudes) a /= n;
  return out;
}

// ---------------------------------------------------------------------------
// Mode overlap

struct OverlapParams {
  double delay_ps = 0.0;
  double coherence_time_1_ps = 17.64;
  double coherence_time_2_ps = 17.64;
  double spectral_center_offset_ghz = 0.0;
  double indistinguishability_cap = 1.0;

  void validate() const {
    if (!(coherence_time_1_ps > 0.0 && coherence_time_2_ps > 0.0))
      throw std::invalid_argument("coherence times must be positive");
    if (!(indistinguishability_cap >= 0.0 && indistinguishability_cap <= 1.0))
      throw std::invalid_argument("indistinguishability cap must be in [0,1]");
  }
};

/// Standard deviation (ps) of the squared-overlap Gaussian in delay.
/// Equal photons: sqrt(2) * tau_c / 2.355.
inline double dip_sigma_ps(double coherence_time_1_ps, double coherence_time_2_ps) {
  const double s1 = coherence_time_1_ps / fwhm_per_sigma;
  const double s2 = coherence_time_2_ps / fwhm_per_sigma;
  return std::sqrt(s1 * s1 + s2 * s2);
}

/// Transform-limited intensity spectral sigma (GHz) of a wave packet with
/// intensity FWHM duration tau (ps): sigma_t * sigma_nu = 1/(4 pi).
inline double spectral_sigma_ghz(double coherence_time_ps) {
  const double sigma_t_ns = coherence_time_ps / fwhm_per_sigma / 1000.0;
  return 1.0 / (4.0 * pi * sigma_t_ns);
}

/// Delay-independent part of the overlap: width mismatch and center offset.
inline double spectral_factor(const OverlapParams& p) {
  const double n1 = spectral_sigma_ghz(p.coherence_time_1_ps);
  const double n2 = spectral_sigma_ghz(p.coherence_time_2_ps);
  const double sum = n1 * n1 + n2 * n2;
  const double dn = p.spectral_center_offset_ghz;
  return (2.0 * n1 * n2 / sum) * std::exp(-dn * dn / (2.0 * sum));
}

/// Squared overlap of two Gaussian single-photon wave packets at relative
/// delay, scaled by the residual indistinguishability cap.
inline double temporal_overlap(const OverlapParams& p) {
  p.validate();
  const double sd = dip_sigma_ps(p.coherence_time_1_ps, p.coherence_time_2_ps);
  return p.indistinguishability_cap * spectral_factor(p) *
         std::exp(-p.delay_ps * p.delay_ps / (2.0 * sd * sd));
}

/// Overlap averaged over a Gaussian relative timing jitter (closed form).
inline double jittered_overlap(const OverlapParams& p, double sigma_j_ps) {
  if (!(sigma_j_ps >= 0.0)) throw std::invalid_argument("jitter must be non-negative");
  p.validate();
  const double sd = dip_sigma_ps(p.coherence_time_1_ps, p.coherence_time_2_ps);
  const double s2 = sd * sd + sigma_j_ps * sigma_j_ps;
  return p.indistinguishability_cap * spectral_factor(p) * (sd / std::sqrt(s2)) *
         std::exp(-p.delay_ps * p.delay_ps / (2.0 * s2));
}

// ---------------------------------------------------------------------------
// Dip model

/// B * (1 - V * exp(-(x - center)^2 / (2 sigma^2))), x in delay-line mm.
struct DipModel {
  double baseline = 0.0;
  double visibility = 0.0;
  double center_mm = 0.0;
  double width_sigma_mm = 1.0;

  double operator()(double x_mm) const {
    const double u = (x_mm - center_mm) / width_sigma_mm;
    return baseline * (1.0 - visibility * std::exp(-0.5 * u * u));
  }
  double fwhm_mm() const { return fwhm_per_sigma * width_sigma_mm; }

  void validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw std::invalid_argument("visibility must be in [0,1]");
    if (!(width_sigma_mm > 0.0)) throw std::invalid_argument("dip width must be positive");
    if (!(baseline >= 0.0)) throw std::invalid_argument("baseline must be non-negative");
  }
};

struct JitterModel {
  double sigma_j_ps = 0.0;
};

/// Gaussian dip convolved with Gaussian relative timing jitter.
inline DipModel convolve_jitter(const DipModel& dip, const JitterModel& jitter,
                                const DelayLine& line = DelayLine::free_space()) {
  if (!(jitter.sigma_j_ps >= 0.0)) throw std::invalid_argument("jitter must be non-negative");
  const double sj = line.to_mm(jitter.sigma_j_ps);
  const double sd = dip.width_sigma_mm;
  const double s = std::hypot(sd, sj);
  DipModel out = dip;
  out.visibility = dip.visibility * sd / s;
  out.width_sigma_mm = s;
  return out;
}

/// Largest relative rms jitter compatible with a measured visibility,
/// assuming unit intrinsic visibility.
inline double infer_jitter_bound(double visibility_lower_bound, double dip_sigma_ps) {
  if (!(visibility_lower_bound > 0.0 && visibility_lower_bound <= 1.0))
    throw std::invalid_argument("infer_jitter_bound: visibility must be in (0,1]");
  if (!(dip_sigma_ps > 0.0)) throw std::invalid_argument("infer_jitter_bound: dip sigma must be positive");
  const double v = visibility_lower_bound;
  return dip_sigma_ps * std::sqrt(std::max(0.0, 1.0 / (v * v) - 1.0));
}

}  // namespace qsync
