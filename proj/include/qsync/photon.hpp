#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qsync {

/// Single-photon polarization as (H, V) amplitudes.
struct Polarization {
  std::array<std::complex<double>, 2> amplitudes{1.0, 0.0};

  static Polarization horizontal() { return {{1.0, 0.0}}; }
  static Polarization vertical() { return {{0.0, 1.0}}; }
  /// Linear polarization at `deg` from the H axis.
  static Polarization linear(double deg) {
    const double t = deg * 3.14159265358979323846 / 180.0;
    return {{std::cos(t), std::sin(t)}};
  }

  double norm() const { return std::norm(amplitudes[0]) + std::norm(amplitudes[1]); }
  double probability_h() const { return std::norm(amplitudes[0]) / norm(); }
  double probability_v() const { return std::norm(amplitudes[1]) / norm(); }
};

struct PhotonWavePacket {
  double center_wavelength_nm = 0.0;
  double coherence_time_fwhm_ps = 0.0;
  double emission_time_offset_ps = 0.0;
  Polarization polarization;
  double pump_phase_rad = 0.0;

  void validate() const {
    if (!(coherence_time_fwhm_ps > 0.0)) throw std::invalid_argument("coherence time must be positive");
    if (std::abs(polarization.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("polarization must be normalized");
  }
};

}  // namespace qsync
