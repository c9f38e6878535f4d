#pragma once

#include <cmath>

namespace qsync {

inline constexpr double speed_of_light_mm_per_ps = 0.299792458;
inline constexpr double speed_of_light_m_per_s = 299792458.0;

/// 2*sqrt(2 ln 2): FWHM of a Gaussian in units of its standard deviation.
inline constexpr double fwhm_per_sigma = 2.3548200450309493;

/// Gaussian FWHM time-bandwidth product.
inline constexpr double gaussian_time_bandwidth = 0.441;

inline constexpr double pi = 3.14159265358979323846;

inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Conversion between delay-line displacement and photon delay.
struct DelayLine {
  double group_index = 1.0;  // 1.0 for a free-space line

  double ps_per_mm() const { return group_index / speed_of_light_mm_per_ps; }
  double to_ps(double mm) const { return mm * ps_per_mm(); }
  double to_mm(double ps) const { return ps / ps_per_mm(); }

  static DelayLine free_space() { return {1.0}; }
  static DelayLine fiber(double group_index = 1.468) { return {group_index}; }
};

}  // namespace qsync
