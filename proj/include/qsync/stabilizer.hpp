#pragma once

// Thermal drift of the long fiber arms and the Mach-Zehnder envelope
// tracking servo that feeds corrections to the HOM delay line.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qsync/errors.hpp"
#include "qsync/optics.hpp"
#include "qsync/rng.hpp"
#include "qsync/units.hpp"

namespace qsync {

enum class DriftMode { none, ramp, random_walk };

struct ThermalDriftModel {
  DriftMode mode = DriftMode::ramp;
  double max_rate_mm_per_h = 5.0;
};

/// Optical path increment (mm) over dt seconds. Ramp: exact rate; random
/// walk: Gaussian increments whose 1 h rms equals the rate.
inline double drift_step(const ThermalDriftModel& model, double dt_s, RngStream& rng) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("drift_step: dt must be positive");
  const double hours = dt_s / 3600.0;
  switch (model.mode) {
    case DriftMode::none:
      return 0.0;
    case DriftMode::ramp:
      return model.max_rate_mm_per_h * hours;
    case DriftMode::random_walk:
      return std::normal_distribution<double>(0.0, model.max_rate_mm_per_h * std::sqrt(hours))(rng);
  }
  return 0.0;
}

struct InterferogramSample {
  double path_difference_mm = 0.0;
  double intensity = 0.0;
};

/// Fringe contrast of the two-arm pulse-train interferometer: overlap of the
/// nearest pulse pair (Gaussian, FWHM = c * pulse duration) times the
/// Gaussian degree of coherence of the train (FWHM = coherence length) at
/// the whole-pulse offset.
inline double fringe_envelope(double path_difference_mm, const OpticalPulse& clock) {
  constexpr double four_ln2 = 2.772588722239781;
  const double spacing_mm = speed_of_light_mm_per_ps * clock.period_ps();
  const double k = std::round(path_difference_mm / spacing_mm);
  const double residual = path_difference_mm - k * spacing_mm;
  const double width_mm = speed_of_light_mm_per_ps * clock.duration_fwhm_ps;
  const double lc_mm = clock.train_coherence_length_m * 1000.0;
  const double whole = k * spacing_mm / lc_mm;
  return std::exp(-four_ln2 * (residual / width_mm) * (residual / width_mm)) *
         std::exp(-four_ln2 * whole * whole);
}

inline InterferogramSample classical_interferogram(double path_difference_mm, const OpticalPulse& clock) {
  clock.validate();
  const double lambda_mm = clock.center_wavelength_nm * 1e-6;
  const double gamma = fringe_envelope(path_difference_mm, clock);
  return {path_difference_mm,
          0.5 * (1.0 + gamma * std::cos(2.0 * pi * path_difference_mm / lambda_mm))};
}

struct EnvelopeEstimate {
  double peak_mm = 0.0;
  double uncertainty_mm = 0.0;
  double peak_contrast = 0.0;
};

/// Locates the interference envelope maximum. Consecutive windows of
/// `samples_per_window` samples get a linear least-squares fringe fit
/// a + b cos(kx) + c sin(kx); the contrast sqrt(b^2+c^2)/a is the local
/// envelope. The peak is refined by a weighted parabola through log(contrast)
/// of the windows above half maximum (exact for a Gaussian envelope).
/// Throws TrackingLost when no window reaches `min_contrast`.
inline EnvelopeEstimate locate_envelope_peak(std::span<const InterferogramSample> samples, double wavelength_nm,
                                             int samples_per_window = 8, double min_contrast = 0.25) {
  if (samples.size() < 7) throw std::invalid_argument("locate_envelope_peak: at least 7 samples required");
  if (samples_per_window < 3) throw std::invalid_argument("locate_envelope_peak: window needs >= 3 samples");
  std::vector<InterferogramSample> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end(), [](const auto& l, const auto& r) { return l.path_difference_mm < r.path_difference_mm; });

  const double k = 2.0 * pi / (wavelength_nm * 1e-6);
  std::vector<double> xs, cs;
  for (std::size_t start = 0; start + samples_per_window <= s.size(); start += samples_per_window) {
    Eigen::MatrixXd a(samples_per_window, 3);
    Eigen::VectorXd y(samples_per_window);
    double xm = 0.0;
    for (int j = 0; j < samples_per_window; ++j) {
      const auto& p = s[start + j];
      a(j, 0) = 1.0;
      a(j, 1) = std::cos(k * p.path_difference_mm);
      a(j, 2) = std::sin(k * p.path_difference_mm);
      y(j) = p.intensity;
      xm += p.path_difference_mm;
    }
    const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(y);
    xs.push_back(xm / samples_per_window);
    cs.push_back(coef[0] > 0.0 ? std::hypot(coef[1], coef[2]) / coef[0] : 0.0);
  }
  if (xs.size() < 3) throw std::invalid_argument("locate_envelope_peak: fewer than 3 windows");

  const auto best = static_cast<std::size_t>(std::max_element(cs.begin(), cs.end()) - cs.begin());
  const double c_max = cs[best];
  if (!(c_max >= min_contrast)) throw TrackingLost("no interference contrast in the scan window");

  EnvelopeEstimate est;
  est.peak_contrast = c_max;
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs[i] >= 0.5 * c_max) use.push_back(i);
  if (use.size() < 3) {
    if (best == 0 || best + 1 == cs.size()) {
      est.peak_mm = xs[best];
      est.uncertainty_mm = xs.size() > 1 ? std::abs(xs[1] - xs[0]) : 0.0;
      return est;
    }
    use = {best - 1, best, best + 1};
  }

  const double x0 = xs[best];
  const auto n = static_cast<Eigen::Index>(use.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = xs[use[i]] - x0;
    const double c = std::max(cs[use[i]], 1e-9);
    a(i, 0) = dx * dx;
    a(i, 1) = dx;
    a(i, 2) = 1.0;
    y(i) = std::log(c);
    w(i) = c;  // sigma(log c) ~ sigma_c / c
  }
  const Eigen::MatrixXd aw = w.asDiagonal() * a;
  const Eigen::VectorXd yw = w.asDiagonal() * y;
  const Eigen::Vector3d q = aw.colPivHouseholderQr().solve(yw);
  if (!(q[0] < 0.0)) {
    est.peak_mm = x0;
    est.uncertainty_mm = use.size() > 1 ? std::abs(xs[use[1]] - xs[use[0]]) : 0.0;
    return est;
  }
  const double vertex = -q[1] / (2.0 * q[0]);
  est.peak_mm = x0 + vertex;

  const Eigen::VectorXd resid = yw - aw * q;
  const double dof = std::max<double>(1.0, static_cast<double>(n) - 3.0);
  const double s2 = resid.squaredNorm() / dof;
  const Eigen::Matrix3d cov = s2 * (aw.transpose() * aw).inverse();
  const Eigen::Vector3d grad(q[1] / (2.0 * q[0] * q[0]), -1.0 / (2.0 * q[0]), 0.0);
  est.uncertainty_mm = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  return est;
}

// ---------------------------------------------------------------------------
// Servo loop

struct ServoConfig {
  double measurement_interval_s = 60.0;
  double scan_step_mm = 0.05;
  double scan_half_range_mm = 1.5;
  int samples_per_step = 8;
  double intensity_noise = 0.05;
  double accuracy_budget_mm = 0.3;
  double min_contrast = 0.25;

  void validate(const OpticalPulse& clock) const {
    const double envelope_mm = speed_of_light_mm_per_ps * clock.duration_fwhm_ps;
    if (!(measurement_interval_s > 0.0)) throw std::invalid_argument("servo interval must be positive");
    if (!(scan_step_mm > 0.0 && scan_step_mm < envelope_mm))
      throw std::invalid_argument("servo scan step must be positive and below the envelope width");
    if (!(accuracy_budget_mm > 0.0)) throw std::invalid_argument("servo accuracy budget must be positive");
    if (samples_per_step < 3) throw std::invalid_argument("servo needs >= 3 samples per step");
    if (!(scan_half_range_mm > scan_step_mm)) throw std::invalid_argument("servo scan range too small");
    if (!(intensity_noise >= 0.0)) throw std::invalid_argument("servo intensity noise must be >= 0");
  }
};

struct ServoState {
  double correction_mm = 0.0;  // applied to the HOM delay line
  double scan_center_mm = 0.0;
  bool tracking = true;
};

/// Delay-line micro-scan across the Mach-Zehnder envelope. `path_offset_mm`
/// is the current arm-length mismatch; the readings are delay-line settings.
inline std::vector<InterferogramSample> micro_scan(double path_offset_mm, const ServoState& state,
                                                   const ServoConfig& config, const OpticalPulse& clock,
                                                   RngStream& noise) {
  const double lambda_mm = clock.center_wavelength_nm * 1e-6;
  const int steps = static_cast<int>(std::floor(2.0 * config.scan_half_range_mm / config.scan_step_mm)) + 1;
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<InterferogramSample> out;
  out.reserve(static_cast<std::size_t>(steps * config.samples_per_step));
  for (int i = 0; i < steps; ++i) {
    const double base = state.scan_center_mm - config.scan_half_range_mm + i * config.scan_step_mm;
    for (int j = 0; j < config.samples_per_step; ++j) {
      const double setting = base + j * lambda_mm / config.samples_per_step;
      double intensity = classical_interferogram(setting - path_offset_mm, clock).intensity;
      if (config.intensity_noise > 0.0) intensity += config.intensity_noise * n01(noise);
      out.push_back({setting, std::clamp(intensity, 0.0, 1.0)});
    }
  }
  return out;
}

/// Sets the HOM delay-line correction to cancel the measured offset.
/// Returns the correction now applied.
inline double servo_update(ServoState& state, const EnvelopeEstimate& measurement) {
  state.correction_mm = -measurement.peak_mm;
  state.scan_center_mm = measurement.peak_mm;
  state.tracking = true;
  return state.correction_mm;
}

struct ServoTraceRow {
  double time_s = 0.0;
  double drift_mm = 0.0;
  double measured_offset_mm = std::numeric_limits<double>::quiet_NaN();
  double correction_mm = 0.0;
  double residual_mm = 0.0;  // drift + correction right after the update
  bool tracking_ok = true;
};

struct ServoTrace {
  std::vector<ServoTraceRow> rows;
  double interval_s = 60.0;
  bool tracking_lost = false;

  /// Residual at time t, linear in the drift between updates.
  double residual_at(double t_s) const {
    if (rows.empty()) return 0.0;
    if (t_s <= rows.front().time_s) return rows.front().residual_mm;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t_s / interval_s), rows.size() - 1);
    if (i + 1 >= rows.size()) return rows.back().residual_mm;
    const double f = (t_s - rows[i].time_s) / interval_s;
    const double drift = rows[i].drift_mm + f * (rows[i + 1].drift_mm - rows[i].drift_mm);
    return drift + rows[i].correction_mm;
  }

  /// Exact rms of the piecewise-linear residual over [0, duration].
  double residual_rms(double duration_s) const {
    double acc = 0.0, total = 0.0;
    for (std::size_t i = 0; i + 1 < rows.size() && rows[i].time_s < duration_s; ++i) {
      const double r0 = rows[i].drift_mm + rows[i].correction_mm;
      const double r1 = rows[i + 1].drift_mm + rows[i].correction_mm;
      const double dt = std::min(rows[i + 1].time_s, duration_s) - rows[i].time_s;
      const double f = dt / (rows[i + 1].time_s - rows[i].time_s);
      const double r1c = r0 + f * (r1 - r0);
      acc += dt * (r0 * r0 + r0 * r1c + r1c * r1c) / 3.0;
      total += dt;
    }
    return total > 0.0 ? std::sqrt(acc / total) : 0.0;
  }
};

/// Runs drift and (optionally) the servo for `duration_s`, one row per
/// measurement interval including t = 0 and t = duration.
inline ServoTrace simulate_servo(const ThermalDriftModel& drift, const ServoConfig& config,
                                 const OpticalPulse& clock, double duration_s, bool enabled,
                                 RngStream& drift_rng, RngStream& noise_rng) {
  config.validate(clock);
  ServoTrace trace;
  trace.interval_s = config.measurement_interval_s;
  ServoState state;
  double d = 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(duration_s / config.measurement_interval_s - 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * config.measurement_interval_s;
    if (i > 0) d += drift_step(drift, config.measurement_interval_s, drift_rng);
    ServoTraceRow row;
    row.time_s = t;
    row.drift_mm = d;
    if (enabled) {
      try {
        const auto samples = micro_scan(d, state, config, clock, noise_rng);
        const auto est = locate_envelope_peak(samples, clock.center_wavelength_nm, config.samples_per_step,
                                              config.min_contrast);
        servo_update(state, est);
        row.measured_offset_mm = est.peak_mm;
      } catch (const TrackingLost&) {
        state.tracking = false;
        row.tracking_ok = false;
        trace.tracking_lost = true;
      }
    }
    row.correction_mm = state.correction_mm;
    row.residual_mm = d + state.correction_mm;
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace qsync
