#pragma once

// Weighted nonlinear least-squares fit of a Gaussian HOM dip.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsync/hom.hpp"

namespace qsync {

struct DipPoint {
  double position_mm = 0.0;
  double counts = 0.0;
  double count_error = 1.0;
};

struct DipFit {
  DipModel model;
  /// Standard errors of (baseline, visibility, center_mm, width_sigma_mm).
  std::array<double, 4> errors{};
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double chi2 = 0.0;
  int ndof = 0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-8;
};

struct VisibilityEstimate {
  double visibility = 0.0;
  double sigma = 0.0;
  double lower_bound = 0.0;
};

namespace detail {

using Vec4 = Eigen::Vector4d;

struct FitBounds {
  Vec4 lower;
  Vec4 upper;
  Vec4 scale;  // for the relative-change test

  Vec4 clamp(Vec4 p) const { return p.cwiseMax(lower).cwiseMin(upper); }
};

inline DipModel to_model(const Vec4& p) { return {p[0], p[1], p[2], p[3]}; }

inline double chi2_of(std::span<const DipPoint> pts, const Vec4& p) {
  const DipModel m = to_model(p);
  double c = 0.0;
  for (const auto& pt : pts) {
    const double r = (pt.counts - m(pt.position_mm)) / pt.count_error;
    c += r * r;
  }
  return c;
}

/// Returns J^T W J and J^T W r.
inline void normal_equations(std::span<const DipPoint> pts, const Vec4& p, Eigen::Matrix4d& a,
                             Vec4& g) {
  a.setZero();
  g.setZero();
  const double b = p[0], v = p[1], c = p[2], s = p[3];
  for (const auto& pt : pts) {
    const double dx = pt.position_mm - c;
    const double e = std::exp(-0.5 * dx * dx / (s * s));
    Vec4 j;
    j << 1.0 - v * e, -b * e, -b * v * e * dx / (s * s), -b * v * e * dx * dx / (s * s * s);
    const double w = 1.0 / (pt.count_error * pt.count_error);
    const double r = pt.counts - b * (1.0 - v * e);
    a.noalias() += w * j * j.transpose();
    g.noalias() += w * r * j;
  }
}

}  // namespace detail

/// Fits B * (1 - V exp(-(x - x0)^2 / (2 sigma^2))) with a projected
/// Levenberg-Marquardt iteration. Initialization: B from the outer quartiles,
/// x0 at the lowest point, sigma = span / 6, V = 1 - min / B. Converged when
/// the largest relative parameter change falls below the tolerance.
/// A non-converged fit still returns the best parameters seen.
inline DipFit fit_dip(std::span<const DipPoint> points, const FitOptions& options = {}) {
  if (points.size() < 5) throw std::invalid_argument("fit_dip: at least 5 points are required");
  for (const auto& pt : points)
    if (!(pt.count_error > 0.0)) throw std::invalid_argument("fit_dip: count errors must be positive");

  std::vector<DipPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](const DipPoint& l, const DipPoint& r) { return l.position_mm < r.position_mm; });
  const double x_min = pts.front().position_mm;
  const double x_max = pts.back().position_mm;
  const double span = x_max - x_min;
  if (!(span > 0.0)) throw std::invalid_argument("fit_dip: positions must not all coincide");

  const std::size_t n = pts.size();
  const std::size_t quart = std::max<std::size_t>(1, n / 4);
  double outer = 0.0;
  for (std::size_t i = 0; i < quart; ++i) outer += pts[i].counts + pts[n - 1 - i].counts;
  double b0 = outer / static_cast<double>(2 * quart);
  const auto lowest = std::min_element(
      pts.begin(), pts.end(), [](const DipPoint& l, const DipPoint& r) { return l.counts < r.counts; });
  if (!(b0 > 0.0)) b0 = std::max(1.0, lowest->counts);
  const double v0 = std::clamp(1.0 - lowest->counts / b0, 0.0, 1.0);

  // A dip narrower than the sampling is not identifiable from the points.
  std::vector<double> gaps;
  for (std::size_t i = 1; i < n; ++i) gaps.push_back(pts[i].position_mm - pts[i - 1].position_mm);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double min_sigma = std::max(1e-3 * span, 0.5 * gaps[gaps.size() / 2]);

  detail::FitBounds bounds;
  bounds.lower << 0.0, 0.0, x_min - 0.5 * span, min_sigma;
  bounds.upper << std::numeric_limits<double>::infinity(), 1.0, x_max + 0.5 * span, 10.0 * span;

  detail::Vec4 p;
  p << b0, v0, lowest->position_mm, std::max(span / 6.0, min_sigma);
  p = bounds.clamp(p);
  bounds.scale << std::max(std::abs(b0), 1e-12), 1.0, span / 6.0, span / 6.0;

  DipFit fit;
  double chi2 = detail::chi2_of(pts, p);
  double lambda = 1e-3;
  Eigen::Matrix4d a;
  detail::Vec4 g;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    detail::normal_equations(pts, p, a, g);
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix4d damped = a;
      for (int i = 0; i < 4; ++i) damped(i, i) += lambda * std::max(a(i, i), 1e-12);
      const detail::Vec4 step = damped.ldlt().solve(g);
      const detail::Vec4 trial = bounds.clamp(p + step);
      const double trial_chi2 = detail::chi2_of(pts, trial);
      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        const detail::Vec4 change = (trial - p).cwiseAbs().cwiseQuotient(
            p.cwiseAbs().cwiseMax(bounds.scale));
        p = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (change.maxCoeff() < options.relative_tolerance) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: stationary within machine precision.
    if (!accepted) fit.converged = true;
    if (fit.converged) break;
  }

  fit.model = detail::to_model(p);
  fit.chi2 = chi2;
  fit.ndof = static_cast<int>(n) - 4;
  detail::normal_equations(pts, p, a, g);
  fit.covariance = a.completeOrthogonalDecomposition().pseudoInverse();
  for (int i = 0; i < 4; ++i) fit.errors[i] = std::sqrt(std::max(0.0, fit.covariance(i, i)));
  fit.message = fit.converged ? "converged" : "iteration limit reached before convergence";
  return fit;
}

inline VisibilityEstimate visibility_with_uncertainty(const DipFit& fit) {
  VisibilityEstimate v;
  v.visibility = fit.model.visibility;
  v.sigma = fit.errors[1];
  v.lower_bound = std::clamp(v.visibility - v.sigma, 0.0, 1.0);
  return v;
}

}  // namespace qsync
