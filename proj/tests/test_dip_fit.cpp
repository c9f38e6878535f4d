#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qsync/dip_fit.hpp"

using namespace qsync;

namespace {

std::vector<DipPoint> sample_dip(const DipModel& m, int points, double half_range, std::mt19937_64* rng) {
  std::vector<DipPoint> pts;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < points; ++i) {
    const double x = -half_range + 2.0 * half_range * i / (points - 1);
    const double y = m(x);
    const double err = std::sqrt(std::max(y, 1.0));
    pts.push_back({x, rng ? y + err * n(*rng) : y, err});
  }
  return pts;
}

}  // namespace

TEST(FitDip, NoiselessRoundTrip) {
  const DipModel truth{40.0, 1.0, 0.0, 2.5};
  const auto pts = sample_dip(truth, 21, 15.0, nullptr);
  const auto fit = fit_dip(pts);
  ASSERT_TRUE(fit.converged) << fit.message;
  EXPECT_NEAR(fit.model.baseline, 40.0, 1e-6);
  EXPECT_NEAR(fit.model.visibility, 1.0, 1e-6);
  EXPECT_NEAR(fit.model.center_mm, 0.0, 1e-6);
  EXPECT_NEAR(fit.model.width_sigma_mm, 2.5, 1e-6);
  EXPECT_NEAR(fit.chi2, 0.0, 1e-8);
  EXPECT_EQ(fit.ndof, 17);
}

TEST(FitDip, NoiselessOffCentrePartialDip) {
  const DipModel truth{250.0, 0.62, 1.7, 3.3};
  const auto fit = fit_dip(sample_dip(truth, 31, 15.0, nullptr));
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.model.visibility, 0.62, 1e-6);
  EXPECT_NEAR(fit.model.center_mm, 1.7, 1e-6);
  EXPECT_NEAR(fit.model.width_sigma_mm, 3.3, 1e-6);
}

TEST(FitDip, FlatDataGivesNoVisibility) {
  std::vector<DipPoint> pts;
  for (int i = 0; i < 21; ++i) pts.push_back({-15.0 + 1.5 * i, 100.0, 10.0});
  const auto fit = fit_dip(pts);
  EXPECT_NEAR(fit.model.visibility, 0.0, 1e-6);
  EXPECT_NEAR(fit.model.baseline, 100.0, 1e-6);
  const auto v = visibility_with_uncertainty(fit);
  EXPECT_GE(v.lower_bound, 0.0);
}

TEST(FitDip, PullsHaveUnitVariance) {
  const DipModel truth{400.0, 0.7, 0.0, 2.5};
  std::mt19937_64 rng(17);
  const int reps = 1000;
  std::array<double, 4> truth_p{truth.baseline, truth.visibility, truth.center_mm, truth.width_sigma_mm};
  std::array<double, 4> sum2{};
  for (int r = 0; r < reps; ++r) {
    const auto fit = fit_dip(sample_dip(truth, 21, 15.0, &rng));
    ASSERT_TRUE(fit.converged);
    const std::array<double, 4> p{fit.model.baseline, fit.model.visibility, fit.model.center_mm,
                                  fit.model.width_sigma_mm};
    for (int k = 0; k < 4; ++k) {
      const double pull = (p[k] - truth_p[k]) / fit.errors[k];
      sum2[k] += pull * pull;
    }
  }
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(sum2[k] / reps, 1.0, 0.1) << "parameter " << k;
}

TEST(FitDip, ErrorAgreesWithParametricBootstrap) {
  const DipModel truth{100.0, 0.8, 0.5, 2.5};
  std::mt19937_64 rng(23);
  const auto data = sample_dip(truth, 21, 15.0, &rng);
  const auto fit = fit_dip(data);
  ASSERT_TRUE(fit.converged);
  std::normal_distribution<double> n(0.0, 1.0);
  const int reps = 400;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto boot = data;
    for (auto& pt : boot) pt.counts = fit.model(pt.position_mm) + pt.count_error * n(rng);
    const double v = fit_dip(boot).model.visibility;
    s += v;
    s2 += v * v;
  }
  const double sd = std::sqrt(s2 / reps - (s / reps) * (s / reps));
  EXPECT_NEAR(sd / fit.errors[1], 1.0, 0.2);
}

TEST(FitDip, InputErrors) {
  std::vector<DipPoint> four(4, DipPoint{0.0, 1.0, 1.0});
  for (int i = 0; i < 4; ++i) four[i].position_mm = i;
  EXPECT_THROW(fit_dip(four), std::invalid_argument);
  std::vector<DipPoint> same(6, DipPoint{1.0, 5.0, 1.0});
  EXPECT_THROW(fit_dip(same), std::invalid_argument);
  auto pts = sample_dip({40.0, 1.0, 0.0, 2.5}, 21, 15.0, nullptr);
  pts[3].count_error = 0.0;
  EXPECT_THROW(fit_dip(pts), std::invalid_argument);
}

TEST(FitDip, OrderOfPointsIrrelevant) {
  std::mt19937_64 rng(5);
  auto pts = sample_dip({60.0, 0.9, 0.0, 2.5}, 21, 15.0, &rng);
  const auto a = fit_dip(pts);
  std::reverse(pts.begin(), pts.end());
  const auto b = fit_dip(pts);
  EXPECT_NEAR(a.model.visibility, b.model.visibility, 1e-9);
}

TEST(VisibilityEstimate, LowerBoundIsOneSigmaClamped) {
  DipFit f;
  f.model = {10.0, 0.95, 0.0, 1.0};
  f.errors = {0.0, 0.02, 0.0, 0.0};
  auto v = visibility_with_uncertainty(f);
  EXPECT_NEAR(v.lower_bound, 0.93, 1e-12);
  f.errors[1] = 2.0;
  EXPECT_EQ(visibility_with_uncertainty(f).lower_bound, 0.0);
}
