#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "qsync/optics.hpp"
#include "qsync/rng.hpp"
#include "qsync/spdc.hpp"

using namespace qsync;

namespace {

OpticalPulse pump_770() { return shg_convert(amplify(OpticalPulse{}, {}), {}); }

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double poisson(double mu, int n) { return std::exp(-mu) * std::pow(mu, n) / factorial(n); }

// Permanent by brute force over permutations.
double permanent_abs2(const std::vector<std::vector<double>>& m) {
  const int n = static_cast<int>(m.size());
  if (n == 0) return 1.0;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double sum = 0.0;
  do {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= m[i][perm[i]];
    sum += p;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum * sum;
}

// P(both relay outputs fire) for n1 photons in H and n2 in V entering the
// polarization rotation, either all in one temporal mode or in two.
double relay_both_fire(int n1, int n2, bool indistinguishable, double deg = 45.0) {
  const double t = deg * 3.14159265358979323846 / 180.0;
  const double u[2][2] = {{std::cos(t), std::sin(t)}, {-std::sin(t), std::cos(t)}};
  const int n = n1 + n2;
  if (indistinguishable) {
    std::vector<int> in;
    for (int i = 0; i < n1; ++i) in.push_back(0);
    for (int i = 0; i < n2; ++i) in.push_back(1);
    double p = 0.0;
    for (int kh = 1; kh < n; ++kh) {
      std::vector<int> out;
      for (int i = 0; i < kh; ++i) out.push_back(0);
      for (int i = kh; i < n; ++i) out.push_back(1);
      std::vector<std::vector<double>> m(n, std::vector<double>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i][j] = u[in[i]][out[j]];
      p += permanent_abs2(m) / (factorial(n1) * factorial(n2) * factorial(kh) * factorial(n - kh));
    }
    return p;
  }
  // each group of same-mode photons splits binomially on its own
  auto split = [&](int k, int row) {
    std::vector<double> d(k + 1);
    for (int h = 0; h <= k; ++h)
      d[h] = factorial(k) / (factorial(h) * factorial(k - h)) * std::pow(u[row][0] * u[row][0], h) *
             std::pow(u[row][1] * u[row][1], k - h);
    return d;
  };
  const auto a = split(n1, 0), b = split(n2, 1);
  double p = 0.0;
  for (int h1 = 0; h1 <= n1; ++h1)
    for (int h2 = 0; h2 <= n2; ++h2) {
      const int h = h1 + h2, v = n - h;
      if (h >= 1 && v >= 1) p += a[h1] * b[h2];
    }
  return p;
}

double penalty_oracle(double mu) {
  double p_in = 0.0, p_dist = 0.0;
  for (int n1 = 1; n1 <= 2; ++n1)
    for (int n2 = 1; n2 <= 2; ++n2) {
      const double w = poisson(mu, n1) * poisson(mu, n2);
      p_in += w * relay_both_fire(n1, n2, true);
      p_dist += w * relay_both_fire(n1, n2, false);
    }
  return 1.0 - p_in / p_dist;
}

}  // namespace

TEST(SamplePairCount, ZeroMeanAlwaysZero) {
  auto rng = make_stream(1, StreamPurpose::pairs);
  for (int i = 0; i < 10000; ++i) EXPECT_EQ(sample_pair_count(0.0, rng), 0);
  EXPECT_THROW(sample_pair_count(-0.1, rng), std::invalid_argument);
}

TEST(SamplePairCount, ClosedFormProbabilities) {
  const double mu = 0.0012;
  EXPECT_NEAR(1.0 - poisson(mu, 0), 0.0011993, 1e-7);
  EXPECT_NEAR(1.0 - poisson(mu, 0) - poisson(mu, 1), 7.2e-7, 0.01e-7);
}

TEST(SamplePairCount, TenMillionDraws) {
  const double mu = 0.0012;
  const long n = 10'000'000;
  auto rng = make_stream(2024, StreamPurpose::pairs);
  long total = 0, at_least_one = 0, at_least_two = 0;
  for (long i = 0; i < n; ++i) {
    const int k = sample_pair_count(mu, rng);
    total += k;
    at_least_one += k >= 1;
    at_least_two += k >= 2;
  }
  EXPECT_NEAR(static_cast<double>(total) / n, mu, 3.0 * std::sqrt(mu / n));
  const double p1 = 1.0 - poisson(mu, 0);
  EXPECT_NEAR(static_cast<double>(at_least_one) / n, p1, 3.0 * std::sqrt(p1 * (1 - p1) / n));
  const double e2 = (1.0 - poisson(mu, 0) - poisson(mu, 1)) * n;  // about 7
  EXPECT_LE(std::abs(at_least_two - e2), 3.0 * std::sqrt(e2) + 1.0);
}

TEST(EmitPair, PairsShareTimingAndPhase) {
  SpdcSpec spec;
  spec.mean_pairs_per_pulse = 2.0;
  auto rng = make_stream(3, StreamPurpose::pairs);
  const auto pump = pump_770();
  int seen = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto e = emit_pair(spec, pump, rng);
    ASSERT_EQ(e.signals.size(), static_cast<std::size_t>(e.pair_count));
    ASSERT_EQ(e.idlers.size(), static_cast<std::size_t>(e.pair_count));
    for (int k = 0; k < e.pair_count; ++k) {
      EXPECT_EQ(e.signals[k].emission_time_offset_ps, e.idlers[k].emission_time_offset_ps);
      EXPECT_EQ(e.signals[k].pump_phase_rad, e.idlers[k].pump_phase_rad);
      EXPECT_NO_THROW(e.signals[k].validate());
      EXPECT_NO_THROW(e.idlers[k].validate());
      ++seen;
    }
  }
  EXPECT_GT(seen, 3000);
}

TEST(EmitPair, CoherenceTimesFromChannels) {
  SpdcSpec spec;
  spec.mean_pairs_per_pulse = 5.0;
  auto rng = make_stream(4, StreamPurpose::pairs);
  const auto e = emit_pair(spec, pump_770(), rng);
  ASSERT_GT(e.pair_count, 0);
  EXPECT_NEAR(e.signals[0].coherence_time_fwhm_ps, 4.41, 1e-12);
  EXPECT_NEAR(e.idlers[0].coherence_time_fwhm_ps, 17.64, 1e-12);
  EXPECT_DOUBLE_EQ(e.signals[0].center_wavelength_nm, 1543.73);
  EXPECT_DOUBLE_EQ(e.idlers[0].center_wavelength_nm, 1536.27);
}

TEST(EmitPair, InheritsPumpJitter) {
  SpdcSpec spec;
  spec.mean_pairs_per_pulse = 1.0;
  auto pump = pump_770();
  pump.timing_jitter_rms_ps = 0.1;
  auto rng = make_stream(5, StreamPurpose::pairs);
  double s2 = 0.0;
  int n = 0;
  for (int i = 0; i < 40000; ++i) {
    const auto e = emit_pair(spec, pump, rng);
    if (e.pair_count == 0) continue;
    s2 += e.idlers[0].emission_time_offset_ps * e.idlers[0].emission_time_offset_ps;
    ++n;
  }
  EXPECT_NEAR(std::sqrt(s2 / n), 0.1, 0.003);
}

TEST(EmitPair, UsuallyEmptyAtNominalRate) {
  SpdcSpec spec;
  auto rng = make_stream(6, StreamPurpose::pairs);
  int empty = 0;
  for (int i = 0; i < 1000; ++i) empty += emit_pair(spec, pump_770(), rng).pair_count == 0;
  EXPECT_GE(empty, 990);
}

TEST(EmitPair, RejectsWrongPump) {
  SpdcSpec spec;
  auto rng = make_stream(7, StreamPurpose::pairs);
  EXPECT_THROW(emit_pair(spec, OpticalPulse{}, rng), std::invalid_argument);
}

TEST(EmitPair, Deterministic) {
  SpdcSpec spec;
  spec.mean_pairs_per_pulse = 0.3;
  auto a = make_stream(99, StreamPurpose::pairs, 4);
  auto b = make_stream(99, StreamPurpose::pairs, 4);
  for (int i = 0; i < 5000; ++i) {
    const auto x = emit_pair(spec, pump_770(), a);
    const auto y = emit_pair(spec, pump_770(), b);
    ASSERT_EQ(x.pair_count, y.pair_count);
    for (int k = 0; k < x.pair_count; ++k)
      ASSERT_EQ(x.idlers[k].emission_time_offset_ps, y.idlers[k].emission_time_offset_ps);
  }
}

TEST(SpdcSpec, ChannelsMustBeDisjoint) {
  SpdcSpec spec;
  spec.idler_channel.center_wavelength_nm = spec.signal_channel.center_wavelength_nm;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  EXPECT_NO_THROW(SpdcSpec{}.validate());
}

TEST(MultipairPenalty, ZeroRate) { EXPECT_DOUBLE_EQ(multipair_visibility_penalty(0.0), 1.0); }

TEST(MultipairPenalty, MatchesPermanentOracle) {
  for (double mu : {1e-4, 0.0012, 0.01, 0.05, 0.1, 0.3}) {
    EXPECT_NEAR(multipair_visibility_penalty(mu), penalty_oracle(mu), 1e-10) << "mu=" << mu;
  }
}

TEST(MultipairPenalty, NominalRateCostsUnderOnePercent) {
  EXPECT_GE(multipair_visibility_penalty(0.0012), 0.99);
  EXPECT_LT(multipair_visibility_penalty(0.1), multipair_visibility_penalty(0.0012));
}

TEST(MultipairPenalty, MonotoneInMu) {
  double last = 1.0;
  for (double mu = 0.0; mu <= 0.5; mu += 0.005) {
    const double p = multipair_visibility_penalty(mu);
    EXPECT_LE(p, last + 1e-15);
    EXPECT_GE(p, 0.0);
    last = p;
  }
  EXPECT_THROW(multipair_visibility_penalty(-1.0), std::invalid_argument);
}

TEST(MultipairPenalty, LossyVersionStillBelowOne) {
  HeraldedHomEfficiencies eff{0.1, 0.1, 0.2, 0.2, 0.25, 0.2};
  const double p = multipair_visibility_penalty(0.0012, eff);
  EXPECT_GT(p, 0.99);
  EXPECT_LT(p, 1.0);
}
