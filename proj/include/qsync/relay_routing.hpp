#pragma once

// Photon-number routing through the relay: f-PBS (port a -> H, port b -> V),
// polarization rotation, second f-PBS (H -> APD2, V -> APD3).
//
// The b photons occupy a temporal mode with squared overlap O with the a
// mode. Writing that mode as sqrt(O) A + sqrt(1-O) P, with P orthogonal to
// A, gives a four-mode bosonic problem {A_H, A_V, P_H, P_V} that is expanded
// exactly as a polynomial in creation operators.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "qsync/units.hpp"

namespace qsync {

struct RoutingOutcome {
  int photons_h = 0;  // towards APD2
  int photons_v = 0;  // towards APD3
  double probability = 0.0;
};

namespace detail {

using Monomial = std::array<int, 4>;  // exponents of A_H, A_V, P_H, P_V
using Polynomial = std::map<Monomial, std::complex<double>>;

inline Polynomial multiply(const Polynomial& lhs, const Polynomial& rhs) {
  Polynomial out;
  for (const auto& [ml, cl] : lhs)
    for (const auto& [mr, cr] : rhs) {
      Monomial m{};
      for (int i = 0; i < 4; ++i) m[i] = ml[i] + mr[i];
      out[m] += cl * cr;
    }
  return out;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

/// Distribution of (photons at APD2, photons at APD3) for `photons_a` photons
/// entering the first f-PBS from port a and `photons_b` from port b.
/// Photons from the same port share one temporal mode.
inline std::vector<RoutingOutcome> route_through_relay(int photons_a, int photons_b, double overlap,
                                                       double rotation_deg = 45.0) {
  if (photons_a < 0 || photons_b < 0) throw std::invalid_argument("negative photon number");
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw std::invalid_argument("route_through_relay: overlap must be in [0,1]");

  const double theta = rotation_deg * pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double in = std::sqrt(overlap);
  const double out = std::sqrt(1.0 - overlap);

  // H -> c H + s V, V -> -s H + c V
  const detail::Polynomial op_a{{{1, 0, 0, 0}, c}, {{0, 1, 0, 0}, s}};
  detail::Polynomial op_b;
  if (in > 0.0) {
    op_b[{1, 0, 0, 0}] += -s * in;
    op_b[{0, 1, 0, 0}] += c * in;
  }
  if (out > 0.0) {
    op_b[{0, 0, 1, 0}] += -s * out;
    op_b[{0, 0, 0, 1}] += c * out;
  }

  detail::Polynomial state{{{0, 0, 0, 0}, 1.0}};
  for (int i = 0; i < photons_a; ++i) state = detail::multiply(state, op_a);
  for (int i = 0; i < photons_b; ++i) state = detail::multiply(state, op_b);

  const double norm = detail::factorial(photons_a) * detail::factorial(photons_b);
  std::map<std::pair<int, int>, double> tally;
  for (const auto& [m, coef] : state) {
    double weight = std::norm(coef);
    for (int e : m) weight *= detail::factorial(e);
    tally[{m[0] + m[2], m[1] + m[3]}] += weight / norm;
  }

  std::vector<RoutingOutcome> outcomes;
  outcomes.reserve(tally.size());
  for (const auto& [key, p] : tally) outcomes.push_back({key.first, key.second, p});
  return outcomes;
}

}  // namespace qsync
