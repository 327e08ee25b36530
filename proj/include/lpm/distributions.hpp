#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lpm/gaussian.hpp"
#include "lpm/measurement.hpp"
#include "lpm/optimal.hpp"
#include "lpm/quadrature.hpp"

namespace lpm {

// Closed interval of meter outcomes; bounds may be infinite.
template <typename Scalar = double>
struct Interval {
  Scalar lower;
  Scalar upper;

  Interval(Scalar lower_in, Scalar upper_in) : lower(lower_in), upper(upper_in) {
    if (std::isnan(lower) || std::isnan(upper))
      throw std::invalid_argument("interval bounds must not be NaN");
    if (!(lower < upper))
      throw std::invalid_argument("interval must satisfy lower < upper");
  }

  static Interval all() {
    return Interval(-std::numeric_limits<Scalar>::infinity(),
                    std::numeric_limits<Scalar>::infinity());
  }
  static Interval at_least(Scalar x) {
    return Interval(x, std::numeric_limits<Scalar>::infinity());
  }
  static Interval at_most(Scalar x) {
    return Interval(-std::numeric_limits<Scalar>::infinity(), x);
  }
};

// Joint law of (Q1, Q2(tau)): pre-interaction object position against the
// meter readout c Q1 + d Q2. With independent inputs,
//   mean = (q1, c q1 + d q2),  cov = [ s1^2, c s1^2 ; c s1^2, c^2 s1^2 + d^2 s2^2 ].
template <typename Scalar>
Gaussian2D<Scalar> joint_q(const LinearPositionMeasurement<Scalar>& m,
                           const GaussianState<Scalar>& psi) {
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar v1 = psi.sigma_q * psi.sigma_q;
  const Scalar v2 = m.probe.sigma_q * m.probe.sigma_q;
  Vec2<Scalar> mean(psi.mean_q, t.c * psi.mean_q + t.d * m.probe.mean_q);
  Mat2<Scalar> cov;
  cov << v1, t.c * v1, t.c * v1, t.c * t.c * v1 + t.d * t.d * v2;
  return Gaussian2D<Scalar>(mean, cov);
}

// Joint law of (P1, P1(tau)): object momentum before and after the
// interaction, P1(tau) = d P1 - c P2. With independent inputs,
//   mean = (p1, d p1 - c p2),  cov = [ sp1^2, d sp1^2 ; d sp1^2, d^2 sp1^2 + c^2 sp2^2 ].
template <typename Scalar>
Gaussian2D<Scalar> joint_p(const LinearPositionMeasurement<Scalar>& m,
                           const GaussianState<Scalar>& psi) {
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar v1 = psi.sigma_p * psi.sigma_p;
  const Scalar v2 = m.probe.sigma_p * m.probe.sigma_p;
  Vec2<Scalar> mean(psi.mean_p, t.d * psi.mean_p - t.c * m.probe.mean_p);
  Mat2<Scalar> cov;
  cov << v1, t.d * v1, t.d * v1, t.d * t.d * v1 + t.c * t.c * v2;
  return Gaussian2D<Scalar>(mean, cov);
}

// Output distribution of the meter readout: second marginal of joint_q.
template <typename Scalar>
Gaussian1D<Scalar> meter_marginal(const LinearPositionMeasurement<Scalar>& m,
                                  const GaussianState<Scalar>& psi) {
  return marginal_second(joint_q(m, psi));
}

// Gaussian rms distance between meter readout and input position: equals
// error_q, evaluated through the joint distribution instead of the residual.
template <typename Scalar>
Scalar gauss_error_q(const LinearPositionMeasurement<Scalar>& m,
                     const GaussianState<Scalar>& psi) {
  return gauss_rms(joint_q(m, psi));
}

// Gaussian rms distance between input and output momentum: equals
// disturbance_p, evaluated through the joint distribution.
template <typename Scalar>
Scalar gauss_disturbance_p(const LinearPositionMeasurement<Scalar>& m,
                           const GaussianState<Scalar>& psi) {
  return gauss_rms(joint_p(m, psi));
}

// Conditional law of the pre-interaction position Q1 given meter readout y,
// for bound-saturating measurements: N(y, (1 - c) s1^2). The conditional
// mean is the readout itself, which is how these measurements estimate
// position without bias.
template <typename Scalar>
Gaussian1D<Scalar> conditional_q0_given_meter(
    const LinearPositionMeasurement<Scalar>& m, const GaussianState<Scalar>& psi,
    Scalar y, const Constants<Scalar>& consts = {}) {
  detail::require_finite(y, "y");
  if (!is_minimum_error_disturbance(m, psi, Scalar(1e-9), consts))
    throw std::invalid_argument(
        "conditional_q0_given_meter: measurement is not "
        "minimum-error-disturbance for psi");
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  return Gaussian1D<Scalar>(y, (1 - t.c) * psi.sigma_q * psi.sigma_q);
}

// Post-measurement states of a bound-saturating measurement, indexed by the
// meter readout y: each is the minimum-uncertainty Gaussian with
//   <Q1> = slope y (slope = a + b),  <P1> = p1,  sigma_q = s1 / sqrt(1 - c),
// and the readout itself is distributed by `weight` = N(q1, c s1^2).
template <typename Scalar = double>
struct PosteriorFamily {
  Scalar slope;
  Scalar mean_p;
  Scalar sigma_q;
  Scalar sigma_p;  // hbar / (2 sigma_q): members are minimum uncertainty
  Gaussian1D<Scalar> weight;

  GaussianState<Scalar> state_at(Scalar y,
                                 const Constants<Scalar>& consts = {}) const {
    return GaussianState<Scalar>(slope * y, mean_p, sigma_q, sigma_p, consts);
  }

  // Position density of the member at readout y.
  Gaussian1D<Scalar> conditional_position_density(Scalar y) const {
    return Gaussian1D<Scalar>(slope * y, sigma_q * sigma_q);
  }

  // Momentum density of the members; independent of the readout.
  Gaussian1D<Scalar> conditional_momentum_density() const {
    return Gaussian1D<Scalar>(mean_p, sigma_p * sigma_p);
  }
};

template <typename Scalar>
PosteriorFamily<Scalar> posterior_family(
    const LinearPositionMeasurement<Scalar>& m, const GaussianState<Scalar>& psi,
    const Constants<Scalar>& consts = {}) {
  if (!is_minimum_error_disturbance(m, psi, Scalar(1e-9), consts))
    throw std::invalid_argument(
        "posterior_family: measurement is not minimum-error-disturbance for "
        "psi");
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  PosteriorFamily<Scalar> fam{
      t.a + t.b, psi.mean_p, psi.sigma_q / std::sqrt(1 - t.c), Scalar(0),
      Gaussian1D<Scalar>(psi.mean_q, t.c * psi.sigma_q * psi.sigma_q)};
  fam.sigma_p = consts.hbar / (2 * fam.sigma_q);
  return fam;
}

// First and second moments of the object position/momentum after the
// measurement, conditioned on the meter readout landing in J.
template <typename Scalar = double>
struct MixtureMoments {
  Scalar mean_q;
  Scalar var_q;
  Scalar mean_p;
  Scalar var_p;
  Scalar weight;  // probability of the conditioning event
};

// Moments of the readout-conditioned mixture of posterior states. The
// readout law is integrated over J by adaptive quadrature (absolute
// tolerance 1e-10) on J clipped to mean +/- 10 sd; the event probability
// itself comes from erfc. Conditioning on an event of probability <= 1e-300
// (or one lying entirely outside the quadrature window) is rejected.
template <typename Scalar>
MixtureMoments<Scalar> mixture_moments(const LinearPositionMeasurement<Scalar>& m,
                                       const GaussianState<Scalar>& psi,
                                       const Interval<Scalar>& j,
                                       const Constants<Scalar>& consts = {}) {
  const PosteriorFamily<Scalar> fam = posterior_family(m, psi, consts);
  const Gaussian1D<Scalar>& w = fam.weight;
  const Scalar weight = mass(w, j.lower, j.upper);
  if (!(weight > Scalar(1e-300)))
    throw std::domain_error("mixture_moments: conditioning on a null event");
  const Scalar sd = std::sqrt(w.variance);
  const Scalar lo = std::max(j.lower, w.mean - 10 * sd);
  const Scalar hi = std::min(j.upper, w.mean + 10 * sd);
  if (!(lo < hi))
    throw std::domain_error(
        "mixture_moments: interval lies outside the quadrature window "
        "(mean +/- 10 sd)");
  const Scalar tol = Scalar(1e-10);
  const Scalar first =
      integrate([&](Scalar y) { return y * pdf(w, y); }, lo, hi, tol);
  const Scalar second =
      integrate([&](Scalar y) { return y * y * pdf(w, y); }, lo, hi, tol);
  const Scalar ey = first / weight;
  const Scalar ey2 = second / weight;
  MixtureMoments<Scalar> out{};
  out.weight = weight;
  out.mean_q = fam.slope * ey;
  // E[Q1^2 | J] = sigma_q^2 + slope^2 E[y^2 | J] for the member states.
  out.var_q = std::max(
      fam.sigma_q * fam.sigma_q + fam.slope * fam.slope * ey2 -
          out.mean_q * out.mean_q,
      Scalar(0));
  out.mean_p = fam.mean_p;
  out.var_p = fam.sigma_p * fam.sigma_p;
  return out;
}

}  // namespace lpm
