#pragma once

#include <cmath>
#include <stdexcept>

#include "lpm/dynamics.hpp"
#include "lpm/gaussian.hpp"

namespace lpm {

// Relative tolerance used to flag exact saturation of the error-disturbance
// bound in reports.
inline constexpr double kSaturationRelTol = 1e-9;

// Indirect linear position measurement: the object couples to a probe
// prepared in the Gaussian state `probe` through the bilinear interaction
// `params` for time `tau`; the meter observable is the probe position read
// out after the interaction.
template <typename Scalar = double>
struct LinearPositionMeasurement {
  InteractionParams<Scalar> params;
  Scalar tau;
  GaussianState<Scalar> probe;

  LinearPositionMeasurement(const InteractionParams<Scalar>& params_in,
                            Scalar tau_in, const GaussianState<Scalar>& probe_in)
      : params(params_in), tau(tau_in), probe(probe_in) {
    detail::require_finite(tau, "tau");
    if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  }
};

template <typename Scalar>
TransferMatrix<Scalar> transfer_matrix(const LinearPositionMeasurement<Scalar>& m) {
  return transfer_matrix(m.params, m.tau);
}

namespace detail {

template <typename Scalar>
Scalar square(Scalar x) {
  return x * x;
}

// Mean square of g1 X + g2 Y + bias for independent Gaussians X, Y with the
// given spreads: the common shape of all three rms figures below.
template <typename Scalar>
Scalar rms_from_residual(Scalar g1, Scalar sd1, Scalar g2, Scalar sd2,
                         Scalar bias) {
  return std::sqrt(square(g1 * sd1) + square(g2 * sd2) + square(bias));
}

}  // namespace detail

// Quantum rms error of the measurement on state psi: the rms distance
// between the meter readout Q2(tau) and the pre-interaction object position
// Q1. In terms of the transfer entries the residual is
// (c - 1) Q1 + d Q2, hence
//   epsilon^2 = (c-1)^2 s1^2 + d^2 s2^2 + ((c-1)<Q1> + d<Q2>)^2.
template <typename Scalar>
Scalar error_q(const LinearPositionMeasurement<Scalar>& m,
               const GaussianState<Scalar>& psi) {
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar bias = (t.c - 1) * psi.mean_q + t.d * m.probe.mean_q;
  return detail::rms_from_residual(t.c - 1, psi.sigma_q, t.d, m.probe.sigma_q,
                                   bias);
}

// Momentum disturbance: rms change of the object momentum across the
// interaction. Residual (d - 1) P1 - c P2, hence
//   eta_p^2 = (d-1)^2 sp1^2 + c^2 sp2^2 + ((d-1)<P1> - c<P2>)^2.
template <typename Scalar>
Scalar disturbance_p(const LinearPositionMeasurement<Scalar>& m,
                     const GaussianState<Scalar>& psi) {
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar bias = (t.d - 1) * psi.mean_p - t.c * m.probe.mean_p;
  return detail::rms_from_residual(t.d - 1, psi.sigma_p, t.c, m.probe.sigma_p,
                                   bias);
}

// Position disturbance: rms change of the object position across the
// interaction. Residual (a - 1) Q1 + b Q2, hence
//   eta_q^2 = (a-1)^2 s1^2 + b^2 s2^2 + ((a-1)<Q1> + b<Q2>)^2.
template <typename Scalar>
Scalar disturbance_q(const LinearPositionMeasurement<Scalar>& m,
                     const GaussianState<Scalar>& psi) {
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar bias = (t.a - 1) * psi.mean_q + t.b * m.probe.mean_q;
  return detail::rms_from_residual(t.a - 1, psi.sigma_q, t.b, m.probe.sigma_q,
                                   bias);
}

// Error, disturbances and the error-disturbance budget
//   epsilon_q^2 sigma_p1^2 + sigma_q1^2 eta_p^2 >= hbar^2 / 4
// for one measurement/state pair. `saturated` flags equality within
// kSaturationRelTol relative.
template <typename Scalar = double>
struct ErrorDisturbanceReport {
  Scalar epsilon_q;
  Scalar eta_p;
  Scalar eta_q;
  Scalar sigma_q1;
  Scalar sigma_p1;
  Scalar edr_lhs;
  Scalar edr_bound;
  Scalar heisenberg_product;  // epsilon_q * eta_p
  bool saturated;
};

template <typename Scalar>
ErrorDisturbanceReport<Scalar> edr_report(
    const LinearPositionMeasurement<Scalar>& m, const GaussianState<Scalar>& psi,
    const Constants<Scalar>& consts = {}) {
  ErrorDisturbanceReport<Scalar> r{};
  r.epsilon_q = error_q(m, psi);
  r.eta_p = disturbance_p(m, psi);
  r.eta_q = disturbance_q(m, psi);
  r.sigma_q1 = psi.sigma_q;
  r.sigma_p1 = psi.sigma_p;
  r.edr_lhs = detail::square(r.epsilon_q * r.sigma_p1) +
              detail::square(r.sigma_q1 * r.eta_p);
  r.edr_bound = detail::square(consts.hbar) / 4;
  r.heisenberg_product = r.epsilon_q * r.eta_p;
  r.saturated =
      std::abs(r.edr_lhs - r.edr_bound) <= Scalar(kSaturationRelTol) * r.edr_bound;
  return r;
}

}  // namespace lpm
