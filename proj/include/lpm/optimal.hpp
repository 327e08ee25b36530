#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lpm/dynamics.hpp"
#include "lpm/gaussian.hpp"
#include "lpm/measurement.hpp"

namespace lpm {

// The coupling (mu, gamma, D) admits no interaction parameters: in the
// hyperbolic regime gamma must be at least sqrt(-D).
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Named one-parameter families of bound-saturating measurements. All three
// share the transfer entries c = mu, d = 1 - mu and differ in the dynamical
// regime: A is oscillatory (D = 1), B parabolic (D = 0), C hyperbolic
// (D = -1).
enum class Family { A, B, C };

enum class Regime { oscillatory, parabolic, hyperbolic };

// Probe state tuned to the object state for transfer entry c: means
// (<Q2>, <P2>) = (<Q1>, -<P1>) and position spread
// sigma(Q2) = sqrt(c / (1 - c)) sigma(Q1), completed to minimum uncertainty.
// Requires 0 < c < 1 and a minimum-uncertainty psi.
template <typename Scalar>
GaussianState<Scalar> probe_xi_c(Scalar c, const GaussianState<Scalar>& psi,
                                 const Constants<Scalar>& consts = {}) {
  detail::require_finite(c, "c");
  if (!(c > 0 && c < 1))
    throw std::invalid_argument("probe_xi_c: c must lie in (0, 1)");
  if (!is_minimum_uncertainty(psi, consts))
    throw std::invalid_argument("probe_xi_c: psi must be minimum uncertainty");
  const Scalar sigma_q = std::sqrt(c / (1 - c)) * psi.sigma_q;
  return GaussianState<Scalar>::minimum_uncertainty(psi.mean_q, -psi.mean_p,
                                                    sigma_q, consts);
}

// True when the measurement achieves the minimum error-disturbance budget on
// psi: transfer entries satisfy c > 0, d > 0, c + d = 1, and the probe is
// the tuned state probe_xi_c(c, psi), all within the given tolerance.
// Requires a minimum-uncertainty psi.
template <typename Scalar>
bool is_minimum_error_disturbance(const LinearPositionMeasurement<Scalar>& m,
                                  const GaussianState<Scalar>& psi,
                                  Scalar tol = Scalar(1e-9),
                                  const Constants<Scalar>& consts = {}) {
  if (!is_minimum_uncertainty(psi, consts))
    throw std::invalid_argument(
        "is_minimum_error_disturbance: psi must be minimum uncertainty");
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  if (!(t.c > 0 && t.d > 0)) return false;
  if (std::abs(t.c + t.d - 1) > tol) return false;
  const Scalar c = t.c;
  if (!(c < 1)) return false;
  const Scalar target_sigma_q = std::sqrt(c / (1 - c)) * psi.sigma_q;
  const Scalar len_scale =
      std::max({psi.sigma_q, std::abs(psi.mean_q), target_sigma_q});
  const Scalar mom_scale = std::max(psi.sigma_p, std::abs(psi.mean_p));
  const Scalar half_hbar = consts.hbar / 2;
  return std::abs(m.probe.mean_q - psi.mean_q) <= tol * len_scale &&
         std::abs(m.probe.mean_p + psi.mean_p) <= tol * mom_scale &&
         std::abs(m.probe.sigma_q - target_sigma_q) <= tol * len_scale &&
         std::abs(m.probe.sigma_q * m.probe.sigma_p - half_hbar) <=
             tol * half_hbar;
}

// Structural saturation conditions on (transfer, probe), equivalent to
// is_minimum_error_disturbance for minimum-uncertainty psi:
//   (1) the readout is unbiased: (c - 1) <Q1> + d <Q2> = 0,
//   (2) the mean momentum kick cancels: (d - 1) <P1> - c <P2> = 0,
//   (3) the two residual variances balance: |c| s1 sp2 = |d| s2 sp1,
//   (4) the probe is minimum uncertainty: s2 sp2 = hbar / 2,
//   (5) c >= 0, d >= 0 and c + d = 1.
template <typename Scalar>
bool satisfies_saturation_conditions(const LinearPositionMeasurement<Scalar>& m,
                                     const GaussianState<Scalar>& psi,
                                     Scalar tol = Scalar(1e-9),
                                     const Constants<Scalar>& consts = {}) {
  if (!is_minimum_uncertainty(psi, consts))
    throw std::invalid_argument(
        "satisfies_saturation_conditions: psi must be minimum uncertainty");
  const TransferMatrix<Scalar> t = transfer_matrix(m);
  const Scalar len_scale = std::max({psi.sigma_q, std::abs(psi.mean_q),
                                     m.probe.sigma_q, std::abs(m.probe.mean_q)});
  const Scalar mom_scale = std::max({psi.sigma_p, std::abs(psi.mean_p),
                                     m.probe.sigma_p, std::abs(m.probe.mean_p)});
  const Scalar half_hbar = consts.hbar / 2;
  const Scalar lhs2 = std::abs(t.c) * psi.sigma_q * m.probe.sigma_p;
  const Scalar rhs2 = std::abs(t.d) * m.probe.sigma_q * psi.sigma_p;
  return std::abs((t.c - 1) * psi.mean_q + t.d * m.probe.mean_q) <=
             tol * len_scale &&
         std::abs((t.d - 1) * psi.mean_p - t.c * m.probe.mean_p) <=
             tol * mom_scale &&
         std::abs(lhs2 - rhs2) <= tol * std::max({lhs2, rhs2, half_hbar}) &&
         std::abs(m.probe.sigma_q * m.probe.sigma_p - half_hbar) <=
             tol * half_hbar &&
         t.c >= -tol && t.d >= -tol && std::abs(t.c + t.d - 1) <= tol;
}

// Member mu of family A, B or C acting on psi: interaction parameters and
// coupling time with transfer entries c = mu, d = 1 - mu, probe tuned by
// probe_xi_c(mu, psi). Requires 0 < mu < 1.
template <typename Scalar>
LinearPositionMeasurement<Scalar> family(Family kind, Scalar mu,
                                         const GaussianState<Scalar>& psi,
                                         const Constants<Scalar>& consts = {}) {
  detail::require_finite(mu, "mu");
  if (!(mu > 0 && mu < 1))
    throw std::invalid_argument("family: mu must lie in (0, 1)");
  Scalar alpha, beta, gamma, tau;
  switch (kind) {
    case Family::A:
      alpha = std::sqrt(mu / (2 - mu));
      beta = -std::sqrt((2 - mu) / mu);
      gamma = 0;
      tau = std::acos(1 - mu);
      break;
    case Family::B:
      alpha = 1;
      beta = -1;
      gamma = 1;
      tau = mu;
      break;
    case Family::C:
      alpha = 2 * (1 - mu) / (2 - mu);
      beta = 0;
      gamma = 1;
      tau = -std::log1p(-mu);
      break;
    default:
      throw std::invalid_argument("family: unknown kind");
  }
  return LinearPositionMeasurement<Scalar>(
      InteractionParams<Scalar>(alpha, beta, gamma), tau,
      probe_xi_c(mu, psi, consts));
}

// Inverse problem input: find (alpha, beta, tau) with transfer entries
// c = mu, d = 1 - mu at the prescribed gamma and discriminant.
template <typename Scalar = double>
struct SolverInput {
  Scalar mu;
  Scalar gamma;
  Scalar discriminant;
};

template <typename Scalar = double>
struct SolverOutput {
  Scalar alpha;
  Scalar beta;
  Scalar tau;
  Regime regime;
};

// Solves the inverse problem in closed form. Requiring c = mu, d = 1 - mu
// in the transfer entries reduces, for every regime, to one quadratic in
// alpha:
//   (2 - mu) alpha^2 - 2 (1 - mu) gamma alpha - mu (gamma^2 + D) = 0,
// whose positive root is taken; then beta = -(gamma^2 + D) / alpha and tau
// follows from the regime's angle/parameter/rapidity. Feasibility: D > 0
// needs gamma >= 0, D = 0 needs gamma > 0, D < 0 needs gamma >= sqrt(-D)
// (InfeasibleError otherwise). The result is re-verified against
// transfer_matrix to 1e-10 before returning.
template <typename Scalar>
SolverOutput<Scalar> solve_params(const SolverInput<Scalar>& in) {
  detail::require_finite(in.mu, "mu");
  detail::require_finite(in.gamma, "gamma");
  detail::require_finite(in.discriminant, "discriminant");
  if (!(in.mu > 0 && in.mu < 1))
    throw std::invalid_argument("solve_params: mu must lie in (0, 1)");
  const Scalar mu = in.mu;
  const Scalar g = in.gamma;
  const Scalar d = in.discriminant;

  Regime regime;
  if (std::abs(d) <= Scalar(1e-12) * (1 + g * g)) {
    regime = Regime::parabolic;
    if (!(g > 0))
      throw std::invalid_argument(
          "solve_params: gamma must be positive when D = 0");
  } else if (d > 0) {
    regime = Regime::oscillatory;
    if (g < 0)
      throw std::invalid_argument(
          "solve_params: gamma must be nonnegative when D > 0");
  } else {
    regime = Regime::hyperbolic;
    if (!(g >= std::sqrt(-d)))
      throw InfeasibleError(
          "solve_params: infeasible, gamma < sqrt(-D) in the hyperbolic "
          "regime");
  }

  // Positive root of (2 - mu) a^2 - 2 (1 - mu) g a - mu (g^2 + D) = 0.
  // Both addends under the root are nonnegative for feasible inputs, so
  // there is no cancellation.
  const Scalar g2d = g * g + d;
  const Scalar radicand =
      detail::square((1 - mu) * g) + (2 - mu) * mu * g2d;
  const Scalar alpha =
      ((1 - mu) * g + std::sqrt(std::max(radicand, Scalar(0)))) / (2 - mu);
  if (!(alpha > 0))
    throw InfeasibleError("solve_params: no positive coupling alpha exists");
  const Scalar beta = g2d == 0 ? Scalar(0) : -g2d / alpha;

  Scalar tau;
  switch (regime) {
    case Regime::oscillatory: {
      const Scalar w = std::sqrt(d);
      // cos(w tau) = g mu / alpha + 1 - mu, sin(w tau) = w mu / alpha.
      tau = std::atan2(w * mu / alpha, g * mu / alpha + (1 - mu)) / w;
      break;
    }
    case Regime::parabolic:
      tau = mu / alpha;
      break;
    case Regime::hyperbolic: {
      const Scalar w = std::sqrt(-d);
      const Scalar ch = g * mu / alpha + (1 - mu);
      const Scalar sh = w * mu / alpha;
      tau = std::log(ch + sh) / w;
      break;
    }
  }

  const TransferMatrix<Scalar> check =
      transfer_matrix(InteractionParams<Scalar>(alpha, beta, g), tau);
  if (std::abs(check.c - mu) > Scalar(1e-10) ||
      std::abs(check.d - (1 - mu)) > Scalar(1e-10))
    throw std::logic_error("solve_params: residual verification failed");

  return SolverOutput<Scalar>{alpha, beta, tau, regime};
}

}  // namespace lpm
