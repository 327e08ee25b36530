#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "lpm/optimal.hpp"
#include "lpm/oracle.hpp"
#include "test_util.hpp"

using namespace lpm;
using testutil::rel_err;
using testutil::Uniform;

namespace {

double beta_of(double alpha, double gamma, double disc) {
  return -(gamma * gamma + disc) / alpha;
}

double c_entry(const InteractionParams<double>& p, double tau) {
  return expm_series(interaction_matrix(p), tau)(1, 0);
}

double d_entry(const InteractionParams<double>& p, double tau) {
  return expm_series(interaction_matrix(p), tau)(1, 1);
}

// Oracle: first time at which the c entry of the series exponential reaches
// mu, located by bisection. NaN when unreachable for this alpha.
double oracle_tau(double alpha, double gamma, double disc, double mu) {
  const InteractionParams<double> p(alpha, beta_of(alpha, gamma, disc), gamma);
  double hi;
  if (disc > 1e-9) {
    // c grows on [0, pi / (2 sqrt(D))] and peaks there.
    hi = std::numbers::pi / (2 * std::sqrt(disc));
    if (c_entry(p, hi) < mu) return std::numeric_limits<double>::quiet_NaN();
  } else {
    hi = 1.0;
    while (c_entry(p, hi) < mu && hi < 1e6) hi *= 2;
    if (c_entry(p, hi) < mu) return std::numeric_limits<double>::quiet_NaN();
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2;
    (c_entry(p, mid) < mu ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

// Oracle: coupling alpha for which, at the time where c = mu, also
// d = 1 - mu. Grid scan for a sign change of the defect, then bisection.
// Built entirely on the series exponential.
double oracle_alpha(double gamma, double disc, double mu) {
  auto defect = [&](double alpha) {
    const double tau = oracle_tau(alpha, gamma, disc, mu);
    if (!std::isfinite(tau)) return std::numeric_limits<double>::quiet_NaN();
    return d_entry(InteractionParams<double>(alpha, beta_of(alpha, gamma, disc),
                                             gamma),
                   tau) -
           (1 - mu);
  };
  const int grid = 400;
  double prev_alpha = std::numeric_limits<double>::quiet_NaN();
  double prev_defect = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i <= grid; ++i) {
    const double alpha = 1e-4 * std::pow(30.0 / 1e-4, double(i) / grid);
    const double g = defect(alpha);
    if (std::isfinite(g) && std::isfinite(prev_defect) &&
        ((g <= 0) != (prev_defect <= 0))) {
      lo = prev_alpha;
      hi = alpha;
      break;
    }
    if (std::isfinite(g)) {
      prev_alpha = alpha;
      prev_defect = g;
    }
  }
  REQUIRE(std::isfinite(lo));
  const bool lo_sign = defect(lo) <= 0;
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2;
    ((defect(mid) <= 0) == lo_sign ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

GaussianState<double> psi_std() {
  return GaussianState<double>::minimum_uncertainty(0.0, 0.0, 1.0);
}

}  // namespace

TEST_SUITE("optimal") {

TEST_CASE("tuned probe: hand values and validation") {
  const auto psi = GaussianState<double>::minimum_uncertainty(2.0, 1.0, 1.0);
  const auto probe = probe_xi_c(0.5, psi);
  CHECK(probe.mean_q == 2.0);
  CHECK(probe.mean_p == -1.0);
  CHECK(rel_err(probe.sigma_q, 1.0) < 1e-15);
  CHECK(rel_err(probe.sigma_p, 0.5) < 1e-15);

  const auto wide = probe_xi_c(0.9, psi);
  CHECK(rel_err(wide.sigma_q, 3.0) < 1e-14);
  CHECK(rel_err(wide.sigma_p, 1.0 / 6.0) < 1e-14);

  for (const double bad : {0.0, 1.0, -0.1, 1.1}) {
    CHECK_THROWS_AS((void)probe_xi_c(bad, psi), std::invalid_argument);
  }
  const GaussianState<double> loose(0, 0, 1.0, 0.7);
  CHECK_THROWS_AS((void)probe_xi_c(0.5, loose), std::invalid_argument);
}

TEST_CASE("minimum error-disturbance predicate") {
  const auto psi = GaussianState<double>::minimum_uncertainty(1.0, 1.0, 1.0);
  for (const Family kind : {Family::A, Family::B, Family::C}) {
    for (const double mu : {1e-6, 0.2, 0.5, 0.8, 1 - 1e-6}) {
      CHECK(is_minimum_error_disturbance(family(kind, mu, psi), psi));
    }
  }

  // Wrong probe momentum sign: <P2> must be -<P1>.
  const auto good = family(Family::A, 0.4, psi);
  const GaussianState<double> flipped(good.probe.mean_q, +1.0,
                                      good.probe.sigma_q, good.probe.sigma_p);
  const LinearPositionMeasurement<double> bad_probe(good.params, good.tau,
                                                    flipped);
  CHECK(!is_minimum_error_disturbance(bad_probe, psi));

  // c + d != 1.
  const GaussianState<double> probe(0, 0, 1.0, 0.5);
  const LinearPositionMeasurement<double> von_neumann(
      InteractionParams<double>(1, 0, 0), 1.0, probe);
  CHECK(!is_minimum_error_disturbance(von_neumann, psi_std()));

  // Detuned probe width.
  const GaussianState<double> detuned = GaussianState<double>::minimum_uncertainty(
      good.probe.mean_q, good.probe.mean_p, good.probe.sigma_q * 1.01);
  CHECK(!is_minimum_error_disturbance(
      LinearPositionMeasurement<double>(good.params, good.tau, detuned), psi));

  // Probe not minimum uncertainty.
  const GaussianState<double> fat(good.probe.mean_q, good.probe.mean_p,
                                  good.probe.sigma_q, 2 * good.probe.sigma_p);
  CHECK(!is_minimum_error_disturbance(
      LinearPositionMeasurement<double>(good.params, good.tau, fat), psi));

  // Non-minimum-uncertainty system state is outside the contract.
  const GaussianState<double> loose(0, 0, 1.0, 0.7);
  CHECK_THROWS_AS((void)is_minimum_error_disturbance(good, loose),
                  std::invalid_argument);
}

TEST_CASE("structural saturation conditions agree with the predicate") {
  Uniform u(321);
  const auto psi = GaussianState<double>::minimum_uncertainty(0.8, -1.2, 1.1);
  // Tuned members satisfy both.
  for (const Family kind : {Family::A, Family::B, Family::C}) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto m = family(kind, u(0.02, 0.98), psi);
      CHECK(is_minimum_error_disturbance(m, psi));
      CHECK(satisfies_saturation_conditions(m, psi));
    }
  }
  // Perturbing any ingredient breaks both.
  for (int rep = 0; rep < 60; ++rep) {
    const auto m = family(Family::B, u(0.1, 0.9), psi);
    const int which = u.integer(0, 3);
    GaussianState<double> probe = m.probe;
    double tau = m.tau;
    switch (which) {
      case 0:
        probe = GaussianState<double>(probe.mean_q + 0.05, probe.mean_p,
                                      probe.sigma_q, probe.sigma_p);
        break;
      case 1:
        probe = GaussianState<double>(probe.mean_q, probe.mean_p + 0.05,
                                      probe.sigma_q, probe.sigma_p);
        break;
      case 2:
        probe = GaussianState<double>::minimum_uncertainty(
            probe.mean_q, probe.mean_p, probe.sigma_q * 1.02);
        break;
      case 3:
        tau *= 1.02;
        break;
    }
    const LinearPositionMeasurement<double> perturbed(m.params, tau, probe);
    CHECK(is_minimum_error_disturbance(perturbed, psi) ==
          satisfies_saturation_conditions(perturbed, psi));
    CHECK(!is_minimum_error_disturbance(perturbed, psi));
  }
}

TEST_CASE("family construction: parameters and transfer entries") {
  const auto psi = psi_std();
  const auto a = family(Family::A, 0.5, psi);
  CHECK(rel_err(a.params.alpha, 1 / std::sqrt(3.0)) < 1e-15);
  CHECK(rel_err(a.params.beta, -std::sqrt(3.0)) < 1e-15);
  CHECK(a.params.gamma == 0.0);
  CHECK(rel_err(a.tau, std::numbers::pi / 3) < 1e-15);

  const auto b = family(Family::B, 0.5, psi);
  CHECK(b.params.alpha == 1.0);
  CHECK(b.params.beta == -1.0);
  CHECK(b.params.gamma == 1.0);
  CHECK(b.tau == 0.5);

  const auto c = family(Family::C, 0.5, psi);
  CHECK(rel_err(c.params.alpha, 2.0 / 3.0) < 1e-15);
  CHECK(c.params.beta == 0.0);
  CHECK(c.params.gamma == 1.0);
  CHECK(rel_err(c.tau, std::log(2.0)) < 1e-15);

  for (int i = 1; i <= 9; ++i) {
    const double mu = i / 10.0;
    for (const Family kind : {Family::A, Family::B, Family::C}) {
      const auto t = transfer_matrix(family(kind, mu, psi));
      CHECK(rel_err(t.c, mu) < 1e-12);
      CHECK(rel_err(t.d, 1 - mu) < 1e-12);
    }
  }

  for (const double bad : {0.0, 1.0, -0.2, 1.3}) {
    CHECK_THROWS_AS((void)family(Family::A, bad, psi), std::invalid_argument);
  }
}

TEST_CASE("solver: frozen hand cases in all three regimes") {
  const auto osc = solve_params<double>({0.5, 0.0, 1.0});
  CHECK(osc.regime == Regime::oscillatory);
  CHECK(rel_err(osc.alpha, 1 / std::sqrt(3.0)) < 1e-12);
  CHECK(rel_err(osc.beta, -std::sqrt(3.0)) < 1e-12);
  CHECK(rel_err(osc.tau, std::numbers::pi / 3) < 1e-12);

  const auto par = solve_params<double>({0.5, 1.0, 0.0});
  CHECK(par.regime == Regime::parabolic);
  CHECK(rel_err(par.alpha, 1.0) < 1e-12);
  CHECK(rel_err(par.beta, -1.0) < 1e-12);
  CHECK(rel_err(par.tau, 0.5) < 1e-12);

  const auto hyp = solve_params<double>({0.5, 1.0, -1.0});
  CHECK(hyp.regime == Regime::hyperbolic);
  CHECK(rel_err(hyp.alpha, 2.0 / 3.0) < 1e-12);
  CHECK(hyp.beta == 0.0);
  CHECK(rel_err(hyp.tau, std::log(2.0)) < 1e-12);
}

TEST_CASE("solver: feasibility preconditions") {
  CHECK_THROWS_AS((void)solve_params<double>({0.5, 0.5, -1.0}),
                  InfeasibleError);
  CHECK_THROWS_AS((void)solve_params<double>({0.5, 0.999999, -1.0}),
                  InfeasibleError);
  CHECK_THROWS_AS((void)solve_params<double>({0.3, -0.5, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)solve_params<double>({0.3, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)solve_params<double>({0.3, -1.0, 0.0}),
                  std::invalid_argument);
  for (const double bad_mu : {0.0, 1.0, -0.5, 2.0}) {
    CHECK_THROWS_AS((void)solve_params<double>({bad_mu, 1.0, 0.0}),
                    std::invalid_argument);
  }
  // gamma exactly at the hyperbolic feasibility edge works.
  const auto edge = solve_params<double>({0.4, 1.0, -1.0});
  CHECK(edge.regime == Regime::hyperbolic);
  CHECK(std::isfinite(edge.tau));
}

TEST_CASE("solver agrees with the nested bisection oracle") {
  struct Case {
    double mu, gamma, disc;
  };
  for (const Case& k : {Case{0.5, 0.0, 1.0}, Case{0.35, 0.8, 0.7},
                        Case{0.2, 0.9, 0.0}, Case{0.5, 1.0, -1.0},
                        Case{0.65, 1.4, -1.2}, Case{0.8, 0.3, 2.0}}) {
    const auto got = solve_params<double>({k.mu, k.gamma, k.disc});
    const double alpha_oracle = oracle_alpha(k.gamma, k.disc, k.mu);
    CHECK(rel_err(got.alpha, alpha_oracle) < 1e-8);
    const double tau_oracle = oracle_tau(alpha_oracle, k.gamma, k.disc, k.mu);
    CHECK(rel_err(got.tau, tau_oracle) < 1e-8);
  }
}

TEST_CASE("solver round trip: transfer entries, saturation, budget split") {
  Uniform u(2718);
  const Constants<double> consts{};
  int done = 0;
  while (done < 500) {
    const double mu = u(0.02, 0.98);
    const double gamma = u(0.0, 3.0);
    double disc;
    if (gamma < 0.01) {
      disc = u(0.01, 3.0);
    } else {
      disc = u(-0.999 * gamma * gamma, 3.0);
    }
    const auto out = solve_params<double>({mu, gamma, disc});
    const auto t = transfer_matrix(
        InteractionParams<double>(out.alpha, out.beta, gamma), out.tau);
    CHECK(std::abs(t.c - mu) < 1e-9);
    CHECK(std::abs(t.d - (1 - mu)) < 1e-9);

    const GaussianState<double> psi = GaussianState<double>::minimum_uncertainty(
        u(-3, 3), u(-3, 3), u(0.3, 3));
    const LinearPositionMeasurement<double> m(
        InteractionParams<double>(out.alpha, out.beta, gamma), out.tau,
        probe_xi_c(mu, psi));
    CHECK(is_minimum_error_disturbance(m, psi));
    const auto r = edr_report(m, psi, consts);
    CHECK(r.saturated);
    // The saturating split of the budget: eps^2 = (1-mu) s1^2,
    // eta_p^2 = mu (hbar / (2 s1))^2.
    const double s1 = psi.sigma_q;
    const double sp_hat = 0.5 / s1;
    CHECK(rel_err(r.epsilon_q * r.epsilon_q, (1 - mu) * s1 * s1) < 1e-9);
    CHECK(rel_err(r.eta_p * r.eta_p, mu * sp_hat * sp_hat) < 1e-9);
    ++done;
  }
}

TEST_CASE("solver: parabolic classification band and determinism") {
  const auto near_zero = solve_params<double>({0.4, 1.0, 1e-13});
  CHECK(near_zero.regime == Regime::parabolic);
  const auto t = transfer_matrix(
      InteractionParams<double>(near_zero.alpha, near_zero.beta, 1.0),
      near_zero.tau);
  CHECK(std::abs(t.c - 0.4) < 1e-10);

  const auto just_outside = solve_params<double>({0.4, 1.0, 1e-11});
  CHECK(just_outside.regime == Regime::oscillatory);
  const auto t2 = transfer_matrix(
      InteractionParams<double>(just_outside.alpha, just_outside.beta, 1.0),
      just_outside.tau);
  CHECK(std::abs(t2.c - 0.4) < 1e-10);

  const auto s1 = solve_params<double>({0.37, 1.2, -0.8});
  const auto s2 = solve_params<double>({0.37, 1.2, -0.8});
  CHECK(s1.alpha == s2.alpha);
  CHECK(s1.beta == s2.beta);
  CHECK(s1.tau == s2.tau);
  CHECK(s1.regime == s2.regime);
}

}  // TEST_SUITE
