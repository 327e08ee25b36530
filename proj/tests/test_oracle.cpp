#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lpm/distributions.hpp"
#include "lpm/oracle.hpp"
#include "test_util.hpp"

using namespace lpm;
using testutil::rel_err;

namespace {

GaussianState<double> psi_default() {
  return GaussianState<double>::minimum_uncertainty(0.7, -0.3, 1.1);
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("initial draws: determinism and validation") {
  const auto psi = psi_default();
  const GaussianState<double> probe(-0.3, 0.8, 0.7, 1.0);
  const auto b1 = draw_initial(psi, probe, 5000, 11);
  const auto b2 = draw_initial(psi, probe, 5000, 11);
  CHECK(b1.seed == 11);
  CHECK((b1.samples.array() == b2.samples.array()).all());
  const auto b3 = draw_initial(psi, probe, 5000, 12);
  CHECK(!(b1.samples.array() == b3.samples.array()).all());
  CHECK_THROWS_AS((void)draw_initial(psi, probe, 0, 1), std::invalid_argument);
}

TEST_CASE("initial draws reproduce the product-state moments") {
  const GaussianState<double> psi(0.5, -1.0, 2.0, 0.25);
  const GaussianState<double> probe(-0.3, 0.8, 0.7, 1.0);
  const Eigen::Index n = 400000;
  const auto batch = draw_initial(psi, probe, n, 2024);
  const double root_n = std::sqrt(static_cast<double>(n));

  const double means[4] = {0.5, -0.3, -1.0, 0.8};
  const double sds[4] = {2.0, 0.7, 0.25, 1.0};
  for (int r = 0; r < 4; ++r) {
    const auto row = batch.samples.row(r);
    const double mean = row.mean();
    CHECK(std::abs(mean - means[r]) < 5 * sds[r] / root_n);
    const double var = (row.array() - mean).square().sum() / (n - 1);
    // SE of a normal sample variance is sigma^2 sqrt(2/n).
    CHECK(std::abs(var - sds[r] * sds[r]) <
          5 * sds[r] * sds[r] * std::sqrt(2.0 / n));
  }
  // All four coordinates are independent: correlations vanish.
  for (int r = 0; r < 4; ++r) {
    for (int s = r + 1; s < 4; ++s) {
      const auto xr = (batch.samples.row(r).array() - means[r]);
      const auto xs = (batch.samples.row(s).array() - means[s]);
      const double corr = (xr * xs).mean() / (sds[r] * sds[s]);
      CHECK(std::abs(corr) < 5.0 / root_n);
    }
  }
}

TEST_CASE("propagation: identity flow and an exact shear") {
  const auto psi = psi_default();
  const GaussianState<double> probe(0.2, -0.1, 0.8, 0.7);
  const auto batch = draw_initial(psi, probe, 1000, 5);

  const auto idle = propagate(batch, transfer_matrix(
                                         InteractionParams<double>(0, 0, 0), 1.0));
  CHECK((idle.samples.array() == batch.samples.array()).all());
  CHECK(idle.seed == batch.seed);

  // Impulsive coupling: q2 -> q2 + tau q1, p1 -> p1 - tau p2, rest fixed.
  const double tau = 0.75;
  const auto sheared = propagate(
      batch, transfer_matrix(InteractionParams<double>(1, 0, 0), tau));
  const double tol = 1e-12;
  CHECK((sheared.samples.row(0) - batch.samples.row(0)).cwiseAbs().maxCoeff() <
        tol);
  CHECK((sheared.samples.row(3) - batch.samples.row(3)).cwiseAbs().maxCoeff() <
        tol);
  const auto q2_expected =
      (batch.samples.row(1) + tau * batch.samples.row(0)).eval();
  CHECK((sheared.samples.row(1) - q2_expected).cwiseAbs().maxCoeff() < 1e-12);
  const auto p1_expected =
      (batch.samples.row(2) - tau * batch.samples.row(3)).eval();
  CHECK((sheared.samples.row(2) - p1_expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("series transfer agrees with the closed form") {
  const auto psi = psi_default();
  for (const Family kind : {Family::A, Family::B, Family::C}) {
    const auto m = family(kind, 0.45, psi);
    const auto closed = transfer_matrix(m);
    const auto series = series_transfer(m.params, m.tau);
    CHECK(std::abs(closed.a - series.a) < 1e-12 * std::max(1.0, std::abs(closed.a)));
    CHECK(std::abs(closed.b - series.b) < 1e-12 * std::max(1.0, std::abs(closed.b)));
    CHECK(std::abs(closed.c - series.c) < 1e-12);
    CHECK(std::abs(closed.d - series.d) < 1e-12);
  }
  CHECK_THROWS_AS(
      (void)series_transfer(InteractionParams<double>(1, 0, 0), -1.0),
      std::invalid_argument);
}

TEST_CASE("empirical report: alignment validation") {
  const auto psi = psi_default();
  const GaussianState<double> probe(0.2, -0.1, 0.8, 0.7);
  const auto b1 = draw_initial(psi, probe, 100, 5);
  const auto b2 = draw_initial(psi, probe, 101, 5);
  const auto moved = propagate(b2, transfer_matrix(
                                       InteractionParams<double>(1, 0, 0), 1.0));
  CHECK_THROWS_AS((void)empirical_report(b1, moved), std::invalid_argument);
  auto reseeded = propagate(b1, transfer_matrix(
                                    InteractionParams<double>(1, 0, 0), 1.0));
  reseeded.seed = 6;
  CHECK_THROWS_AS((void)empirical_report(b1, reseeded), std::invalid_argument);
}

TEST_CASE("empirical estimates match closed forms within five standard errors") {
  const auto psi = psi_default();
  const Eigen::Index n = 300000;
  int config = 0;
  for (const Family kind : {Family::A, Family::B, Family::C}) {
    const auto m = family(kind, 0.5, psi);
    const auto initial = draw_initial(psi, m.probe, n, 7000 + config);
    const auto moved = propagate(initial, series_transfer(m.params, m.tau));
    const auto rep = empirical_report(initial, moved);
    CHECK(rep.n == n);

    const double eps = error_q(m, psi);
    const double eta_p = disturbance_p(m, psi);
    const double eta_q = disturbance_q(m, psi);
    CHECK(rep.epsilon_q.within(eps));
    CHECK(rep.eta_p.within(eta_p));
    CHECK(rep.eta_q.within(eta_q));
    CHECK(rep.epsilon_q_sq.within(eps * eps));
    CHECK(rep.eta_p_sq.within(eta_p * eta_p));
    CHECK(rep.eta_q_sq.within(eta_q * eta_q));

    const auto meter = meter_marginal(m, psi);
    CHECK(rep.meter_mean.within(meter.mean));
    CHECK(rep.meter_variance.within(meter.variance));
    ++config;
  }
}

TEST_CASE("error-free configuration: empirical error at machine-noise level") {
  const GaussianState<double> probe(0.3, -0.2, 0.8, 1.1);
  const double k = 1.0 / (3 * std::sqrt(3.0));
  const LinearPositionMeasurement<double> m(
      InteractionParams<double>(2 * k, -2 * k, k), std::numbers::pi, probe);
  const GaussianState<double> psi(1.7, -0.4, 0.6, 1.0);
  const auto initial = draw_initial(psi, probe, 100000, 99);
  const auto moved = propagate(initial, series_transfer(m.params, m.tau));
  const auto rep = empirical_report(initial, moved);
  // The residual is identically zero; double noise only.
  CHECK(rep.epsilon_q.value <= 1e-12);
  CHECK(error_q(m, psi) <= 1e-12);
}

TEST_CASE("impulsive coupling: empirical error equals the probe spread") {
  const GaussianState<double> probe(0.0, 0.0, 0.7, 0.9);
  const LinearPositionMeasurement<double> m(InteractionParams<double>(1, 0, 0),
                                            1.0, probe);
  const GaussianState<double> psi(0.9, 1.3, 1.2, 0.8);
  const auto initial = draw_initial(psi, probe, 200000, 4242);
  const auto moved = propagate(initial, series_transfer(m.params, m.tau));
  const auto rep = empirical_report(initial, moved);
  CHECK(rep.epsilon_q.within(0.7));
  CHECK(rep.eta_p.within(0.9));
  CHECK(rep.eta_q.value <= 1e-12);
}

TEST_CASE("jackknife standard errors match asymptotic theory") {
  // For n standard normals: SE(rms) ~ 1/sqrt(2n), SE(mean square) ~
  // sqrt(2/n), SE(variance) ~ sqrt(2/n).
  const Eigen::Index n = 100000;
  NormalStream<double> normals(31337);
  Eigen::RowVectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = normals();
  const auto rms = lpm::detail::rms_estimate<double>(x);
  CHECK(rel_err(rms.se, 1.0 / std::sqrt(2.0 * n)) < 0.25);
  CHECK(rms.within(1.0));
  const auto msq = lpm::detail::mean_square_estimate<double>(x);
  CHECK(rel_err(msq.se, std::sqrt(2.0 / n)) < 0.25);
  CHECK(msq.within(1.0));
  const auto var = lpm::detail::variance_estimate<double>(x);
  CHECK(rel_err(var.se, std::sqrt(2.0 / n)) < 0.25);
  CHECK(var.within(1.0));
  const auto mean = lpm::detail::mean_estimate<double>(x);
  CHECK(rel_err(mean.se, 1.0 / std::sqrt(double(n))) < 0.25);
  CHECK(mean.within(0.0));
}

TEST_CASE("estimate band semantics") {
  const Estimate<double> e{1.0, 0.1};
  CHECK(e.within(1.4));
  CHECK(e.within(1.49));
  CHECK(!e.within(1.6));
  CHECK(e.within(1.15, 2.0));
  CHECK(!e.within(1.30, 2.0));
}

}  // TEST_SUITE
