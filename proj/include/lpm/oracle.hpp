#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "lpm/dynamics.hpp"
#include "lpm/gaussian.hpp"
#include "lpm/measurement.hpp"
#include "lpm/normal_stream.hpp"

namespace lpm {

template <typename Scalar>
using Mat4X = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;

// Batch of classical phase-space samples, one column per draw, rows ordered
// (q1, q2, p1, p2). For Gaussian states all rms figures of the linear
// measurement model are moments of this classical ensemble, which makes
// brute-force sampling an independent check on every closed form.
template <typename Scalar = double>
struct PhaseSampleBatch {
  Mat4X<Scalar> samples;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return samples.cols(); }
};

// Draws n independent phase-space points from the product state psi (x) probe.
// Per column the stream is consumed in row order q1, q2, p1, p2.
template <typename Scalar>
PhaseSampleBatch<Scalar> draw_initial(const GaussianState<Scalar>& psi,
                                      const GaussianState<Scalar>& probe,
                                      Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw_initial: n must be >= 1");
  PhaseSampleBatch<Scalar> batch;
  batch.seed = seed;
  batch.samples.resize(4, n);
  NormalStream<Scalar> normals(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    batch.samples(0, i) = psi.mean_q + psi.sigma_q * normals();
    batch.samples(1, i) = probe.mean_q + probe.sigma_q * normals();
    batch.samples(2, i) = psi.mean_p + psi.sigma_p * normals();
    batch.samples(3, i) = probe.mean_p + probe.sigma_p * normals();
  }
  return batch;
}

// Applies the interaction to every sample: positions by the transfer matrix,
// momenta by its inverse transpose (the momentum_transfer map).
template <typename Scalar>
PhaseSampleBatch<Scalar> propagate(const PhaseSampleBatch<Scalar>& batch,
                                   const TransferMatrix<Scalar>& t) {
  PhaseSampleBatch<Scalar> out;
  out.seed = batch.seed;
  out.samples.resize(4, batch.n());
  out.samples.topRows(2) = t.matrix() * batch.samples.topRows(2);
  out.samples.bottomRows(2) = momentum_transfer(t) * batch.samples.bottomRows(2);
  return out;
}

// Transfer matrix evaluated through the series matrix exponential instead of
// the closed-form branches; keeps oracle runs independent of the formulas
// they are meant to check.
template <typename Scalar>
TransferMatrix<Scalar> series_transfer(const InteractionParams<Scalar>& p,
                                       Scalar tau) {
  detail::require_finite(tau, "tau");
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  const Mat2<Scalar> e = expm_series(interaction_matrix(p), tau);
  return TransferMatrix<Scalar>(e(0, 0), e(0, 1), e(1, 0), e(1, 1));
}

// Point estimate with a jackknife standard error.
template <typename Scalar = double>
struct Estimate {
  Scalar value;
  Scalar se;

  // True when |value - target| <= num_se * se.
  bool within(Scalar target, Scalar num_se = Scalar(5)) const {
    return std::abs(value - target) <= num_se * se;
  }
};

namespace detail {

// Jackknife standard error of a statistic from its leave-one-out replicas.
// Replicas are accumulated centered at the full-sample value, which keeps
// the variance sum free of catastrophic cancellation (the replicas agree to
// many digits).
template <typename Scalar, typename Replica>
Scalar jackknife_se(Eigen::Index n, Scalar full_value, Replica&& replica) {
  long double sum_d = 0;
  long double sum_d2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double d =
        static_cast<long double>(replica(i)) - static_cast<long double>(full_value);
    sum_d += d;
    sum_d2 += d * d;
  }
  const long double mean_d = sum_d / n;
  const long double var =
      (static_cast<long double>(n - 1) / n) * (sum_d2 - n * mean_d * mean_d);
  return static_cast<Scalar>(std::sqrt(std::max(var, 0.0L)));
}

// rms = sqrt(mean of squares) of a residual row, with jackknife SE.
template <typename Scalar, typename Row>
Estimate<Scalar> rms_estimate(const Row& x) {
  const Eigen::Index n = x.size();
  long double sum_sq = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double v = static_cast<long double>(x(i));
    sum_sq += v * v;
  }
  const Scalar value = static_cast<Scalar>(std::sqrt(sum_sq / n));
  const Scalar se = jackknife_se<Scalar>(n, value, [&](Eigen::Index i) {
    const long double v = static_cast<long double>(x(i));
    return static_cast<Scalar>(std::sqrt(std::max(
        (sum_sq - v * v) / (n - 1), 0.0L)));
  });
  return Estimate<Scalar>{value, se};
}

// Mean of squares of a residual row, with jackknife SE (equals the exact
// standard error of the mean of x^2).
template <typename Scalar, typename Row>
Estimate<Scalar> mean_square_estimate(const Row& x) {
  const Eigen::Index n = x.size();
  long double sum_sq = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double v = static_cast<long double>(x(i));
    sum_sq += v * v;
  }
  const Scalar value = static_cast<Scalar>(sum_sq / n);
  const Scalar se = jackknife_se<Scalar>(n, value, [&](Eigen::Index i) {
    const long double v = static_cast<long double>(x(i));
    return static_cast<Scalar>((sum_sq - v * v) / (n - 1));
  });
  return Estimate<Scalar>{value, se};
}

// Sample mean with its standard error.
template <typename Scalar, typename Row>
Estimate<Scalar> mean_estimate(const Row& x) {
  const Eigen::Index n = x.size();
  long double sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) sum += static_cast<long double>(x(i));
  const long double mean = sum / n;
  long double sum_c2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double c = static_cast<long double>(x(i)) - mean;
    sum_c2 += c * c;
  }
  const long double var = sum_c2 / (n - 1);
  return Estimate<Scalar>{static_cast<Scalar>(mean),
                          static_cast<Scalar>(std::sqrt(var / n))};
}

// Unbiased sample variance with jackknife SE.
template <typename Scalar, typename Row>
Estimate<Scalar> variance_estimate(const Row& x) {
  const Eigen::Index n = x.size();
  if (n < 3) throw std::invalid_argument("variance_estimate: n too small");
  long double sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) sum += static_cast<long double>(x(i));
  const long double mean = sum / n;
  long double sum_c2 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long double c = static_cast<long double>(x(i)) - mean;
    sum_c2 += c * c;
  }
  const Scalar value = static_cast<Scalar>(sum_c2 / (n - 1));
  // Leaving out sample i: residual sum of squares about the new mean is
  // sum_c2 - c_i^2 * n / (n - 1), over n - 2 degrees of freedom.
  const Scalar se = jackknife_se<Scalar>(n, value, [&](Eigen::Index i) {
    const long double c = static_cast<long double>(x(i)) - mean;
    return static_cast<Scalar>(
        std::max((sum_c2 - c * c * n / (n - 1)) / (n - 2), 0.0L));
  });
  return Estimate<Scalar>{value, se};
}

}  // namespace detail

// Monte Carlo estimates of the measurement figures from paired batches:
// rms error (readout vs input position), momentum and position disturbance,
// their mean-square counterparts, and the meter readout moments. Every
// estimate carries a jackknife standard error.
template <typename Scalar = double>
struct EmpiricalReport {
  Estimate<Scalar> epsilon_q;
  Estimate<Scalar> eta_p;
  Estimate<Scalar> eta_q;
  Estimate<Scalar> epsilon_q_sq;
  Estimate<Scalar> eta_p_sq;
  Estimate<Scalar> eta_q_sq;
  Estimate<Scalar> meter_mean;
  Estimate<Scalar> meter_variance;
  Eigen::Index n;
};

template <typename Scalar>
EmpiricalReport<Scalar> empirical_report(const PhaseSampleBatch<Scalar>& initial,
                                         const PhaseSampleBatch<Scalar>& propagated) {
  if (initial.n() != propagated.n() || initial.seed != propagated.seed)
    throw std::invalid_argument(
        "empirical_report: batches are not aligned (same draw, same order)");
  if (initial.n() < 3)
    throw std::invalid_argument("empirical_report: need at least 3 samples");
  const auto eps_res =
      (propagated.samples.row(1) - initial.samples.row(0)).eval();
  const auto eta_p_res =
      (propagated.samples.row(2) - initial.samples.row(2)).eval();
  const auto eta_q_res =
      (propagated.samples.row(0) - initial.samples.row(0)).eval();
  const auto meter = propagated.samples.row(1).eval();

  EmpiricalReport<Scalar> r{};
  r.n = initial.n();
  r.epsilon_q = detail::rms_estimate<Scalar>(eps_res);
  r.eta_p = detail::rms_estimate<Scalar>(eta_p_res);
  r.eta_q = detail::rms_estimate<Scalar>(eta_q_res);
  r.epsilon_q_sq = detail::mean_square_estimate<Scalar>(eps_res);
  r.eta_p_sq = detail::mean_square_estimate<Scalar>(eta_p_res);
  r.eta_q_sq = detail::mean_square_estimate<Scalar>(eta_q_res);
  r.meter_mean = detail::mean_estimate<Scalar>(meter);
  r.meter_variance = detail::variance_estimate<Scalar>(meter);
  return r;
}

}  // namespace lpm
