#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lpm/normal_stream.hpp"

namespace lpm {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

// Physical constants entering the uncertainty bounds. hbar = 1 by default;
// every bound in the library scales with it.
template <typename Scalar = double>
struct Constants {
  Scalar hbar = Scalar(1);
};

namespace detail {

template <typename Scalar>
void require_finite(Scalar x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace detail

// Gaussian pure state of one particle with uncorrelated position and
// momentum marginals: mean (mean_q, mean_p), spreads (sigma_q, sigma_p).
// Construction enforces sigma_q > 0, sigma_p > 0 and the uncertainty bound
// sigma_q * sigma_p >= hbar / 2, so every instance is a physical state.
template <typename Scalar = double>
struct GaussianState {
  Scalar mean_q;
  Scalar mean_p;
  Scalar sigma_q;
  Scalar sigma_p;

  GaussianState(Scalar mean_q_in, Scalar mean_p_in, Scalar sigma_q_in,
                Scalar sigma_p_in, const Constants<Scalar>& consts = {})
      : mean_q(mean_q_in),
        mean_p(mean_p_in),
        sigma_q(sigma_q_in),
        sigma_p(sigma_p_in) {
    detail::require_finite(mean_q, "mean_q");
    detail::require_finite(mean_p, "mean_p");
    detail::require_finite(sigma_q, "sigma_q");
    detail::require_finite(sigma_p, "sigma_p");
    if (!(sigma_q > 0)) throw std::invalid_argument("sigma_q must be positive");
    if (!(sigma_p > 0)) throw std::invalid_argument("sigma_p must be positive");
    // Tiny slack absorbs roundoff when sigma_p is computed as hbar/(2 sigma_q).
    const Scalar bound = consts.hbar / 2;
    if (sigma_q * sigma_p < bound * (1 - Scalar(1e-12)))
      throw std::invalid_argument("sigma_q * sigma_p below hbar / 2");
  }

  // State with the smallest momentum spread allowed at the given sigma_q.
  static GaussianState minimum_uncertainty(Scalar mean_q, Scalar mean_p,
                                           Scalar sigma_q,
                                           const Constants<Scalar>& consts = {}) {
    if (!(std::isfinite(sigma_q) && sigma_q > 0))
      throw std::invalid_argument("sigma_q must be positive and finite");
    return GaussianState(mean_q, mean_p, sigma_q, consts.hbar / (2 * sigma_q),
                         consts);
  }
};

// True when sigma_q * sigma_p equals hbar / 2 within the relative tolerance.
template <typename Scalar>
bool is_minimum_uncertainty(const GaussianState<Scalar>& state,
                            const Constants<Scalar>& consts = {},
                            Scalar rel_tol = Scalar(1e-9)) {
  const Scalar bound = consts.hbar / 2;
  return std::abs(state.sigma_q * state.sigma_p - bound) <= rel_tol * bound;
}

// One-dimensional Gaussian law. variance = 0 (a point mass) is allowed as a
// value; operations that need a density reject it.
template <typename Scalar = double>
struct Gaussian1D {
  Scalar mean;
  Scalar variance;

  Gaussian1D(Scalar mean_in, Scalar variance_in)
      : mean(mean_in), variance(variance_in) {
    detail::require_finite(mean, "mean");
    detail::require_finite(variance, "variance");
    if (variance < 0) throw std::invalid_argument("variance must be >= 0");
  }
};

// Two-dimensional Gaussian law with a symmetric positive-semidefinite
// covariance. Construction symmetrizes, rejects covariances with an
// eigenvalue below -1e-12 * trace, and clamps remaining tiny negative
// eigenvalues to zero. Reconstructing from the eigenbasis rounds, so the
// stored matrix is PSD only up to machine precision; consumers that need
// a nonnegative spectrum (sampling) re-clamp at the point of use.
template <typename Scalar = double>
class Gaussian2D {
 public:
  Gaussian2D(const Vec2<Scalar>& mean, const Mat2<Scalar>& cov) : mean_(mean) {
    if (!mean.allFinite() || !cov.allFinite())
      throw std::invalid_argument("mean and covariance must be finite");
    const Scalar scale = cov.cwiseAbs().maxCoeff();
    if (std::abs(cov(0, 1) - cov(1, 0)) > Scalar(1e-9) * (scale + Scalar(1)))
      throw std::invalid_argument("covariance must be symmetric");
    cov_ = (cov + cov.transpose()) / 2;
    Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> es;
    es.computeDirect(cov_);
    const Vec2<Scalar> eig = es.eigenvalues();
    const Scalar tol = Scalar(1e-12) * std::max(cov_.trace(), Scalar(0));
    if (eig(0) < -tol)
      throw std::invalid_argument("covariance is not positive semidefinite");
    if (eig(0) < 0) {
      const Vec2<Scalar> clamped = eig.cwiseMax(Scalar(0));
      cov_ = es.eigenvectors() * clamped.asDiagonal() *
             es.eigenvectors().transpose();
      cov_ = (cov_ + cov_.transpose()) / 2;
    }
  }

  const Vec2<Scalar>& mean() const { return mean_; }
  const Mat2<Scalar>& cov() const { return cov_; }

 private:
  Vec2<Scalar> mean_;
  Mat2<Scalar> cov_;
};

// Density of a one-dimensional Gaussian. Rejects point masses.
template <typename Scalar>
Scalar pdf(const Gaussian1D<Scalar>& g, Scalar x) {
  if (!(g.variance > 0))
    throw std::domain_error("pdf: point mass has no density");
  const Scalar d = x - g.mean;
  return std::exp(-d * d / (2 * g.variance)) /
         std::sqrt(2 * std::numbers::pi_v<Scalar> * g.variance);
}

// Density of a two-dimensional Gaussian. Rejects degenerate covariances.
template <typename Scalar>
Scalar pdf(const Gaussian2D<Scalar>& g, const Vec2<Scalar>& x) {
  const Mat2<Scalar>& v = g.cov();
  const Scalar det = v.determinant();
  if (!(det > 0))
    throw std::domain_error("pdf: degenerate covariance has no density");
  const Vec2<Scalar> r = x - g.mean();
  const Scalar quad =
      (r(0) * r(0) * v(1, 1) - 2 * r(0) * r(1) * v(0, 1) + r(1) * r(1) * v(0, 0)) /
      det;
  return std::exp(-quad / 2) /
         (2 * std::numbers::pi_v<Scalar> * std::sqrt(det));
}

template <typename Scalar>
Scalar pdf(const Gaussian2D<Scalar>& g, Scalar x, Scalar y) {
  return pdf(g, Vec2<Scalar>(x, y));
}

// Characteristic function E[exp(i k . X)] of a two-dimensional Gaussian.
template <typename Scalar>
std::complex<Scalar> characteristic_function(const Gaussian2D<Scalar>& g,
                                             const Vec2<Scalar>& k) {
  if (!k.allFinite()) throw std::invalid_argument("k must be finite");
  const Scalar phase = g.mean().dot(k);
  const Scalar quad = k.dot(g.cov() * k);
  return std::exp(std::complex<Scalar>(-quad / 2, phase));
}

// Standard normal CDF.
template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  return std::erfc(-x / std::numbers::sqrt2_v<Scalar>) / 2;
}

// Probability mass of a one-dimensional Gaussian on [lo, hi]; bounds may be
// infinite. Uses erfc so far tails keep full relative accuracy.
template <typename Scalar>
Scalar mass(const Gaussian1D<Scalar>& g, Scalar lo, Scalar hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("mass: invalid interval");
  if (!(g.variance > 0))
    throw std::domain_error("mass: point mass not supported");
  const Scalar sd = std::sqrt(g.variance);
  const Scalar zlo = (lo - g.mean) / (sd * std::numbers::sqrt2_v<Scalar>);
  const Scalar zhi = (hi - g.mean) / (sd * std::numbers::sqrt2_v<Scalar>);
  const Scalar m = (std::erfc(zlo) - std::erfc(zhi)) / 2;
  return std::min(std::max(m, Scalar(0)), Scalar(1));
}

// i.i.d. samples from a two-dimensional Gaussian, one column per draw.
// The PSD square root comes from the eigendecomposition, so singular
// covariances sample correctly on their support.
template <typename Scalar>
Mat2X<Scalar> sample(const Gaussian2D<Scalar>& g, Eigen::Index n,
                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> es;
  es.computeDirect(g.cov());
  const Mat2<Scalar> root =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
  NormalStream<Scalar> normals(seed);
  Mat2X<Scalar> z(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z(0, i) = normals();
    z(1, i) = normals();
  }
  return (root * z).colwise() + g.mean();
}

// Root mean square of the difference of the two coordinates,
// sqrt(E[(X1 - X2)^2]): the Gaussian distance between the marginals under
// the given coupling.
template <typename Scalar>
Scalar gauss_rms(const Gaussian2D<Scalar>& g) {
  const Scalar mean_diff = g.mean()(0) - g.mean()(1);
  const Scalar second = g.cov()(0, 0) + g.cov()(1, 1) - 2 * g.cov()(0, 1) +
                        mean_diff * mean_diff;
  return std::sqrt(std::max(second, Scalar(0)));
}

// Marginal law of the first coordinate.
template <typename Scalar>
Gaussian1D<Scalar> marginal_first(const Gaussian2D<Scalar>& g) {
  return Gaussian1D<Scalar>(g.mean()(0), g.cov()(0, 0));
}

// Marginal law of the second coordinate.
template <typename Scalar>
Gaussian1D<Scalar> marginal_second(const Gaussian2D<Scalar>& g) {
  return Gaussian1D<Scalar>(g.mean()(1), g.cov()(1, 1));
}

// Conditional law of the first coordinate given that the second equals y.
// Requires the second marginal to be non-degenerate.
template <typename Scalar>
Gaussian1D<Scalar> condition_on_second(const Gaussian2D<Scalar>& g, Scalar y) {
  detail::require_finite(y, "y");
  const Mat2<Scalar>& v = g.cov();
  if (!(v(1, 1) > 0))
    throw std::domain_error("condition_on_second: second marginal degenerate");
  const Scalar mean = g.mean()(0) + v(0, 1) / v(1, 1) * (y - g.mean()(1));
  const Scalar variance =
      std::max(v(0, 0) - v(0, 1) * v(0, 1) / v(1, 1), Scalar(0));
  return Gaussian1D<Scalar>(mean, variance);
}

}  // namespace lpm
