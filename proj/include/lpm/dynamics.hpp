#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lpm/gaussian.hpp"

namespace lpm {

// |discriminant| * tau^2 at or below this uses the joint power series for
// the transfer-matrix entries, avoiding the removable singularity where the
// oscillatory and hyperbolic branches meet.
inline constexpr double kSeriesBranchThreshold = 1e-6;

// Coupling constants (alpha, beta, gamma) of the bilinear interaction
//   K [ alpha Q1 P2 + beta P1 Q2 + gamma (Q1 P1 - Q2 P2) ],  K = 1.
// The induced linear flow on (Q1, Q2) has generator
//   S = [ gamma  beta ]
//       [ alpha -gamma ]
// whose discriminant D = det S = -(gamma^2 + alpha beta) selects between
// oscillatory (D > 0), parabolic (D = 0) and hyperbolic (D < 0) dynamics.
template <typename Scalar = double>
struct InteractionParams {
  Scalar alpha;
  Scalar beta;
  Scalar gamma;

  InteractionParams(Scalar alpha_in, Scalar beta_in, Scalar gamma_in)
      : alpha(alpha_in), beta(beta_in), gamma(gamma_in) {
    detail::require_finite(alpha, "alpha");
    detail::require_finite(beta, "beta");
    detail::require_finite(gamma, "gamma");
  }

  Scalar discriminant() const { return -(gamma * gamma + alpha * beta); }
};

// Generator matrix S of the position flow.
template <typename Scalar>
Mat2<Scalar> interaction_matrix(const InteractionParams<Scalar>& p) {
  Mat2<Scalar> s;
  s << p.gamma, p.beta, p.alpha, -p.gamma;
  return s;
}

// Entries (a b; c d) of exp(tau S): the Heisenberg-picture position map
//   Q1(tau) = a Q1 + b Q2,   Q2(tau) = c Q1 + d Q2.
// det = a d - b c = 1 always (S is traceless); construction enforces it.
template <typename Scalar = double>
struct TransferMatrix {
  Scalar a;
  Scalar b;
  Scalar c;
  Scalar d;

  TransferMatrix(Scalar a_in, Scalar b_in, Scalar c_in, Scalar d_in)
      : a(a_in), b(b_in), c(c_in), d(d_in) {
    detail::require_finite(a, "a");
    detail::require_finite(b, "b");
    detail::require_finite(c, "c");
    detail::require_finite(d, "d");
    const Scalar scale =
        std::max(Scalar(1), std::max(std::abs(a * d), std::abs(b * c)));
    if (std::abs(a * d - b * c - 1) > Scalar(1e-10) * scale)
      throw std::invalid_argument("transfer matrix must have determinant 1");
  }

  Mat2<Scalar> matrix() const {
    Mat2<Scalar> m;
    m << a, b, c, d;
    return m;
  }
};

// Closed-form exp(tau S) for the interaction generator. With
// w = sqrt(|D|) tau the entries are cos/sin for D > 0, cosh/sinh for D < 0
// and polynomial for D = 0; near the seam (|D| tau^2 <= 1e-6) both branches
// are replaced by one power series in x = D tau^2, which is valid for either
// sign and removes the 0/0 at the boundary.
template <typename Scalar>
TransferMatrix<Scalar> transfer_matrix(const InteractionParams<Scalar>& p,
                                       Scalar tau) {
  detail::require_finite(tau, "tau");
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  const Scalar d = p.discriminant();
  const Scalar x = d * tau * tau;
  Scalar cos_like;   // cos(tau sqrt(D)) resp. cosh(tau sqrt(-D))
  Scalar sinc_like;  // sin(tau sqrt(D)) / (tau sqrt(D)) resp. sinh analogue
  if (std::abs(x) > Scalar(kSeriesBranchThreshold)) {
    if (d > 0) {
      const Scalar w = std::sqrt(d) * tau;
      cos_like = std::cos(w);
      sinc_like = std::sin(w) / w;
    } else {
      // cosh(w) -+ r sinh(w) cancels badly for r near +-1 and large w, so
      // build the diagonal from e^{+-w} with exact (1 -+ r) weights instead.
      const Scalar root = std::sqrt(-d);
      const Scalar w = root * tau;
      const Scalar r = p.gamma / root;
      const Scalar ep = std::exp(w);
      const Scalar em = std::exp(-w);
      const Scalar s = tau * (std::sinh(w) / w);
      return TransferMatrix<Scalar>(((1 + r) * ep + (1 - r) * em) / 2,
                                    s * p.beta, s * p.alpha,
                                    ((1 - r) * ep + (1 + r) * em) / 2);
    }
  } else {
    // cos-like = sum (-x)^k / (2k)!, sinc-like = sum (-x)^k / (2k+1)!;
    // five terms leave truncation error far below machine epsilon here.
    cos_like =
        1 + x * (Scalar(-0.5) +
                 x * (Scalar(1.0 / 24) +
                      x * (Scalar(-1.0 / 720) + x * Scalar(1.0 / 40320))));
    sinc_like =
        1 + x * (Scalar(-1.0 / 6) +
                 x * (Scalar(1.0 / 120) +
                      x * (Scalar(-1.0 / 5040) + x * Scalar(1.0 / 362880))));
  }
  const Scalar s = tau * sinc_like;  // sin(tau sqrt(D)) / sqrt(D)
  return TransferMatrix<Scalar>(cos_like + s * p.gamma, s * p.beta, s * p.alpha,
                                cos_like - s * p.gamma);
}

// Momentum-sector map exp(-tau S^T) written in terms of the position map:
//   P1(tau) = d P1 - c P2,   P2(tau) = -b P1 + a P2.
// (For a unimodular matrix the inverse transpose is the adjugate transpose.)
template <typename Scalar>
Mat2<Scalar> momentum_transfer(const TransferMatrix<Scalar>& t) {
  Mat2<Scalar> m;
  m << t.d, -t.c, -t.b, t.a;
  return m;
}

// Taylor-series exp(tau M) with scaling and squaring, for arbitrary 2x2 M.
// Deliberately formula-free: serves as an independent cross-check of the
// closed-form transfer_matrix branches.
template <typename Scalar>
Mat2<Scalar> expm_series(const Mat2<Scalar>& m, Scalar tau) {
  detail::require_finite(tau, "tau");
  if (!m.allFinite()) throw std::invalid_argument("matrix must be finite");
  Mat2<Scalar> a = tau * m;
  int squarings = 0;
  const Scalar norm = a.norm();
  if (norm > Scalar(0.5)) {
    squarings = static_cast<int>(
        std::ceil(std::log2(static_cast<double>(norm) / 0.5)));
    a /= std::pow(Scalar(2), Scalar(squarings));
  }
  Mat2<Scalar> term = Mat2<Scalar>::Identity();
  Mat2<Scalar> sum = Mat2<Scalar>::Identity();
  for (int k = 1; k <= 40; ++k) {
    term = (term * a) / Scalar(k);
    sum += term;
    if (term.norm() <= Scalar(1e-20) * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace lpm
