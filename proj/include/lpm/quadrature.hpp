#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace lpm {

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (classical QUADPACK
// constants). The embedded 7-point Gauss rule provides the error estimate.
inline constexpr double kGk15Nodes[8] = {
    0.99145537112081263920685469752633,
    0.94910791234275852452618968404785,
    0.86486442335976907278971278864093,
    0.74153118559939443986386477328079,
    0.58608723546769113029414483825873,
    0.40584515137739716690660641207696,
    0.20778495500789846760068940377324,
    0.0};

inline constexpr double kGk15Weights[8] = {
    0.02293532201052922496373200805897,
    0.06309209262997855329070066318920,
    0.10479001032225018383987632254152,
    0.14065325971552591874518959051024,
    0.16900472663926790282658342659855,
    0.19035057806478540991325640242101,
    0.20443294007529889241416199923465,
    0.20948214108472782801299917489171};

inline constexpr double kGauss7Weights[4] = {
    0.12948496616886969327061143267908,
    0.27970539148927666790146777142378,
    0.38183005050511894495036977548898,
    0.41795918367346938775510204081633};

template <typename Scalar, typename F>
std::pair<Scalar, Scalar> gk15_segment(F& f, Scalar lo, Scalar hi) {
  const Scalar half = (hi - lo) / 2;
  const Scalar mid = (lo + hi) / 2;
  const Scalar f_mid = f(mid);
  Scalar kronrod = Scalar(kGk15Weights[7]) * f_mid;
  Scalar gauss = Scalar(kGauss7Weights[3]) * f_mid;
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kGk15Nodes[j]);
    const Scalar f_sum = f(mid - dx) + f(mid + dx);
    kronrod += Scalar(kGk15Weights[j]) * f_sum;
    if (j % 2 == 1) gauss += Scalar(kGauss7Weights[j / 2]) * f_sum;
  }
  kronrod *= half;
  gauss *= half;
  return {kronrod, std::abs(kronrod - gauss)};
}

template <typename Scalar, typename F>
Scalar adapt(F& f, Scalar lo, Scalar hi, Scalar abs_tol, int depth,
             int max_depth) {
  const auto [value, error] = gk15_segment(f, lo, hi);
  if (error <= abs_tol || depth >= max_depth) return value;
  const Scalar mid = (lo + hi) / 2;
  return adapt(f, lo, mid, abs_tol / 2, depth + 1, max_depth) +
         adapt(f, mid, hi, abs_tol / 2, depth + 1, max_depth);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over the finite interval [lo, hi]
// to the requested absolute tolerance. Bisects until the embedded-rule error
// estimate drops below the (halved per split) tolerance budget.
template <typename Scalar, typename F>
Scalar integrate(F&& f, Scalar lo, Scalar hi, Scalar abs_tol = Scalar(1e-10),
                 int max_depth = 28) {
  if (!(std::isfinite(lo) && std::isfinite(hi)))
    throw std::invalid_argument("integrate: bounds must be finite");
  if (lo > hi) throw std::invalid_argument("integrate: lo > hi");
  if (lo == hi) return Scalar(0);
  if (!(abs_tol > 0)) throw std::invalid_argument("integrate: abs_tol <= 0");
  return detail::adapt(f, lo, hi, abs_tol, 0, max_depth);
}

}  // namespace lpm
