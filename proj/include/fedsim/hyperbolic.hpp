#pragma once
#include "fedsim/matrix.hpp"

#include <span>
#include <vector>

namespace fedsim::hyp {

// Lorentz-model hyperbolic geometry on the upper hyperboloid sheet
// { x : <x,x>_L = -beta, x0 > 0 } of curvature parameter beta > 0.
struct LorentzPoint {
    std::vector<double> coords; // time-like coordinate first, then d spatial
    double beta;
};

// Signature (-,+,...,+) bilinear form: -x0*y0 + sum_i xi*yi.
double lorentz_inner(std::span<const double> x, std::span<const double> y);

// Canonical embedding z -> (sqrt(beta + |z|^2), z); satisfies
// lorentz_inner(L, L) = -beta identically.
LorentzPoint lift(std::span<const double> z, double beta);

// Squared Lorentzian distance -2*beta - 2*<Lp,Lg>_L, clamped below at 0
// (negative values only arise from rounding).
double sq_lorentz_dist(const LorentzPoint& lp, const LorentzPoint& lg);

// exp(sq_lorentz_dist(lift(zp), lift(zg)) / sigma) >= 1.
double regularizer(std::span<const double> zp, std::span<const double> zg,
                   double beta, double sigma);

// Analytic d(regularizer)/d(zp), zg treated as a constant:
// (R/sigma) * (2*sg*zp/sp - 2*zg) with sp, sg the lifted time coordinates.
std::vector<double> regularizer_grad_wrt_zp(std::span<const double> zp,
                                            std::span<const double> zg,
                                            double beta, double sigma);

// Batch forms: rows are per-sample representations; the batch regularizer
// is the mean of the per-sample values, and the batch gradient carries the
// 1/B factor so it is exactly d(batch regularizer)/d(zp).
double regularizer_batch(const Matrix& zp, const Matrix& zg, double beta, double sigma);
Matrix regularizer_batch_grad(const Matrix& zp, const Matrix& zg, double beta, double sigma);

} // namespace fedsim::hyp
