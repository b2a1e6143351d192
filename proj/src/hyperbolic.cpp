#include "fedsim/hyperbolic.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"

#include <cmath>
#include <string>

namespace fedsim::hyp {

namespace ker = fedsim::kernels;

namespace {

void check_pos(double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
}

} // namespace

double lorentz_inner(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("lorentz_inner: dimension mismatch");
    if (x.size() < 2) throw ConfigError("lorentz_inner: needs dimension >= 2");
    return -x[0] * y[0] + ker::dot(x.data() + 1, y.data() + 1, x.size() - 1);
}

LorentzPoint lift(std::span<const double> z, double beta) {
    check_pos(beta, "beta");
    const double norm_sq = ker::sum_sq(z.data(), z.size());
    if (!std::isfinite(norm_sq)) throw ConfigError("lift: non-finite input");
    LorentzPoint p;
    p.beta = beta;
    p.coords.resize(z.size() + 1);
    p.coords[0] = std::sqrt(beta + norm_sq);
    std::copy(z.begin(), z.end(), p.coords.begin() + 1);
    return p;
}

double sq_lorentz_dist(const LorentzPoint& lp, const LorentzPoint& lg) {
    if (lp.beta != lg.beta) throw ConfigError("sq_lorentz_dist: beta mismatch");
    if (lp.coords.size() != lg.coords.size())
        throw ConfigError("sq_lorentz_dist: dimension mismatch");
    const double d = -2.0 * lp.beta - 2.0 * lorentz_inner(lp.coords, lg.coords);
    return d > 0.0 ? d : 0.0;
}

double regularizer(std::span<const double> zp, std::span<const double> zg,
                   double beta, double sigma) {
    check_pos(sigma, "sigma");
    return std::exp(sq_lorentz_dist(lift(zp, beta), lift(zg, beta)) / sigma);
}

std::vector<double> regularizer_grad_wrt_zp(std::span<const double> zp,
                                            std::span<const double> zg,
                                            double beta, double sigma) {
    check_pos(beta, "beta");
    check_pos(sigma, "sigma");
    if (zp.size() != zg.size()) throw ConfigError("regularizer_grad: dimension mismatch");

    const double sp = std::sqrt(beta + ker::sum_sq(zp.data(), zp.size()));
    const double sg = std::sqrt(beta + ker::sum_sq(zg.data(), zg.size()));
    const double inner = -sp * sg + ker::dot(zp.data(), zg.data(), zp.size());
    double dist = -2.0 * beta - 2.0 * inner;
    if (dist < 0.0) dist = 0.0;
    const double r = std::exp(dist / sigma);

    // dD/dzp = 2*(sg/sp)*zp - 2*zg, chained through exp(D/sigma); grouped so
    // coincident zp == zg cancels exactly (sg/sp == 1, zp - zg == 0)
    std::vector<double> grad(zp.size());
    const double ratio = sg / sp;
    const double coef = 2.0 * r / sigma;
    for (std::size_t i = 0; i < zp.size(); ++i) grad[i] = coef * (ratio * zp[i] - zg[i]);
    return grad;
}

double regularizer_batch(const Matrix& zp, const Matrix& zg, double beta, double sigma) {
    if (zp.rows != zg.rows || zp.cols != zg.cols)
        throw ConfigError("regularizer_batch: shape mismatch");
    if (zp.rows == 0) throw ConfigError("regularizer_batch: empty batch");
    double total = 0.0;
    for (std::size_t r = 0; r < zp.rows; ++r)
        total += regularizer({zp.row(r), zp.cols}, {zg.row(r), zg.cols}, beta, sigma);
    return total / static_cast<double>(zp.rows);
}

Matrix regularizer_batch_grad(const Matrix& zp, const Matrix& zg, double beta, double sigma) {
    if (zp.rows != zg.rows || zp.cols != zg.cols)
        throw ConfigError("regularizer_batch_grad: shape mismatch");
    if (zp.rows == 0) throw ConfigError("regularizer_batch_grad: empty batch");
    Matrix grad(zp.rows, zp.cols);
    const double inv_b = 1.0 / static_cast<double>(zp.rows);
    for (std::size_t r = 0; r < zp.rows; ++r) {
        auto g = regularizer_grad_wrt_zp({zp.row(r), zp.cols}, {zg.row(r), zg.cols}, beta, sigma);
        ker::scale(inv_b, g.data(), grad.row(r), g.size());
    }
    return grad;
}

} // namespace fedsim::hyp
