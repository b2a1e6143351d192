#include "fedsim/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace fedsim::rng {

std::uint64_t Stream::next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const int bits = std::bit_width(n - 1);
    const std::uint64_t mask = (bits >= 64) ? ~0ull : ((1ull << bits) - 1);
    for (;;) {
        std::uint64_t v = next_u64() & mask;
        if (v < n) return v;
    }
}

double Stream::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gauss_;
    }
    double u1 = next_open_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_gauss_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

double Stream::next_gamma(double alpha) {
    if (alpha < 1.0) {
        // boost: Gamma(a) = Gamma(a+1) * U^(1/a)
        double u = next_open_double();
        return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = next_gaussian();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = next_open_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace fedsim::rng
