#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedsim/errors.hpp"
#include "fedsim/hyperbolic.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/rng.hpp"

#include <cmath>
#include <vector>

using namespace fedsim;

TEST_CASE("lorentz_inner: hand values") {
    CHECK(hyp::lorentz_inner(std::vector{1.0, 0.0}, std::vector{1.0, 0.0}) == -1.0);
    CHECK(hyp::lorentz_inner(std::vector{1.0, 0.0, 0.0}, std::vector{0.0, 1.0, 0.0}) == 0.0);
    CHECK(hyp::lorentz_inner(std::vector{2.0, 1.0}, std::vector{3.0, 2.0}) == -4.0);
    CHECK_THROWS_AS(hyp::lorentz_inner(std::vector{1.0, 0.0}, std::vector{1.0, 0.0, 0.0}),
                    ConfigError);
}

TEST_CASE("lift: origin and hand value") {
    const auto origin = hyp::lift(std::vector{0.0, 0.0, 0.0}, 1.0);
    CHECK(origin.coords[0] == 1.0);
    for (std::size_t i = 1; i < origin.coords.size(); ++i) CHECK(origin.coords[i] == 0.0);

    const auto p = hyp::lift(std::vector{3.0, 4.0}, 1.0);
    CHECK(p.coords[0] == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));
    CHECK(p.coords[0] == doctest::Approx(5.09902).epsilon(1e-5));
    CHECK(p.coords[1] == 3.0);
    CHECK(p.coords[2] == 4.0);

    CHECK_THROWS_AS(hyp::lift(std::vector{1.0}, 0.0), ConfigError);
    CHECK_THROWS_AS(hyp::lift(std::vector{std::nan("")}, 1.0), ConfigError);
}

TEST_CASE("lift lands on the manifold for random inputs") {
    rng::Stream stream(0x10);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 1 + stream.next_below(32);
        const double beta = 0.1 + 5.0 * stream.next_double();
        std::vector<double> z(d);
        for (auto& v : z) v = 10.0 * stream.next_gaussian();
        const auto p = hyp::lift(z, beta);
        const double residual = hyp::lorentz_inner(p.coords, p.coords) + beta;
        const double norm_sq = kernels::sum_sq(z.data(), z.size());
        CHECK(std::fabs(residual) < 1e-9 * (1.0 + norm_sq));
        CHECK(p.coords[0] >= std::sqrt(beta));
    }
}

TEST_CASE("sq_lorentz_dist: identity, hand value, symmetry, nonnegativity") {
    const auto a = hyp::lift(std::vector{0.7, -0.3}, 1.0);
    CHECK(hyp::sq_lorentz_dist(a, a) < 1e-9);

    // Lp=(1,0), Lg=(sqrt_2,1): dist = 2*sqrt_2 - 2
    const auto lp = hyp::lift(std::vector{0.0}, 1.0);
    const auto lg = hyp::lift(std::vector{1.0}, 1.0);
    CHECK(lg.coords[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(hyp::sq_lorentz_dist(lp, lg) ==
          doctest::Approx(2.0 * std::sqrt(2.0) - 2.0).epsilon(1e-12));
    CHECK(hyp::sq_lorentz_dist(lp, lg) == doctest::Approx(0.828427).epsilon(1e-5));

    rng::Stream stream(0x11);
    for (int trial = 0; trial < 200; ++trial) {
        const double beta = 0.2 + 3.0 * stream.next_double();
        std::vector<double> z1(4), z2(4);
        for (auto& v : z1) v = 3.0 * stream.next_gaussian();
        for (auto& v : z2) v = 3.0 * stream.next_gaussian();
        const auto p1 = hyp::lift(z1, beta);
        const auto p2 = hyp::lift(z2, beta);
        CHECK(hyp::sq_lorentz_dist(p1, p2) == hyp::sq_lorentz_dist(p2, p1)); // exact
        CHECK(hyp::sq_lorentz_dist(p1, p2) >= 0.0);
    }

    auto mismatched = hyp::lift(std::vector{1.0}, 2.0);
    CHECK_THROWS_AS(hyp::sq_lorentz_dist(lp, mismatched), ConfigError);
}

TEST_CASE("regularizer: coincidence, hand value, monotone in separation") {
    const std::vector<double> z{0.4, -1.2, 0.0};
    CHECK(hyp::regularizer(z, z, 1.0, 100.0) == 1.0);

    // lift(1) = (sqrt_2, 1) against the origin at sigma = 10000
    const double expected = std::exp((2.0 * std::sqrt(2.0) - 2.0) / 10000.0);
    CHECK(hyp::regularizer(std::vector{1.0}, std::vector{0.0}, 1.0, 10000.0) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(1.0000828).epsilon(1e-6));

    // brute-force grid: scaling zp away from zg never decreases R
    const std::vector<double> direction{0.6, -0.8};
    double previous = 0.0;
    for (int step = 0; step <= 10; ++step) {
        const double t = 0.5 * step;
        const std::vector<double> zp{t * direction[0], t * direction[1]};
        const double r = hyp::regularizer(zp, std::vector{0.0, 0.0}, 1.0, 50.0);
        CHECK(r >= 1.0);
        if (step > 0) CHECK(r >= previous);
        previous = r;
    }

    CHECK_THROWS_AS(hyp::regularizer(z, z, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(hyp::regularizer(z, z, -1.0, 1.0), ConfigError);
}

TEST_CASE("regularizer gradient: stationary at coincidence at the origin") {
    const std::vector<double> zero{0.0, 0.0, 0.0};
    for (double v : hyp::regularizer_grad_wrt_zp(zero, zero, 1.0, 100.0)) CHECK(v == 0.0);
}

TEST_CASE("regularizer gradient matches central differences") {
    // vector-norm relative error: per-coordinate comparison at eps=1e-6
    // sits below the fp round-off floor of the difference quotient
    rng::Stream stream(0x12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = (trial % 3 == 0) ? 2 : (trial % 3 == 1) ? 8 : 32;
        const double beta = 1.0;
        const double sigma = (trial % 2 == 0) ? 100.0 : 10000.0;
        std::vector<double> zp(d), zg(d);
        for (auto& v : zp) v = stream.next_gaussian();
        for (auto& v : zg) v = stream.next_gaussian();

        const auto grad = hyp::regularizer_grad_wrt_zp(zp, zg, beta, sigma);
        const double eps = 1e-6;
        double err_sq = 0.0, grad_sq = 0.0, fd_sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            auto up = zp, down = zp;
            up[i] += eps;
            down[i] -= eps;
            const double fd =
                (hyp::regularizer(up, zg, beta, sigma) - hyp::regularizer(down, zg, beta, sigma)) /
                (2.0 * eps);
            err_sq += (grad[i] - fd) * (grad[i] - fd);
            grad_sq += grad[i] * grad[i];
            fd_sq += fd * fd;
        }
        const double scale = std::max({std::sqrt(grad_sq), std::sqrt(fd_sq), 1e-12});
        CHECK(std::sqrt(err_sq) / scale < 1e-6);
    }
}

TEST_CASE("regularizer gradient points away from the global point") {
    // zg = 0, zp = (t, 0): gradient along +zp for t > 0
    for (double t : {0.5, 1.0, 3.0}) {
        const std::vector<double> zp{t, 0.0};
        const auto grad = hyp::regularizer_grad_wrt_zp(zp, std::vector{0.0, 0.0}, 1.0, 100.0);
        CHECK(grad[0] > 0.0);
        CHECK(std::fabs(grad[1]) < 1e-15);

        // finite-difference sign confirmation
        const double eps = 1e-6;
        const double fd = (hyp::regularizer(std::vector{t + eps, 0.0}, std::vector{0.0, 0.0}, 1.0,
                                            100.0) -
                           hyp::regularizer(std::vector{t - eps, 0.0}, std::vector{0.0, 0.0}, 1.0,
                                            100.0)) /
                          (2.0 * eps);
        CHECK(fd > 0.0);
    }
}

TEST_CASE("batch regularizer is the mean of per-sample values") {
    rng::Stream stream(0x13);
    Matrix zp(4, 3), zg(4, 3);
    for (auto& v : zp.data) v = stream.next_gaussian();
    for (auto& v : zg.data) v = stream.next_gaussian();

    double manual = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
        manual += hyp::regularizer({zp.row(r), 3}, {zg.row(r), 3}, 1.0, 100.0);
    manual /= 4.0;
    CHECK(hyp::regularizer_batch(zp, zg, 1.0, 100.0) == doctest::Approx(manual).epsilon(1e-15));

    // batch gradient = per-sample gradient / B
    const auto grad = hyp::regularizer_batch_grad(zp, zg, 1.0, 100.0);
    const auto row0 = hyp::regularizer_grad_wrt_zp({zp.row(0), 3}, {zg.row(0), 3}, 1.0, 100.0);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(grad(0, j) == doctest::Approx(row0[j] / 4.0).epsilon(1e-15));
}

TEST_CASE("R equals 1 only at coincidence") {
    rng::Stream stream(0x14);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> zp(3), zg(3);
        for (auto& v : zp) v = stream.next_gaussian();
        for (auto& v : zg) v = stream.next_gaussian();
        const double r = hyp::regularizer(zp, zg, 1.0, 10.0);
        CHECK(r >= 1.0);
        if (r == 1.0) {
            const double dist = hyp::sq_lorentz_dist(hyp::lift(zp, 1.0), hyp::lift(zg, 1.0));
            CHECK(dist < 1e-9);
        }
    }
}
