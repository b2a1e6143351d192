#include "fedsim/selftest.hpp"
#include "fedsim/data.hpp"
#include "fedsim/fl.hpp"
#include "fedsim/hyperbolic.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/mlp.hpp"
#include "fedsim/rng.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace fedsim::selftest {

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << what;
        }
    }
};

double rel_err(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-12});
    return std::fabs(a - b) / scale;
}

BatteryResult battery_hyperbolic() {
    Check c;
    rng::Stream stream(0xFED501);
    for (int i = 0; i < 200 && c.ok; ++i) {
        const std::size_t d = 1 + stream.next_below(16);
        const double beta = 0.25 + 4.0 * stream.next_double();
        std::vector<double> z(d), z2(d);
        for (auto& v : z) v = 4.0 * stream.next_gaussian();
        for (auto& v : z2) v = 4.0 * stream.next_gaussian();

        const auto lp = hyp::lift(z, beta);
        const auto lg = hyp::lift(z2, beta);
        const double on_manifold = hyp::lorentz_inner(lp.coords, lp.coords) + beta;
        const double norm_sq = kernels::sum_sq(z.data(), z.size());
        c.expect(std::fabs(on_manifold) < 1e-9 * (1.0 + norm_sq), "on-manifold residual too large");
        c.expect(hyp::sq_lorentz_dist(lp, lg) == hyp::sq_lorentz_dist(lg, lp),
                 "distance not symmetric");
        c.expect(hyp::sq_lorentz_dist(lp, lp) < 1e-9, "self-distance nonzero");
        c.expect(hyp::regularizer(z, z2, beta, 100.0) >= 1.0, "regularizer below 1");
    }
    // analytic gradient spot checks against finite differences (norm metric)
    for (int i = 0; i < 20 && c.ok; ++i) {
        const std::size_t d = 4;
        const double beta = 1.0, sigma = 100.0;
        std::vector<double> zp(d), zg(d);
        for (auto& v : zp) v = stream.next_gaussian();
        for (auto& v : zg) v = stream.next_gaussian();
        const auto grad = hyp::regularizer_grad_wrt_zp(zp, zg, beta, sigma);
        const double eps = 1e-6;
        double err_sq = 0.0, ref_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> up = zp, down = zp;
            up[j] += eps;
            down[j] -= eps;
            const double fd = (hyp::regularizer(up, zg, beta, sigma) -
                               hyp::regularizer(down, zg, beta, sigma)) /
                              (2 * eps);
            err_sq += (grad[j] - fd) * (grad[j] - fd);
            ref_sq += fd * fd;
        }
        c.expect(std::sqrt(err_sq) <= 1e-6 * std::max(std::sqrt(ref_sq), 1e-12),
                 "regularizer gradient mismatch");
    }
    return {"hyperbolic", c.ok, c.detail.str()};
}

BatteryResult battery_gradients() {
    Check c;
    rng::Stream stream(0xFED502);
    for (int trial = 0; trial < 20 && c.ok; ++trial) {
        nn::MlpSpec spec{{2 + (int)stream.next_below(3), 2 + (int)stream.next_below(4),
                          2 + (int)stream.next_below(3)}};
        auto params = nn::init_params(spec, stream.next_u64());
        nn::Batch batch;
        batch.features = Matrix(3, spec.input_dim());
        for (auto& v : batch.features.data) v = stream.next_gaussian();
        batch.labels = {0, 1, (int)stream.next_below(spec.num_classes())};

        const auto lg = nn::loss_and_grad(params, spec, batch);
        const auto fd = nn::finite_diff_grad(
            params, [&](const nn::ParamVector& w) { return nn::loss_and_grad(w, spec, batch).loss; },
            1e-5);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            if (std::fabs(lg.grad[i]) < 1e-8 && std::fabs(fd[i]) < 1e-8) continue;
            c.expect(rel_err(lg.grad[i], fd[i]) < 1e-4, "loss gradient mismatch vs fd");
        }
    }
    return {"gradients", c.ok, c.detail.str()};
}

BatteryResult battery_aggregation() {
    Check c;
    rng::Stream stream(0xFED503);
    for (int trial = 0; trial < 500 && c.ok; ++trial) {
        const std::size_t s = 2 + stream.next_below(8);
        const std::size_t dim = 2 + stream.next_below(16);
        // updates share a common direction, like descent steps from one model
        std::vector<double> common(dim);
        for (auto& v : common) v = stream.next_gaussian();
        std::vector<fl::ClientUpdate> updates;
        for (std::size_t i = 0; i < s; ++i) {
            std::vector<double> d(dim);
            for (std::size_t j = 0; j < dim; ++j) d[j] = common[j] + 0.5 * stream.next_gaussian();
            updates.push_back(fl::ClientUpdate::from_delta(std::move(d)));
        }
        const auto van = fl::vanilla_aggregate(updates);
        const auto nor = fl::normalized_aggregate(updates);
        double norm_sum = 0.0;
        for (const auto& u : updates) norm_sum += u.norm;
        const double nor_norm = kernels::nrm2(nor.data(), nor.size());
        const double van_norm = kernels::nrm2(van.data(), van.size());
        c.expect(rel_err(nor_norm, norm_sum / (double)s) < 1e-12, "norm identity violated");
        const double cosine =
            kernels::dot(van.data(), nor.data(), dim) / (van_norm * nor_norm);
        c.expect(std::fabs(cosine - 1.0) < 1e-12, "aggregates not parallel");
        c.expect(nor_norm >= van_norm * (1.0 - 1e-12), "normalized norm below vanilla");
        const double dt = fl::compute_dt(updates);
        c.expect(dt >= 1.0 - 1e-12 && dt <= (double)s + 1e-12, "d_t out of [1, S]");
    }
    return {"aggregation", c.ok, c.detail.str()};
}

BatteryResult battery_partition() {
    Check c;
    rng::Stream stream(0xFED504);
    for (int trial = 0; trial < 200 && c.ok; ++trial) {
        const int classes = 2 + (int)stream.next_below(6);
        const int n_samples = classes * (2 + (int)stream.next_below(40));
        std::vector<int> labels(n_samples);
        for (auto& l : labels) l = (int)stream.next_below(classes);
        const int P = 1 + (int)stream.next_below(8);

        const auto shards =
            data::dirichlet_partition(labels, classes, P, 0.5, stream.next_u64());
        std::set<std::uint32_t> seen;
        std::size_t total = 0;
        for (const auto& s : shards) {
            total += s.indices.size();
            seen.insert(s.indices.begin(), s.indices.end());
        }
        c.expect(total == labels.size() && seen.size() == labels.size(),
                 "dirichlet shards not a partition");
    }
    // pathological: exactly n distinct labels per shard
    std::vector<int> labels(400);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = (int)(i % 8);
    for (int n = 1; n <= 8 && c.ok; ++n) {
        const auto shards = data::pathological_partition(labels, 8, 10, n, 99);
        for (const auto& s : shards) {
            std::set<int> distinct;
            for (auto idx : s.indices) distinct.insert(labels[idx]);
            c.expect((int)distinct.size() == n, "pathological distinct-label count wrong");
        }
    }
    return {"partition", c.ok, c.detail.str()};
}

BatteryResult battery_rng() {
    Check c;
    rng::Stream a = rng::derive_stream(7, 3, 5);
    rng::Stream b = rng::derive_stream(7, 3, 5);
    for (int i = 0; i < 100; ++i)
        c.expect(a.next_u64() == b.next_u64(), "equal triples disagree");
    rng::Stream d = rng::derive_stream(7, 3, 6);
    c.expect(rng::derive_stream(7, 3, 5).next_u64() != d.next_u64(),
             "distinct triples collide immediately");
    rng::Stream u(0xFED505);
    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += u.next_double();
    mean /= n;
    c.expect(std::fabs(mean - 0.5) < 0.01, "uniform mean off");
    return {"rng", c.ok, c.detail.str()};
}

} // namespace

std::vector<BatteryResult> run_all() {
    return {battery_hyperbolic(), battery_gradients(), battery_aggregation(),
            battery_partition(), battery_rng()};
}

} // namespace fedsim::selftest
