#include "fedsim/mlp.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fedsim::nn {

namespace ker = fedsim::kernels;

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2)
        throw ConfigError("model: layer_sizes needs at least [input, classes]");
    for (int s : layer_sizes)
        if (s < 1) throw ConfigError("model: layer sizes must be >= 1");
}

std::vector<MlpSpec::LayerShape> MlpSpec::layout() const {
    std::vector<LayerShape> shapes;
    std::size_t off = 0;
    for (int l = 0; l < num_layers(); ++l) {
        LayerShape s;
        s.in = layer_sizes[l];
        s.out = layer_sizes[l + 1];
        s.w_offset = off;
        off += static_cast<std::size_t>(s.in) * s.out;
        s.b_offset = off;
        off += s.out;
        shapes.push_back(s);
    }
    return shapes;
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < num_layers(); ++l)
        n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector params(spec.param_count(), 0.0);
    rng::Stream stream = rng::derive_stream(seed, 0, rng::kEntityInit);
    for (const auto& layer : spec.layout()) {
        const double bound = std::sqrt(6.0 / (layer.in + layer.out));
        double* w = params.data() + layer.w_offset;
        const std::size_t count = static_cast<std::size_t>(layer.in) * layer.out;
        for (std::size_t i = 0; i < count; ++i)
            w[i] = (2.0 * stream.next_double() - 1.0) * bound;
        // biases stay zero
    }
    return params;
}

namespace {

struct ForwardCache {
    std::vector<Matrix> pre_acts;  // pre_acts[l]: batch x out_l
    std::vector<Matrix> post_acts; // ReLU(pre) for hidden layers, identity for the head
};

void check_shapes(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
    spec.validate();
    if (params.size() != spec.param_count())
        throw ConfigError("params length " + std::to_string(params.size()) +
                          " does not match spec (" + std::to_string(spec.param_count()) + ")");
    if (batch.features.cols != static_cast<std::size_t>(spec.input_dim()))
        throw ConfigError("batch input dim " + std::to_string(batch.features.cols) +
                          " does not match model input " + std::to_string(spec.input_dim()));
    if (batch.features.rows == 0) throw ConfigError("empty batch");
    if (batch.labels.size() != batch.features.rows)
        throw ConfigError("batch labels/features row mismatch");
}

ForwardCache forward_cached(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
    const auto layers = spec.layout();
    const std::size_t B = batch.features.rows;
    ForwardCache cache;
    cache.pre_acts.reserve(layers.size());
    cache.post_acts.reserve(layers.size());

    const Matrix* input = &batch.features;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& shape = layers[l];
        Matrix z(B, shape.out);
        const double* w = params.data() + shape.w_offset;
        const double* b = params.data() + shape.b_offset;
        for (std::size_t r = 0; r < B; ++r) {
            const double* x = input->row(r);
            double* zr = z.row(r);
            for (int o = 0; o < shape.out; ++o)
                zr[o] = b[o] + ker::dot(w + static_cast<std::size_t>(o) * shape.in, x, shape.in);
        }
        const bool hidden = l + 1 < layers.size();
        Matrix a = z;
        if (hidden) ker::relu(z.data.data(), a.data.data(), a.data.size());
        cache.pre_acts.push_back(std::move(z));
        cache.post_acts.push_back(std::move(a));
        input = &cache.post_acts.back();
    }
    return cache;
}

Matrix representation_of(const MlpSpec& spec, const Batch& batch, const ForwardCache& cache) {
    const int rep = spec.representation_layer();
    if (rep < 0) return batch.features; // single affine layer: input is the feature
    return cache.post_acts[rep];
}

// Backward from d(post-activation) at layer `top` down to layer 0,
// accumulating into grad. d_act is consumed.
void backprop_from(const ParamVector& params, const MlpSpec& spec, const Batch& batch,
                   const ForwardCache& cache, int top, Matrix d_act, Gradient& grad) {
    const auto layers = spec.layout();
    const std::size_t B = batch.features.rows;

    for (int l = top; l >= 0; --l) {
        const auto& shape = layers[l];
        const bool hidden = l + 1 < static_cast<int>(layers.size());
        Matrix dz;
        if (hidden) {
            dz = Matrix(B, shape.out);
            ker::relu_backward(cache.pre_acts[l].data.data(), d_act.data.data(),
                               dz.data.data(), dz.data.size());
        } else {
            dz = std::move(d_act);
        }

        const Matrix& below = (l == 0) ? batch.features : cache.post_acts[l - 1];
        double* dw = grad.data() + shape.w_offset;
        double* db = grad.data() + shape.b_offset;
        for (std::size_t r = 0; r < B; ++r) {
            const double* dzr = dz.row(r);
            const double* xr = below.row(r);
            for (int o = 0; o < shape.out; ++o) {
                if (dzr[o] != 0.0)
                    ker::axpy(dzr[o], xr, dw + static_cast<std::size_t>(o) * shape.in, shape.in);
                db[o] += dzr[o];
            }
        }

        if (l > 0) {
            const double* w = params.data() + shape.w_offset;
            Matrix dx(B, shape.in, 0.0);
            for (std::size_t r = 0; r < B; ++r) {
                const double* dzr = dz.row(r);
                double* dxr = dx.row(r);
                for (int o = 0; o < shape.out; ++o)
                    if (dzr[o] != 0.0)
                        ker::axpy(dzr[o], w + static_cast<std::size_t>(o) * shape.in, dxr, shape.in);
            }
            d_act = std::move(dx);
        }
    }
}

} // namespace

void softmax_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row(r);
        double mx = row[0];
        for (std::size_t c = 1; c < m.cols; ++c) mx = std::max(mx, row[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            denom += row[c];
        }
        for (std::size_t c = 0; c < m.cols; ++c) row[c] /= denom;
    }
}

ForwardOutput forward(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
    check_shapes(params, spec, batch);
    ForwardCache cache = forward_cached(params, spec, batch);
    ForwardOutput out;
    out.representation = representation_of(spec, batch, cache);
    out.logits = std::move(cache.post_acts.back());
    return out;
}

LossGrad loss_and_grad(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
    check_shapes(params, spec, batch);
    const int c = spec.num_classes();
    for (int label : batch.labels)
        if (label < 0 || label >= c) throw ConfigError("label out of range");

    ForwardCache cache = forward_cached(params, spec, batch);
    const std::size_t B = batch.features.rows;

    Matrix probs = cache.post_acts.back();
    softmax_rows(probs);

    double loss = 0.0;
    for (std::size_t r = 0; r < B; ++r)
        loss -= std::log(probs(r, static_cast<std::size_t>(batch.labels[r])));
    loss /= static_cast<double>(B);

    // dLogits = (softmax - onehot) / B
    Matrix d_logits = std::move(probs);
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t r = 0; r < B; ++r) {
        double* row = d_logits.row(r);
        row[batch.labels[r]] -= 1.0;
        for (std::size_t j = 0; j < d_logits.cols; ++j) row[j] *= inv_b;
    }

    LossGrad out;
    out.loss = loss;
    out.representation = representation_of(spec, batch, cache);
    out.grad.assign(params.size(), 0.0);
    backprop_from(params, spec, batch, cache, spec.num_layers() - 1, std::move(d_logits), out.grad);
    return out;
}

Gradient backward_from_representation(const ParamVector& params, const MlpSpec& spec,
                                      const Batch& batch, const Matrix& rep_grad) {
    check_shapes(params, spec, batch);
    if (rep_grad.rows != batch.features.rows ||
        rep_grad.cols != static_cast<std::size_t>(spec.representation_dim()))
        throw ConfigError("rep_grad shape does not match representation");

    Gradient grad(params.size(), 0.0);
    const int rep = spec.representation_layer();
    if (rep < 0) return grad; // representation is the raw input: nothing upstream

    ForwardCache cache = forward_cached(params, spec, batch);
    backprop_from(params, spec, batch, cache, rep, rep_grad, grad);
    return grad;
}

Gradient finite_diff_grad(const ParamVector& params,
                          const std::function<double(const ParamVector&)>& scalar_fn,
                          double eps) {
    if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be > 0");
    Gradient grad(params.size());
    ParamVector probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double up = scalar_fn(probe);
        probe[i] = saved - eps;
        const double down = scalar_fn(probe);
        probe[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

} // namespace fedsim::nn
