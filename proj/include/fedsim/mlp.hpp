#pragma once
#include "fedsim/matrix.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fedsim::nn {

using ParamVector = std::vector<double>;

// Dense ReLU network: affine layers with ReLU on every hidden layer and a
// linear head. The representation is the post-activation output of the
// last hidden layer (the input itself for a single-layer network).
struct MlpSpec {
    std::vector<int> layer_sizes; // input dim, hidden dims..., num_classes

    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
    int representation_layer() const { return num_layers() - 2; }
    int input_dim() const { return layer_sizes.front(); }
    int num_classes() const { return layer_sizes.back(); }
    int representation_dim() const {
        return num_layers() >= 2 ? layer_sizes[layer_sizes.size() - 2] : layer_sizes.front();
    }

    struct LayerShape {
        int in, out;
        std::size_t w_offset, b_offset;
    };
    std::vector<LayerShape> layout() const;
    std::size_t param_count() const;

    void validate() const; // throws ConfigError
};

struct Batch {
    Matrix features; // batch_size x input_dim
    std::vector<int> labels;

    std::size_t size() const { return features.rows; }
};

struct ForwardOutput {
    Matrix logits;         // batch_size x num_classes
    Matrix representation; // batch_size x rep_dim
};

using Gradient = ParamVector;

// Glorot-uniform weights (bound sqrt(6/(in+out))), zero biases.
// Deterministic in (spec, seed).
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

ForwardOutput forward(const ParamVector& params, const MlpSpec& spec, const Batch& batch);

struct LossGrad {
    double loss;
    Gradient grad;
    Matrix representation;
};

// Mean softmax cross-entropy over the batch plus its exact reverse-mode
// gradient; also returns the forward representation.
LossGrad loss_and_grad(const ParamVector& params, const MlpSpec& spec, const Batch& batch);

// Pullback of an arbitrary representation gradient through the hidden
// stack: the gradient w.r.t. params of the scalar whose d/d(representation)
// equals rep_grad. The classifier head is not on this path.
Gradient backward_from_representation(const ParamVector& params, const MlpSpec& spec,
                                      const Batch& batch, const Matrix& rep_grad);

// Central finite differences, (f(w+eps e_i) - f(w-eps e_i)) / (2 eps).
// Test oracle; intentionally independent of the reverse-mode path.
Gradient finite_diff_grad(const ParamVector& params,
                          const std::function<double(const ParamVector&)>& scalar_fn,
                          double eps);

// In-place row softmax (exposed for tests).
void softmax_rows(Matrix& m);

} // namespace fedsim::nn
