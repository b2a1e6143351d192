#include "fedsim/fl.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/hyperbolic.hpp"
#include "fedsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedsim::fl {

namespace ker = fedsim::kernels;

void HyperParams::validate() const {
    if (!(eta_l > 0.0)) throw ConfigError("eta_l must be > 0");
    if (!(eta_g > 0.0)) throw ConfigError("eta_g must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    if (rho < 0.0) throw ConfigError("rho must be >= 0");
    if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (mu_prox < 0.0) throw ConfigError("mu_prox must be >= 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
    if (K < 1) throw ConfigError("K must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

Features features_of(AlgorithmKind kind) {
    Features f;
    switch (kind) {
    case AlgorithmKind::FedAvg: break;
    case AlgorithmKind::FedProx: f.prox = true; break;
    case AlgorithmKind::FedCM: f.momentum = true; break;
    case AlgorithmKind::MoFedSAM:
        f.momentum = f.sam = true;
        break;
    case AlgorithmKind::FedMRUR_N:
        f.momentum = f.sam = f.normalized_agg = true;
        break;
    case AlgorithmKind::FedMRUR_H:
        f.momentum = f.sam = f.hyperbolic_reg = true;
        break;
    case AlgorithmKind::FedMRUR:
        f.momentum = f.sam = f.hyperbolic_reg = f.normalized_agg = true;
        break;
    }
    return f;
}

namespace {

struct AlgoName {
    const char* name;
    AlgorithmKind kind;
};

constexpr AlgoName kAlgoNames[] = {
    {"fedavg", AlgorithmKind::FedAvg},       {"fedprox", AlgorithmKind::FedProx},
    {"fedcm", AlgorithmKind::FedCM},         {"mofedsam", AlgorithmKind::MoFedSAM},
    {"fedmrur_n", AlgorithmKind::FedMRUR_N}, {"fedmrur_h", AlgorithmKind::FedMRUR_H},
    {"fedmrur", AlgorithmKind::FedMRUR},
};

} // namespace

AlgorithmKind algorithm_from_name(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& a : kAlgoNames)
        if (lower == a.name) return a.kind;
    throw ConfigError("unknown algorithm: " + name);
}

const char* algorithm_name(AlgorithmKind kind) {
    for (const auto& a : kAlgoNames)
        if (a.kind == kind) return a.name;
    return "?";
}

ServerState ServerState::init(ParamVector w0) {
    ServerState s;
    s.momentum.assign(w0.size(), 0.0);
    s.global_params = std::move(w0);
    s.round = 0;
    return s;
}

ClientUpdate ClientUpdate::from_delta(std::vector<double> d) {
    ClientUpdate u;
    u.norm = ker::nrm2(d.data(), d.size());
    u.delta = std::move(d);
    return u;
}

ParamVector sam_perturb(const ParamVector& params, const nn::Gradient& grad, double rho) {
    if (params.size() != grad.size()) throw ConfigError("sam_perturb: layout mismatch");
    if (rho < 0.0) throw ConfigError("sam_perturb: rho must be >= 0");
    const double norm = ker::nrm2(grad.data(), grad.size());
    if (norm <= 1e-12) return params;
    ParamVector out = params;
    ker::axpy(rho / norm, grad.data(), out.data(), out.size());
    return out;
}

ObjectiveGrad local_objective_grad(const ParamVector& local, const ParamVector& global_params,
                                   const nn::MlpSpec& spec, const nn::Batch& batch,
                                   const HyperParams& hp, const Features& feat) {
    if (local.size() != global_params.size())
        throw ConfigError("local_objective_grad: local/global layout mismatch");

    nn::LossGrad lg = nn::loss_and_grad(local, spec, batch);
    ObjectiveGrad out;
    out.value = lg.loss;
    out.grad = std::move(lg.grad);

    if (feat.hyperbolic_reg && hp.gamma > 0.0) {
        const Matrix zg = nn::forward(global_params, spec, batch).representation;
        out.value += hp.gamma * hyp::regularizer_batch(lg.representation, zg, hp.beta, hp.sigma);
        Matrix rep_grad = hyp::regularizer_batch_grad(lg.representation, zg, hp.beta, hp.sigma);
        ker::scale(hp.gamma, rep_grad.data.data(), rep_grad.data.data(), rep_grad.data.size());
        nn::Gradient reg_grad = nn::backward_from_representation(local, spec, batch, rep_grad);
        ker::add(reg_grad.data(), out.grad.data(), out.grad.size());
    }

    if (feat.prox && hp.mu_prox > 0.0) {
        std::vector<double> diff = local;
        ker::sub(global_params.data(), diff.data(), diff.size());
        out.value += 0.5 * hp.mu_prox * ker::sum_sq(diff.data(), diff.size());
        ker::axpy(hp.mu_prox, diff.data(), out.grad.data(), out.grad.size());
    }

    if (hp.weight_decay > 0.0) {
        out.value += 0.5 * hp.weight_decay * ker::sum_sq(local.data(), local.size());
        ker::axpy(hp.weight_decay, local.data(), out.grad.data(), out.grad.size());
    }

    return out;
}

namespace {

// Without-replacement batch iterator: one seeded shuffle per epoch,
// consecutive chunks of batch_size (last chunk short).
class BatchSampler {
public:
    BatchSampler(const data::Shard& shard, int batch_size, rng::Stream& stream)
        : order_(shard.indices), batch_size_(static_cast<std::size_t>(batch_size)),
          pos_(order_.size()), stream_(stream) {}

    std::span<const std::uint32_t> next() {
        if (pos_ >= order_.size()) {
            stream_.shuffle(order_);
            pos_ = 0;
        }
        const std::size_t take = std::min(batch_size_, order_.size() - pos_);
        std::span<const std::uint32_t> out(order_.data() + pos_, take);
        pos_ += take;
        return out;
    }

private:
    std::vector<std::uint32_t> order_;
    std::size_t batch_size_;
    std::size_t pos_;
    rng::Stream& stream_;
};

} // namespace

ClientRoundResult client_round(const data::Dataset& dataset, const data::Shard& shard,
                               const ServerState& server, const nn::MlpSpec& spec,
                               const HyperParams& hp, const Features& feat,
                               rng::Stream& stream) {
    hp.validate();
    if (shard.indices.empty()) throw ConfigError("client_round: empty shard");

    const std::size_t n = server.global_params.size();
    ParamVector w = server.global_params;

    // Broadcast update rescaled to gradient units. Mixed only for
    // alpha < 1; at alpha == 1 the path is bit-identical to no momentum.
    const bool use_momentum = feat.momentum && hp.alpha < 1.0;
    std::vector<double> momentum_term;
    if (use_momentum) {
        momentum_term.resize(n);
        ker::scale(1.0 / (hp.K * hp.eta_l), server.momentum.data(), momentum_term.data(), n);
    }

    BatchSampler sampler(shard, hp.batch_size, stream);
    double last_objective = 0.0;
    std::vector<double> v(n);
    for (int k = 0; k < hp.K; ++k) {
        const nn::Batch batch = data::gather(dataset, sampler.next());
        ObjectiveGrad at_w = local_objective_grad(w, server.global_params, spec, batch, hp, feat);
        last_objective = at_w.value;

        const nn::Gradient* g = &at_w.grad;
        ObjectiveGrad at_tilde;
        if (feat.sam && hp.rho > 0.0) {
            const ParamVector w_tilde = sam_perturb(w, at_w.grad, hp.rho);
            at_tilde = local_objective_grad(w_tilde, server.global_params, spec, batch, hp, feat);
            g = &at_tilde.grad;
        }

        if (use_momentum) {
            ker::scale(hp.alpha, g->data(), v.data(), n);
            ker::axpy(1.0 - hp.alpha, momentum_term.data(), v.data(), n);
            ker::axpy(-hp.eta_l, v.data(), w.data(), n);
        } else {
            ker::axpy(-hp.eta_l, g->data(), w.data(), n);
        }
    }

    std::vector<double> delta = w;
    ker::sub(server.global_params.data(), delta.data(), n);
    ClientRoundResult result;
    result.update = ClientUpdate::from_delta(std::move(delta));
    result.final_objective = last_objective;
    if (!std::isfinite(result.update.norm))
        throw DivergenceError("client update diverged (non-finite delta)");
    return result;
}

namespace {

void check_updates(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw ConfigError("aggregate: empty update list");
    for (const auto& u : updates)
        if (u.delta.size() != updates.front().delta.size())
            throw ConfigError("aggregate: update length mismatch");
}

std::vector<double> sum_updates(const std::vector<ClientUpdate>& updates) {
    std::vector<double> total(updates.front().delta.size(), 0.0);
    for (const auto& u : updates) ker::add(u.delta.data(), total.data(), total.size());
    return total;
}

} // namespace

std::vector<double> vanilla_aggregate(const std::vector<ClientUpdate>& updates) {
    check_updates(updates);
    std::vector<double> total = sum_updates(updates);
    ker::scale(1.0 / static_cast<double>(updates.size()), total.data(), total.data(),
               total.size());
    return total;
}

std::vector<double> normalized_aggregate(const std::vector<ClientUpdate>& updates) {
    check_updates(updates);
    std::vector<double> total = sum_updates(updates);
    const double sum_norm = ker::nrm2(total.data(), total.size());
    if (sum_norm <= 1e-12) {
        std::fill(total.begin(), total.end(), 0.0);
        return total;
    }
    double norm_sum = 0.0;
    for (const auto& u : updates) norm_sum += u.norm;
    const double scale = norm_sum / (static_cast<double>(updates.size()) * sum_norm);
    ker::scale(scale, total.data(), total.data(), total.size());
    return total;
}

double compute_dt(const std::vector<ClientUpdate>& updates) {
    check_updates(updates);
    const std::vector<double> total = sum_updates(updates);
    const double sum_norm = ker::nrm2(total.data(), total.size());
    if (sum_norm <= 1e-12) return std::numeric_limits<double>::infinity();
    double norm_sum = 0.0;
    for (const auto& u : updates) norm_sum += u.norm;
    return norm_sum / sum_norm;
}

std::optional<double> pairwise_cosine(const std::vector<ClientUpdate>& updates) {
    std::vector<const ClientUpdate*> usable;
    for (const auto& u : updates)
        if (u.norm > 1e-12) usable.push_back(&u);
    if (usable.size() < 2) return std::nullopt;

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < usable.size(); ++i)
        for (std::size_t j = i + 1; j < usable.size(); ++j) {
            const double d =
                ker::dot(usable[i]->delta.data(), usable[j]->delta.data(), usable[i]->delta.size());
            total += d / (usable[i]->norm * usable[j]->norm);
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

void global_step(ServerState& server, const std::vector<double>& delta, double eta_g) {
    if (delta.size() != server.global_params.size())
        throw ConfigError("global_step: layout mismatch");
    ker::axpy(-eta_g, delta.data(), server.global_params.data(), delta.size());
    server.momentum = delta;
    server.round += 1;
}

} // namespace fedsim::fl
