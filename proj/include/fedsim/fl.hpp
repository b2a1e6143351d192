#pragma once
#include "fedsim/data.hpp"
#include "fedsim/mlp.hpp"
#include "fedsim/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fedsim::fl {

using nn::ParamVector;

struct HyperParams {
    double eta_l = 0.1;        // local learning rate
    double eta_g = 1.0;        // global learning rate
    double alpha = 0.1;        // client momentum coefficient in (0, 1]
    double rho = 0.5;          // SAM perturbation radius
    double gamma = 0.005;      // manifold regularizer weight
    double sigma = 10000.0;    // manifold regularizer temperature
    double beta = 1.0;         // Lorentz curvature parameter
    double mu_prox = 0.1;      // proximal coefficient (prox variant only)
    double weight_decay = 5e-4;
    double lr_decay = 0.998;   // per-round multiplier on eta_l
    int K = 1;                 // local steps
    int batch_size = 1;

    void validate() const; // throws ConfigError
};

enum class AlgorithmKind {
    FedAvg,
    FedProx,
    FedCM,
    MoFedSAM,
    FedMRUR_N,
    FedMRUR_H,
    FedMRUR,
};

struct Features {
    bool sam = false;            // perturbed-gradient step
    bool momentum = false;       // mix broadcast global update into v
    bool hyperbolic_reg = false; // manifold regularizer in the local objective
    bool normalized_agg = false; // norm-preserving aggregation
    bool prox = false;           // proximal term
};

Features features_of(AlgorithmKind kind);
AlgorithmKind algorithm_from_name(const std::string& name); // throws ConfigError
const char* algorithm_name(AlgorithmKind kind);

struct ServerState {
    ParamVector global_params;
    // Broadcast global update, gradient-direction sign convention: the
    // server applies params -= eta_g * momentum. Starts at zero.
    std::vector<double> momentum;
    long round = 0;

    static ServerState init(ParamVector w0);
};

struct ClientUpdate {
    std::vector<double> delta; // w_end - w_start
    double norm;

    static ClientUpdate from_delta(std::vector<double> d);
};

struct ObjectiveGrad {
    double value;
    nn::Gradient grad;
};

// params + rho * grad / |grad| when |grad| > 1e-12, params unchanged otherwise.
ParamVector sam_perturb(const ParamVector& params, const nn::Gradient& grad, double rho);

// Gradient (and value) of the local objective at `local`:
// cross-entropy + gamma * manifold regularizer against the frozen global
// model's representations on the same batch (when the variant enables it)
// + proximal and weight-decay terms.
ObjectiveGrad local_objective_grad(const ParamVector& local, const ParamVector& global_params,
                                   const nn::MlpSpec& spec, const nn::Batch& batch,
                                   const HyperParams& hp, const Features& feat);

struct ClientRoundResult {
    ClientUpdate update;
    double final_objective; // local objective at the last step's iterate
};

// K local steps over batches drawn without replacement per epoch
// (reshuffled between epochs): optional SAM perturbation, optional momentum
// mixing of the broadcast update rescaled to gradient units by 1/(K*eta_l).
ClientRoundResult client_round(const data::Dataset& dataset, const data::Shard& shard,
                               const ServerState& server, const nn::MlpSpec& spec,
                               const HyperParams& hp, const Features& feat,
                               rng::Stream& stream);

// Mean of the raw client updates.
std::vector<double> vanilla_aggregate(const std::vector<ClientUpdate>& updates);

// Sum of updates rescaled so the norm equals the mean of the update norms;
// zero vector when the sum is degenerate (|sum| <= 1e-12).
std::vector<double> normalized_aggregate(const std::vector<ClientUpdate>& updates);

// sum of norms / norm of sum, in [1, S]; +inf sentinel when degenerate.
double compute_dt(const std::vector<ClientUpdate>& updates);

// Mean cosine over unordered pairs; nullopt with fewer than two updates of
// usable norm.
std::optional<double> pairwise_cosine(const std::vector<ClientUpdate>& updates);

// params -= eta_g * delta; momentum = delta; round += 1.
void global_step(ServerState& server, const std::vector<double>& delta, double eta_g);

} // namespace fedsim::fl
