#pragma once
#include "fedsim/data.hpp"
#include "fedsim/fl.hpp"
#include "fedsim/mlp.hpp"
#include "fedsim/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fedsim::harness {

struct DatasetSource {
    enum class Kind { synthetic, idx };
    Kind kind = Kind::synthetic;

    // synthetic
    int num_classes = 10;
    int dim = 16;
    int per_class = 500;
    double spread = 1.0;
    std::optional<std::uint64_t> seed; // defaults to master_seed

    // idx
    std::string train_images, train_labels, test_images, test_labels;
};

enum class AggregationOverride { algorithm_default, vanilla, normalized };

struct RunConfig {
    fl::AlgorithmKind algorithm = fl::AlgorithmKind::FedMRUR;
    nn::MlpSpec model{{16, 32, 10}};
    fl::HyperParams hyper;
    data::PartitionSpec partition;
    std::optional<std::uint64_t> partition_seed; // defaults to master_seed
    DatasetSource dataset;
    int rounds = 1;
    double participation_ratio = 0.05;
    int batch_size = 20;
    int local_epochs = 1;
    int eval_every = 1;
    std::uint64_t master_seed = 1;
    std::string output_path = "metrics.csv";
    AggregationOverride aggregation = AggregationOverride::algorithm_default;

    void validate() const; // throws ConfigError
};

struct RoundMetrics {
    long round = 0;
    double train_loss = 0.0;
    std::optional<double> test_accuracy;
    std::optional<double> test_loss;
    double global_update_norm = 0.0;
    std::optional<double> d_t;
    std::optional<double> mean_pairwise_cosine;
    double effective_eta_l = 0.0;
};

// max(1, round(ratio * P)) distinct ids, uniform without replacement,
// returned sorted.
std::vector<int> sample_clients(int num_clients, double ratio, rng::Stream& stream);

// (accuracy, mean cross-entropy); argmax ties break toward the lowest
// class index.
std::pair<double, double> evaluate(const nn::ParamVector& params, const nn::MlpSpec& spec,
                                   const data::Dataset& test_set);

struct RoundObservation {
    long round;
    const std::vector<int>& participants;
    const std::vector<fl::ClientUpdate>& updates; // ordered by participant id
    const std::vector<double>& aggregate;         // raw aggregate (pre sign flip)
    const nn::ParamVector& params_after;
    const RoundMetrics& metrics;
};
using RoundObserver = std::function<void(const RoundObservation&)>;

struct RunResult {
    std::vector<RoundMetrics> metrics;
    nn::ParamVector final_params;
};

// Full experiment: dataset, partition, T rounds of sampled client training
// with per-round learning-rate decay, aggregation and global step.
// Bit-identical output for identical config at any thread count.
// threads == 0 means FEDSIM_THREADS (or hardware concurrency).
RunResult run(const RunConfig& config, int threads = 0, const RoundObserver& observer = {});

// FEDSIM_THREADS, clamped to >= 1; hardware concurrency when unset.
int env_threads();

// Datasets as the harness builds them (exposed for the CLI inspector).
struct BuiltData {
    data::Dataset train;
    data::Dataset test;
    std::vector<data::Shard> shards;
};
BuiltData build_data(const RunConfig& config);

} // namespace fedsim::harness
