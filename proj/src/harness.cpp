#include "fedsim/harness.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

namespace fedsim::harness {

namespace ker = fedsim::kernels;

void RunConfig::validate() const {
    model.validate();
    hyper.validate();
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (!(participation_ratio > 0.0 && participation_ratio <= 1.0))
        throw ConfigError("participation_ratio must be in (0, 1]");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (partition.num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (dataset.kind == DatasetSource::Kind::synthetic) {
        if (dataset.num_classes < 2) throw ConfigError("dataset.num_classes must be >= 2");
        if (dataset.dim < 1) throw ConfigError("dataset.dim must be >= 1");
        if (dataset.per_class < 1) throw ConfigError("dataset.per_class must be >= 1");
        if (dataset.spread < 0.0) throw ConfigError("dataset.spread must be >= 0");
    } else {
        if (dataset.train_images.empty() || dataset.train_labels.empty())
            throw ConfigError("idx dataset needs train_images and train_labels");
        if (dataset.test_images.empty() || dataset.test_labels.empty())
            throw ConfigError("idx dataset needs test_images and test_labels");
    }
}

std::vector<int> sample_clients(int num_clients, double ratio, rng::Stream& stream) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("participation_ratio out of range");
    const int take =
        std::max(1, static_cast<int>(std::llround(ratio * static_cast<double>(num_clients))));
    std::vector<int> ids(num_clients);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < take; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(stream.next_below(num_clients - i));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(take);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::pair<double, double> evaluate(const nn::ParamVector& params, const nn::MlpSpec& spec,
                                   const data::Dataset& test_set) {
    if (test_set.size() == 0) throw ConfigError("evaluate: empty test set");
    nn::Batch batch;
    batch.features = test_set.features;
    batch.labels = test_set.labels;
    nn::ForwardOutput out = nn::forward(params, spec, batch);

    std::size_t correct = 0;
    double loss = 0.0;
    Matrix probs = out.logits;
    nn::softmax_rows(probs);
    for (std::size_t r = 0; r < out.logits.rows; ++r) {
        const double* row = out.logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < out.logits.cols; ++c)
            if (row[c] > row[best]) best = c; // ties keep the lowest index
        if (static_cast<int>(best) == test_set.labels[r]) ++correct;
        loss -= std::log(probs(r, static_cast<std::size_t>(test_set.labels[r])));
    }
    const double n = static_cast<double>(test_set.size());
    return {static_cast<double>(correct) / n, loss / n};
}

int env_threads() {
    if (const char* env = std::getenv("FEDSIM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

BuiltData build_data(const RunConfig& config) {
    BuiltData built;
    if (config.dataset.kind == DatasetSource::Kind::synthetic) {
        const std::uint64_t seed = config.dataset.seed.value_or(config.master_seed);
        built.train = data::gen_synthetic(config.dataset.num_classes, config.dataset.dim,
                                          config.dataset.per_class, config.dataset.spread, seed,
                                          /*salt=*/0);
        const int test_per_class = std::max(1, config.dataset.per_class / 5);
        built.test = data::gen_synthetic(config.dataset.num_classes, config.dataset.dim,
                                         test_per_class, config.dataset.spread, seed,
                                         /*salt=*/1);
    } else {
        built.train = data::load_idx(config.dataset.train_images, config.dataset.train_labels);
        built.test = data::load_idx(config.dataset.test_images, config.dataset.test_labels);
        built.test.num_classes = built.train.num_classes =
            std::max(built.train.num_classes, built.test.num_classes);
    }
    built.train.validate();
    built.test.validate();

    data::PartitionSpec part = config.partition;
    part.seed = config.partition_seed.value_or(config.master_seed);
    built.shards = data::make_partition(built.train.labels, built.train.num_classes, part);
    return built;
}

namespace {

// Contiguous-chunk worker pool: scheduling can never reorder results.
template <typename Fn>
void parallel_for(int num_tasks, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, num_tasks));
    if (threads == 1) {
        for (int i = 0; i < num_tasks; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const int chunk = (num_tasks + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(num_tasks, begin + chunk);
        pool.emplace_back([&, begin, end, t] {
            try {
                for (int i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

RunResult run(const RunConfig& config, int threads, const RoundObserver& observer) {
    config.validate();
    if (threads <= 0) threads = env_threads();

    const BuiltData built = build_data(config);
    const int P = config.partition.num_clients;
    const fl::Features base_features = fl::features_of(config.algorithm);
    bool use_normalized = base_features.normalized_agg;
    if (config.aggregation == AggregationOverride::vanilla) use_normalized = false;
    if (config.aggregation == AggregationOverride::normalized) use_normalized = true;

    fl::ServerState server =
        fl::ServerState::init(nn::init_params(config.model, config.master_seed));

    RunResult result;
    result.metrics.reserve(config.rounds);

    for (int t = 0; t < config.rounds; ++t) {
        const double eff_eta = config.hyper.eta_l * std::pow(config.hyper.lr_decay, t);

        rng::Stream sampler = rng::derive_stream(config.master_seed, t, rng::kEntitySampling);
        const std::vector<int> participants =
            sample_clients(P, config.participation_ratio, sampler);

        std::vector<fl::ClientRoundResult> results(participants.size());
        parallel_for(static_cast<int>(participants.size()), threads, [&](int i) {
            const int client = participants[i];
            const data::Shard& shard = built.shards[client];
            if (shard.indices.empty()) throw ConfigError("client shard is empty");
            fl::HyperParams hp = config.hyper;
            hp.eta_l = eff_eta;
            hp.batch_size = config.batch_size;
            const int batches_per_epoch = static_cast<int>(
                (shard.indices.size() + config.batch_size - 1) / config.batch_size);
            hp.K = config.local_epochs * batches_per_epoch;
            rng::Stream stream = rng::derive_stream(config.master_seed, t, client);
            results[i] =
                fl::client_round(built.train, shard, server, config.model, hp, base_features,
                                 stream);
        });

        std::vector<fl::ClientUpdate> updates;
        updates.reserve(results.size());
        double train_loss = 0.0;
        for (auto& r : results) {
            train_loss += r.final_objective;
            updates.push_back(std::move(r.update));
        }
        train_loss /= static_cast<double>(results.size());

        std::vector<double> aggregate =
            use_normalized ? fl::normalized_aggregate(updates) : fl::vanilla_aggregate(updates);

        RoundMetrics metrics;
        metrics.round = t;
        metrics.train_loss = train_loss;
        metrics.effective_eta_l = eff_eta;
        metrics.global_update_norm = ker::nrm2(aggregate.data(), aggregate.size());
        if (const double dt = fl::compute_dt(updates); std::isfinite(dt)) metrics.d_t = dt;
        metrics.mean_pairwise_cosine = fl::pairwise_cosine(updates);

        // server applies the negated raw aggregate (gradient-direction sign)
        std::vector<double> delta(aggregate.size());
        ker::scale(-1.0, aggregate.data(), delta.data(), delta.size());
        fl::global_step(server, delta, config.hyper.eta_g);

        if (!all_finite(server.global_params))
            throw DivergenceError("divergence at round " + std::to_string(t));

        if (t % config.eval_every == 0 || t + 1 == config.rounds) {
            const auto [acc, loss] = evaluate(server.global_params, config.model, built.test);
            metrics.test_accuracy = acc;
            metrics.test_loss = loss;
        }

        result.metrics.push_back(metrics);
        if (observer) {
            RoundObservation obs{t,         participants,          updates,
                                 aggregate, server.global_params, result.metrics.back()};
            observer(obs);
        }
    }

    result.final_params = std::move(server.global_params);
    return result;
}

} // namespace fedsim::harness
