#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fedsim::config {

using nlohmann::json;
using harness::RunConfig;

namespace {

[[noreturn]] void bad_key(const std::string& scope, const std::string& key, const std::string& why) {
    const std::string path = scope.empty() ? key : scope + "." + key;
    throw ConfigError("config key '" + path + "': " + why);
}

void check_known_keys(const json& obj, const std::string& scope,
                      const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.contains(key)) {
            const std::string path = scope.empty() ? key : scope + "." + key;
            throw ConfigError("unknown key: " + path);
        }
    }
}

double get_number(const json& obj, const std::string& scope, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) bad_key(scope, key, "expected a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& scope, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) bad_key(scope, key, "expected an integer");
    return obj[key].get<int>();
}

std::uint64_t get_u64(const json& obj, const std::string& scope, const std::string& key,
                      std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer() || obj[key].get<long long>() < 0)
        bad_key(scope, key, "expected a non-negative integer");
    return obj[key].get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& scope, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) bad_key(scope, key, "expected a string");
    return obj[key].get<std::string>();
}

void parse_partition(const json& obj, RunConfig& config) {
    check_known_keys(obj, "partition", {"scheme", "mu", "n", "num_clients", "seed"});
    const std::string scheme = get_string(obj, "partition", "scheme", "dirichlet");
    if (scheme == "dirichlet")
        config.partition.scheme = data::PartitionSpec::Scheme::dirichlet;
    else if (scheme == "pathological")
        config.partition.scheme = data::PartitionSpec::Scheme::pathological;
    else
        bad_key("partition", "scheme", "expected 'dirichlet' or 'pathological'");
    config.partition.mu = get_number(obj, "partition", "mu", config.partition.mu);
    if (!(config.partition.mu > 0.0)) bad_key("partition", "mu", "must be > 0");
    config.partition.n = get_int(obj, "partition", "n", config.partition.n);
    if (config.partition.n < 1) bad_key("partition", "n", "must be >= 1");
    config.partition.num_clients =
        get_int(obj, "partition", "num_clients", config.partition.num_clients);
    if (config.partition.num_clients < 1) bad_key("partition", "num_clients", "must be >= 1");
    if (obj.contains("seed")) config.partition_seed = get_u64(obj, "partition", "seed", 0);
}

void parse_dataset(const json& obj, RunConfig& config) {
    check_known_keys(obj, "dataset",
                     {"source", "num_classes", "dim", "per_class", "spread", "seed",
                      "train_images", "train_labels", "test_images", "test_labels"});
    const std::string source = get_string(obj, "dataset", "source", "synthetic");
    if (source == "synthetic")
        config.dataset.kind = harness::DatasetSource::Kind::synthetic;
    else if (source == "idx")
        config.dataset.kind = harness::DatasetSource::Kind::idx;
    else
        bad_key("dataset", "source", "expected 'synthetic' or 'idx'");
    config.dataset.num_classes = get_int(obj, "dataset", "num_classes", config.dataset.num_classes);
    config.dataset.dim = get_int(obj, "dataset", "dim", config.dataset.dim);
    config.dataset.per_class = get_int(obj, "dataset", "per_class", config.dataset.per_class);
    config.dataset.spread = get_number(obj, "dataset", "spread", config.dataset.spread);
    if (obj.contains("seed")) config.dataset.seed = get_u64(obj, "dataset", "seed", 0);
    config.dataset.train_images = get_string(obj, "dataset", "train_images", "");
    config.dataset.train_labels = get_string(obj, "dataset", "train_labels", "");
    config.dataset.test_images = get_string(obj, "dataset", "test_images", "");
    config.dataset.test_labels = get_string(obj, "dataset", "test_labels", "");
}

RunConfig from_json(const json& root, const std::string& source_name) {
    if (!root.is_object()) throw ConfigError(source_name + ": top level must be a JSON object");
    static const std::set<std::string> known = {
        "algorithm",   "model",        "rounds",       "participation_ratio",
        "batch_size",  "local_epochs", "eval_every",   "master_seed",
        "output_path", "aggregation",  "partition",    "dataset",
        "eta_l",       "eta_g",        "alpha",        "rho",
        "gamma",       "sigma",        "beta",         "mu_prox",
        "weight_decay", "lr_decay"};
    check_known_keys(root, "", known);

    RunConfig config;
    if (!root.contains("algorithm")) throw ConfigError(source_name + ": missing key 'algorithm'");
    config.algorithm = fl::algorithm_from_name(root["algorithm"].get<std::string>());
    if (!root.contains("rounds")) throw ConfigError(source_name + ": missing key 'rounds'");
    config.rounds = get_int(root, "", "rounds", 0);
    if (config.rounds < 1) bad_key("", "rounds", "must be >= 1");

    if (root.contains("model")) {
        if (!root["model"].is_array() || root["model"].empty())
            bad_key("", "model", "expected an array of layer sizes");
        config.model.layer_sizes.clear();
        for (const auto& v : root["model"]) {
            if (!v.is_number_integer()) bad_key("", "model", "layer sizes must be integers");
            config.model.layer_sizes.push_back(v.get<int>());
        }
    }

    config.participation_ratio =
        get_number(root, "", "participation_ratio", config.participation_ratio);
    if (!(config.participation_ratio > 0.0 && config.participation_ratio <= 1.0))
        bad_key("", "participation_ratio", "must be in (0, 1]");
    config.batch_size = get_int(root, "", "batch_size", config.batch_size);
    if (config.batch_size < 1) bad_key("", "batch_size", "must be >= 1");
    config.local_epochs = get_int(root, "", "local_epochs", config.local_epochs);
    if (config.local_epochs < 1) bad_key("", "local_epochs", "must be >= 1");
    config.eval_every = get_int(root, "", "eval_every", config.eval_every);
    if (config.eval_every < 1) bad_key("", "eval_every", "must be >= 1");
    config.master_seed = get_u64(root, "", "master_seed", config.master_seed);
    config.output_path = get_string(root, "", "output_path", config.output_path);

    if (root.contains("aggregation")) {
        const std::string agg = root["aggregation"].get<std::string>();
        if (agg == "default")
            config.aggregation = harness::AggregationOverride::algorithm_default;
        else if (agg == "vanilla")
            config.aggregation = harness::AggregationOverride::vanilla;
        else if (agg == "normalized")
            config.aggregation = harness::AggregationOverride::normalized;
        else
            bad_key("", "aggregation", "expected 'default', 'vanilla' or 'normalized'");
    }

    auto& hp = config.hyper;
    hp.eta_l = get_number(root, "", "eta_l", hp.eta_l);
    hp.eta_g = get_number(root, "", "eta_g", hp.eta_g);
    hp.alpha = get_number(root, "", "alpha", hp.alpha);
    hp.rho = get_number(root, "", "rho", hp.rho);
    hp.gamma = get_number(root, "", "gamma", hp.gamma);
    hp.sigma = get_number(root, "", "sigma", hp.sigma);
    hp.beta = get_number(root, "", "beta", hp.beta);
    hp.mu_prox = get_number(root, "", "mu_prox", hp.mu_prox);
    hp.weight_decay = get_number(root, "", "weight_decay", hp.weight_decay);
    hp.lr_decay = get_number(root, "", "lr_decay", hp.lr_decay);

    if (root.contains("partition")) {
        if (!root["partition"].is_object()) bad_key("", "partition", "expected an object");
        parse_partition(root["partition"], config);
    }
    if (root.contains("dataset")) {
        if (!root["dataset"].is_object()) bad_key("", "dataset", "expected an object");
        parse_dataset(root["dataset"], config);
    }

    config.validate();
    return config;
}

json parse_text(const std::string& text, const std::string& source_name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source_name + ": malformed JSON: " + e.what());
    }
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
    return from_json(parse_text(text, source_name), source_name);
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

RunConfig parse_config_with_overrides(const std::string& path,
                                      const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    json root = parse_text(buf.str(), path);

    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got: " + item);
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);

        // value parsed as JSON when possible, else taken as a string
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;
        }

        json* node = &root;
        std::size_t start = 0;
        for (;;) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot - start);
            if (part.empty()) throw ConfigError("--set: empty key segment in: " + key);
            if (dot == std::string::npos) {
                (*node)[part] = parsed;
                break;
            }
            node = &(*node)[part];
            start = dot + 1;
        }
    }
    return from_json(root, path);
}

std::string defaults_help() {
    return "config defaults (JSON keys):\n"
           "  algorithm             (required) fedavg|fedprox|fedcm|mofedsam|fedmrur_n|fedmrur_h|fedmrur\n"
           "  rounds                (required) communication rounds\n"
           "  model                 [16,32,10]  layer sizes: input, hidden..., classes\n"
           "  participation_ratio   0.05\n"
           "  batch_size            20\n"
           "  local_epochs          1\n"
           "  eval_every            1\n"
           "  master_seed           1\n"
           "  output_path           metrics.csv\n"
           "  aggregation           default    (default|vanilla|normalized)\n"
           "  eta_l 0.1   eta_g 1.0   lr_decay 0.998   alpha 0.1   rho 0.5\n"
           "  gamma 0.005 sigma 10000.0   beta 1.0   mu_prox 0.1   weight_decay 5e-4\n"
           "  partition  {scheme dirichlet, mu 0.3, n 2, num_clients 100, seed <master_seed>}\n"
           "  dataset    {source synthetic, num_classes 10, dim 16, per_class 500,\n"
           "              spread 1.0, seed <master_seed>} or {source idx, train_images,\n"
           "              train_labels, test_images, test_labels}\n";
}

} // namespace fedsim::config
