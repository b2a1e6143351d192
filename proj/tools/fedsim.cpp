// fedsim command-line front end: run experiments, compare algorithms,
// inspect partitions, plot metrics, run the self-test batteries.

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/harness.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/report.hpp"
#include "fedsim/selftest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

namespace {

using namespace fedsim;

std::string with_suffix(const std::string& path, const std::string& tag) {
    std::filesystem::path p(path);
    const std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    std::filesystem::path out = p.parent_path() / (stem + "_" + tag + ext);
    return out.string();
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    harness::RunConfig config = config::parse_config_with_overrides(config_path, overrides);
    const auto result = harness::run(config, harness::env_threads());
    report::write_csv(result.metrics, config.output_path);

    const auto& last = result.metrics.back();
    std::printf("algorithm=%s rounds=%d kernel=%s -> %s\n",
                fl::algorithm_name(config.algorithm), config.rounds,
                kernels::backend_name(kernels::active_backend()), config.output_path.c_str());
    if (last.test_accuracy)
        std::printf("final: test_accuracy=%.4f test_loss=%.4f train_loss=%.4f\n",
                    *last.test_accuracy, *last.test_loss, last.train_loss);
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& algorithms,
                const std::vector<std::string>& overrides) {
    std::vector<std::string> names;
    std::string current;
    for (char c : algorithms + ",") {
        if (c == ',') {
            if (!current.empty()) names.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (names.empty()) throw ConfigError("compare: no algorithms given");

    // the chart is rebuilt from the CSVs, never from in-memory state
    std::vector<report::Series> acc_series;
    std::string base_output;
    for (const auto& name : names) {
        harness::RunConfig config = config::parse_config_with_overrides(config_path, overrides);
        config.algorithm = fl::algorithm_from_name(name); // same master seed: shared streams
        base_output = config.output_path;
        const auto result = harness::run(config, harness::env_threads());
        const std::string csv_path = with_suffix(config.output_path, name);
        report::write_csv(result.metrics, csv_path);

        auto from_csv = report::series_from_csv(csv_path, {"test_accuracy"});
        from_csv[0].name = name;
        if (from_csv[0].points.size() >= 2) acc_series.push_back(std::move(from_csv[0]));

        const auto& last = result.metrics.back();
        std::printf("%-10s final test_accuracy=%s csv=%s\n", name.c_str(),
                    last.test_accuracy ? report::format_real(*last.test_accuracy).c_str() : "-",
                    csv_path.c_str());
    }
    if (!acc_series.empty()) {
        std::filesystem::path p(base_output);
        const std::filesystem::path out = p.parent_path() / (p.stem().string() + "_accuracy.svg");
        report::render_svg(acc_series, out.string());
        std::printf("accuracy chart: %s\n", out.string().c_str());
    }
    return 0;
}

int cmd_partition_inspect(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
    harness::RunConfig config = config::parse_config_with_overrides(config_path, overrides);
    const auto built = harness::build_data(config);
    std::printf("clients=%d samples=%zu classes=%d\n", config.partition.num_clients,
                built.train.size(), built.train.num_classes);
    for (std::size_t p = 0; p < built.shards.size(); ++p) {
        const auto& shard = built.shards[p];
        std::map<int, int> hist;
        for (auto idx : shard.indices) hist[built.train.labels[idx]]++;
        std::printf("client %zu: size=%zu labels={", p, shard.indices.size());
        bool first = true;
        for (const auto& [label, count] : hist) {
            std::printf("%s%d:%d", first ? "" : " ", label, count);
            first = false;
        }
        std::printf("}\n");
    }
    return 0;
}

int cmd_plot(const std::string& csv_path, const std::string& out_path,
             const std::string& columns) {
    std::vector<std::string> names;
    std::string current;
    for (char c : columns + ",") {
        if (c == ',') {
            if (!current.empty()) names.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (names.empty()) throw ConfigError("plot: no columns given");
    const auto series = report::series_from_csv(csv_path, names);
    report::render_svg(series, out_path);
    std::printf("%s\n", out_path.c_str());
    return 0;
}

int cmd_selftest() {
    const auto results = selftest::run_all();
    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("battery %-12s %s%s%s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.empty() ? "" : ": ", r.detail.c_str());
        all_ok = all_ok && r.pass;
    }
    std::printf("selftest: %s\n", all_ok ? "all batteries passed" : "FAILURES");
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedsim: deterministic federated-learning simulator"};
    app.footer(fedsim::config::defaults_help() +
               "\nenvironment:\n"
               "  FEDSIM_THREADS  worker-pool size (default: logical cores)\n"
               "  FEDSIM_KERNEL   scalar|avx2|neon|auto (default: auto)\n");
    app.require_subcommand(1);

    std::string config_path, csv_path, out_path, columns, algorithms;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--set", overrides, "override config keys, key=value (dotted paths ok)");

    auto* compare = app.add_subcommand(
        "compare", "run several algorithms over one base config and shared seeds");
    compare->add_option("--config", config_path, "config file")->required();
    compare->add_option("--algorithms", algorithms, "comma-separated algorithm list")->required();
    compare->add_option("--set", overrides, "override config keys, key=value");

    auto* inspect =
        app.add_subcommand("partition-inspect", "print per-client sizes and label histograms");
    inspect->add_option("--config", config_path, "config file")->required();
    inspect->add_option("--set", overrides, "override config keys, key=value");

    auto* plot = app.add_subcommand("plot", "render an SVG line chart from a metrics CSV");
    plot->add_option("csv", csv_path, "metrics CSV produced by run")->required();
    plot->add_option("--out", out_path, "output SVG path")->required();
    plot->add_option("--columns", columns, "comma-separated metric columns")->required();

    app.add_subcommand("selftest", "run the fast invariant batteries");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run")) return cmd_run(config_path, overrides);
        if (app.got_subcommand("compare")) return cmd_compare(config_path, algorithms, overrides);
        if (app.got_subcommand("partition-inspect"))
            return cmd_partition_inspect(config_path, overrides);
        if (app.got_subcommand("plot")) return cmd_plot(csv_path, out_path, columns);
        if (app.got_subcommand("selftest")) return cmd_selftest();
    } catch (const fedsim::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
