#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/report.hpp"
#include "fedsim/selftest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace fedsim;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = "/tmp/fedsim_cli_" + name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("parse_config: minimal document gets defaults") {
    const auto path = write_temp("min.json", R"({"algorithm":"fedmrur","rounds":10})");
    const auto config = config::parse_config(path);
    CHECK(config.algorithm == fl::AlgorithmKind::FedMRUR);
    CHECK(config.rounds == 10);
    CHECK(config.hyper.eta_l == 0.1);
    CHECK(config.hyper.eta_g == 1.0);
    CHECK(config.hyper.lr_decay == 0.998);
    CHECK(config.hyper.alpha == 0.1);
    CHECK(config.hyper.rho == 0.5);
    CHECK(config.hyper.gamma == 0.005);
    CHECK(config.hyper.sigma == 10000.0);
    CHECK(config.hyper.beta == 1.0);
    CHECK(config.hyper.weight_decay == 5e-4);
    CHECK(config.participation_ratio == 0.05);
    CHECK(config.partition.num_clients == 100);
    CHECK(config.model.layer_sizes == std::vector<int>{16, 32, 10});
    std::remove(path.c_str());
}

TEST_CASE("parse_config: unknown key and range errors name the key") {
    const auto bad_key = write_temp("badkey.json", R"({"algorithm":"fedavg","rounds":1,"alpa":0.1})");
    CHECK_THROWS_WITH_AS(config::parse_config(bad_key), doctest::Contains("unknown key: alpa"),
                         ConfigError);
    std::remove(bad_key.c_str());

    const auto bad_range =
        write_temp("badrange.json", R"({"algorithm":"fedavg","rounds":1,"participation_ratio":1.5})");
    CHECK_THROWS_WITH_AS(config::parse_config(bad_range),
                         doctest::Contains("participation_ratio"), ConfigError);
    std::remove(bad_range.c_str());

    const auto nested =
        write_temp("badnested.json",
                   R"({"algorithm":"fedavg","rounds":1,"partition":{"scheme":"dirichlet","mi":3}})");
    CHECK_THROWS_WITH_AS(config::parse_config(nested),
                         doctest::Contains("unknown key: partition.mi"), ConfigError);
    std::remove(nested.c_str());

    const auto malformed = write_temp("broken.json", "{ not json");
    CHECK_THROWS_WITH_AS(config::parse_config(malformed), doctest::Contains("malformed JSON"),
                         ConfigError);
    std::remove(malformed.c_str());

    CHECK_THROWS_AS(config::parse_config("/tmp/definitely_missing_fedsim.json"), IoError);
}

TEST_CASE("parse_config: full document and --set overrides") {
    const auto path = write_temp("full.json", R"({
        "algorithm": "fedcm",
        "rounds": 7,
        "model": [4, 6, 3],
        "eta_l": 0.2,
        "partition": {"scheme": "pathological", "n": 2, "num_clients": 12, "seed": 5},
        "dataset": {"source": "synthetic", "num_classes": 3, "dim": 4, "per_class": 50}
    })");
    const auto config = config::parse_config(path);
    CHECK(config.algorithm == fl::AlgorithmKind::FedCM);
    CHECK(config.model.layer_sizes == std::vector<int>{4, 6, 3});
    CHECK(config.hyper.eta_l == 0.2);
    CHECK(config.partition.scheme == data::PartitionSpec::Scheme::pathological);
    CHECK(config.partition.n == 2);
    CHECK(config.partition_seed.has_value());
    CHECK(*config.partition_seed == 5);

    const auto overridden = config::parse_config_with_overrides(
        path, {"eta_l=0.3", "partition.num_clients=24", "algorithm=\"fedavg\""});
    CHECK(overridden.hyper.eta_l == 0.3);
    CHECK(overridden.partition.num_clients == 24);
    CHECK(overridden.algorithm == fl::AlgorithmKind::FedAvg);

    CHECK_THROWS_AS(config::parse_config_with_overrides(path, {"nonsense"}), ConfigError);
    CHECK_THROWS_AS(config::parse_config_with_overrides(path, {"alpa=3"}), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("write_csv: header, sentinels, byte stability") {
    std::vector<harness::RoundMetrics> metrics;
    const std::string header = "round,train_loss,test_accuracy,test_loss,global_update_norm,"
                               "d_t,mean_pairwise_cosine,effective_eta_l\n";
    CHECK(report::csv_to_string(metrics) == header);

    harness::RoundMetrics m;
    m.round = 0;
    m.train_loss = 2.302585093;
    m.test_accuracy = 0.5;
    m.test_loss = 1.25;
    m.global_update_norm = 0.125;
    m.d_t = std::nullopt; // undefined -> empty field
    m.mean_pairwise_cosine = 0.25;
    m.effective_eta_l = 0.1;
    metrics.push_back(m);
    const std::string body = report::csv_to_string(metrics);
    CHECK(body == header + "0,2.30258509,0.5,1.25,0.125,,0.25,0.1\n");

    const auto path = write_temp("metrics.csv", "");
    report::write_csv(metrics, path);
    const auto first = slurp(path);
    report::write_csv(metrics, path);
    CHECK(first == slurp(path));
    CHECK(first == body);
    CHECK(first.find('\r') == std::string::npos); // LF endings
    std::remove(path.c_str());
}

TEST_CASE("render_svg: structure, determinism, degenerate input") {
    report::Series one{"acc", {{0.0, 0.0}, {1.0, 1.0}}};
    const auto svg = report::svg_to_string({one});
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("viewBox=\"0 0 800 500\"") != std::string::npos);

    std::size_t polylines = 0;
    for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos)
        ++polylines;
    CHECK(polylines == 1);

    report::Series two{"loss", {{0.0, 2.0}, {1.0, 1.5}, {2.0, 1.2}}};
    const auto svg2 = report::svg_to_string({one, two});
    polylines = 0;
    for (std::size_t pos = 0; (pos = svg2.find("<polyline", pos)) != std::string::npos; ++pos)
        ++polylines;
    CHECK(polylines == 2);
    CHECK(svg2.find(">acc<") != std::string::npos);
    CHECK(svg2.find(">loss<") != std::string::npos);

    CHECK(report::svg_to_string({one, two}) == svg2); // byte-identical

    report::Series degenerate{"flat", {{1.0, 0.0}, {1.0, 1.0}}};
    CHECK_THROWS_AS(report::svg_to_string({degenerate}), ConfigError);
    report::Series short_series{"s", {{0.0, 0.0}}};
    CHECK_THROWS_AS(report::svg_to_string({short_series}), ConfigError);
    CHECK_THROWS_AS(report::svg_to_string({}), ConfigError);
}

TEST_CASE("series_from_csv: skips empty cells and finds columns") {
    const std::string csv = "round,train_loss,test_accuracy,test_loss,global_update_norm,"
                            "d_t,mean_pairwise_cosine,effective_eta_l\n"
                            "0,2.5,0.1,2.4,1.0,,0.5,0.1\n"
                            "1,2.0,,,0.9,1.5,0.4,0.0998\n"
                            "2,1.5,0.3,1.9,0.8,1.4,0.3,0.0996\n";
    const auto path = write_temp("series.csv", csv);

    const auto series = report::series_from_csv(path, {"test_accuracy", "d_t"});
    CHECK(series.size() == 2);
    CHECK(series[0].points.size() == 2); // round 1 empty -> skipped
    CHECK(series[0].points[1].first == 2.0);
    CHECK(series[0].points[1].second == 0.3);
    CHECK(series[1].points.size() == 2); // round 0 empty -> skipped
    CHECK(series[1].points[0].second == 1.5);

    CHECK_THROWS_AS(report::series_from_csv(path, {"nonexistent"}), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("selftest batteries all pass and are named") {
    const auto results = selftest::run_all();
    CHECK(results.size() >= 4);
    bool has_hyperbolic = false;
    for (const auto& r : results) {
        CHECK(r.pass);
        if (r.name == "hyperbolic") has_hyperbolic = true;
    }
    CHECK(has_hyperbolic);
}
