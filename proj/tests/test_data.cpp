#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedsim/data.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/kernels.hpp"
#include "fedsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

using namespace fedsim;

namespace {

void check_partition_law(const std::vector<data::Shard>& shards, std::size_t n) {
    std::set<std::uint32_t> seen;
    std::size_t total = 0;
    for (const auto& s : shards) {
        total += s.indices.size();
        for (auto idx : s.indices) {
            CHECK(idx < n);
            CHECK(seen.insert(idx).second); // disjoint
        }
    }
    CHECK(total == n); // exhaustive
}

std::string temp_path(const std::string& name) {
    return std::string("/tmp/fedsim_test_") + name;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_be_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

// 2 images of 2x2 pixels + labels, valid IDX pair
void write_idx_fixture(const std::string& img_path, const std::string& lab_path,
                       std::uint32_t img_magic = 0x00000803, std::uint32_t img_count = 2,
                       std::uint32_t lab_count = 2) {
    std::vector<unsigned char> img;
    push_be_u32(img, img_magic);
    push_be_u32(img, img_count);
    push_be_u32(img, 2);
    push_be_u32(img, 2);
    // image 0: row-major 0,51,102,153 ; image 1: 255,204,153,102
    for (unsigned char b : {0, 51, 102, 153}) img.push_back(b);
    for (unsigned char b : {255, 204, 153, 102}) img.push_back(b);
    write_bytes(img_path, img);

    std::vector<unsigned char> lab;
    push_be_u32(lab, 0x00000801);
    push_be_u32(lab, lab_count);
    lab.push_back(7);
    lab.push_back(2);
    write_bytes(lab_path, lab);
}

} // namespace

TEST_CASE("gen_synthetic: counting, determinism, degenerate spread") {
    const auto two = data::gen_synthetic(2, 3, 1, 1.0, 5);
    CHECK(two.size() == 2);
    CHECK(two.labels == std::vector<int>{0, 1});

    const auto a = data::gen_synthetic(4, 8, 10, 1.0, 9);
    const auto b = data::gen_synthetic(4, 8, 10, 1.0, 9);
    CHECK(a.features.data == b.features.data);
    CHECK(a.labels == b.labels);

    // spread 0: all samples of class k sit exactly on its center
    const auto degenerate = data::gen_synthetic(3, 4, 5, 0.0, 11);
    for (int k = 0; k < 3; ++k)
        for (int s = 1; s < 5; ++s)
            for (int j = 0; j < 4; ++j)
                CHECK(degenerate.features(k * 5 + s, j) == degenerate.features(k * 5, j));

    // different salt: same centers, fresh samples
    const auto held_out = data::gen_synthetic(3, 4, 5, 0.0, 11, 1);
    CHECK(held_out.features.data == degenerate.features.data); // spread 0 pins both to centers
    const auto spread_a = data::gen_synthetic(3, 4, 5, 1.0, 11, 0);
    const auto spread_b = data::gen_synthetic(3, 4, 5, 1.0, 11, 1);
    CHECK(spread_a.features.data != spread_b.features.data);
}

TEST_CASE("gen_synthetic: a linear probe separates the blobs") {
    const auto ds = data::gen_synthetic(10, 16, 500, 1.0, 1);
    CHECK(ds.size() == 5000);

    // independent softmax-regression probe, plain gradient descent
    const int c = 10, d = 16;
    std::vector<double> w(static_cast<std::size_t>(c) * d, 0.0), b(c, 0.0);
    for (int epoch = 0; epoch < 40; ++epoch) {
        std::vector<double> gw(w.size(), 0.0), gb(c, 0.0);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double* x = ds.features.row(i);
            std::vector<double> logits(c);
            for (int k = 0; k < c; ++k)
                logits[k] = b[k] + kernels::dot(&w[static_cast<std::size_t>(k) * d], x, d);
            const double mx = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (int k = 0; k < c; ++k) {
                logits[k] = std::exp(logits[k] - mx);
                denom += logits[k];
            }
            for (int k = 0; k < c; ++k) {
                const double p = logits[k] / denom - (ds.labels[i] == k ? 1.0 : 0.0);
                kernels::axpy(p, x, &gw[static_cast<std::size_t>(k) * d], d);
                gb[k] += p;
            }
        }
        const double lr = 0.5 / static_cast<double>(ds.size());
        kernels::axpy(-lr, gw.data(), w.data(), w.size());
        kernels::axpy(-lr, gb.data(), b.data(), b.size());
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* x = ds.features.row(i);
        int best = 0;
        double best_v = -1e300;
        for (int k = 0; k < c; ++k) {
            const double v = b[k] + kernels::dot(&w[static_cast<std::size_t>(k) * d], x, d);
            if (v > best_v) {
                best_v = v;
                best = k;
            }
        }
        if (best == ds.labels[i]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(ds.size());
    CHECK(acc > 0.6);
}

TEST_CASE("load_idx: byte-level fixture round trip") {
    const auto img = temp_path("ok.images");
    const auto lab = temp_path("ok.labels");
    write_idx_fixture(img, lab);

    const auto ds = data::load_idx(img, lab);
    CHECK(ds.size() == 2);
    CHECK(ds.features.cols == 4);
    // row-major pixel order, /255 scaling
    CHECK(ds.features(0, 0) == 0.0);
    CHECK(ds.features(0, 1) == doctest::Approx(51.0 / 255.0));
    CHECK(ds.features(0, 3) == doctest::Approx(153.0 / 255.0));
    CHECK(ds.features(1, 0) == 1.0);
    CHECK(ds.labels == std::vector<int>{7, 2});

    std::remove(img.c_str());
    std::remove(lab.c_str());
}

TEST_CASE("load_idx: bad magic, count mismatch, truncation are distinct errors") {
    const auto img = temp_path("bad.images");
    const auto lab = temp_path("bad.labels");

    write_idx_fixture(img, lab, 0x00000802);
    CHECK_THROWS_WITH_AS(data::load_idx(img, lab), doctest::Contains("bad magic"), IoError);

    write_idx_fixture(img, lab, 0x00000803, 3, 2);
    CHECK_THROWS_WITH_AS(data::load_idx(img, lab), doctest::Contains("count mismatch"), IoError);

    // truncate payload: valid header claiming 2 images but only 1 present
    std::vector<unsigned char> short_img;
    push_be_u32(short_img, 0x00000803);
    push_be_u32(short_img, 2);
    push_be_u32(short_img, 2);
    push_be_u32(short_img, 2);
    for (unsigned char b : {0, 51, 102, 153}) short_img.push_back(b);
    write_bytes(img, short_img);
    write_idx_fixture(temp_path("unused.images"), lab);
    CHECK_THROWS_WITH_AS(data::load_idx(img, lab), doctest::Contains("truncated"), IoError);

    CHECK_THROWS_AS(data::load_idx(temp_path("missing"), lab), IoError);
    std::remove(img.c_str());
    std::remove(lab.c_str());
    std::remove(temp_path("unused.images").c_str());
}

TEST_CASE("dirichlet_partition: single client, partition law, determinism") {
    std::vector<int> labels{0, 0, 1, 1};
    const auto single = data::dirichlet_partition(labels, 2, 1, 0.5, 3);
    CHECK(single.size() == 1);
    CHECK(single[0].indices.size() == 4);

    const auto two = data::dirichlet_partition(labels, 2, 2, 0.5, 3);
    check_partition_law(two, labels.size());

    const auto again = data::dirichlet_partition(labels, 2, 2, 0.5, 3);
    for (std::size_t p = 0; p < two.size(); ++p) CHECK(two[p].indices == again[p].indices);

    CHECK_THROWS_AS(data::dirichlet_partition(labels, 2, 2, 0.0, 3), ConfigError);
}

TEST_CASE("dirichlet_partition: large mu approaches uniform balance") {
    rng::Stream label_stream(0x77);
    std::vector<int> labels(10000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto shards = data::dirichlet_partition(labels, 10, 10, 10000.0, seed);
        check_partition_law(shards, labels.size());
        for (const auto& s : shards) {
            CHECK(s.indices.size() > 800);  // within 20% of 1000
            CHECK(s.indices.size() < 1200);
            std::vector<int> hist(10, 0);
            for (auto idx : s.indices) hist[labels[idx]]++;
            const double expected = static_cast<double>(s.indices.size()) / 10.0;
            for (int count : hist) {
                CHECK(count > 0.7 * expected);
                CHECK(count < 1.3 * expected);
            }
        }
    }
}

TEST_CASE("dirichlet_partition: heterogeneity is monotone in mu") {
    std::vector<int> labels(4000);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 8);
    std::vector<double> global_hist(8, 1.0 / 8.0);

    auto mean_chi2 = [&](double mu) {
        double total = 0.0;
        int shard_count = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto shards = data::dirichlet_partition(labels, 8, 20, mu, seed);
            for (const auto& s : shards) {
                std::vector<double> hist(8, 0.0);
                for (auto idx : s.indices) hist[labels[idx]] += 1.0;
                for (auto& h : hist) h /= static_cast<double>(s.indices.size());
                double chi2 = 0.0;
                for (int k = 0; k < 8; ++k) {
                    const double diff = hist[k] - global_hist[k];
                    chi2 += diff * diff / global_hist[k];
                }
                total += chi2;
                ++shard_count;
            }
        }
        return total / shard_count;
    };

    CHECK(mean_chi2(0.3) > mean_chi2(10.0));
}

TEST_CASE("pathological_partition: forced assignment, counting, feasibility") {
    // labels {0,0,1,1}, P=2, n=1: one all-0 shard and one all-1 shard
    std::vector<int> labels{0, 0, 1, 1};
    const auto shards = data::pathological_partition(labels, 2, 2, 1, 5);
    check_partition_law(shards, 4);
    for (const auto& s : shards) {
        std::set<int> distinct;
        for (auto idx : s.indices) distinct.insert(labels[idx]);
        CHECK(distinct.size() == 1);
    }

    // n = num_classes, P = 1: everything in one shard
    const auto all = data::pathological_partition(labels, 2, 1, 2, 5);
    CHECK(all.size() == 1);
    CHECK(all[0].indices.size() == 4);

    CHECK_THROWS_AS(data::pathological_partition(labels, 2, 2, 3, 5), ConfigError);
    // n * P < classes
    CHECK_THROWS_AS(data::pathological_partition(labels, 2, 1, 1, 5), ConfigError);
}

TEST_CASE("pathological_partition: distinct-label count is exactly n") {
    std::vector<int> labels(900);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 9);
    for (int n : {1, 2, 3, 5, 9}) {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            const auto shards = data::pathological_partition(labels, 9, 12, n, seed);
            check_partition_law(shards, labels.size());
            for (const auto& s : shards) {
                std::set<int> distinct;
                for (auto idx : s.indices) distinct.insert(labels[idx]);
                CHECK(static_cast<int>(distinct.size()) == n);
            }
        }
    }
}

TEST_CASE("partition law holds across random specs") {
    rng::Stream stream(0xAB);
    for (int trial = 0; trial < 300; ++trial) {
        const int classes = 2 + static_cast<int>(stream.next_below(8));
        const int P = 1 + static_cast<int>(stream.next_below(10));
        // feasible spec: at least a couple of samples per client
        const int n_samples = std::max(classes, 2 * P) * (1 + static_cast<int>(stream.next_below(20)));
        std::vector<int> labels(n_samples);
        for (auto& l : labels) l = static_cast<int>(stream.next_below(classes));
        const double mu = 0.1 + stream.next_double() * 5.0;
        const auto shards = data::dirichlet_partition(labels, classes, P, mu, stream.next_u64());
        check_partition_law(shards, labels.size());
    }

    // too few samples for the client count: honest infeasibility error
    std::vector<int> two{0, 1};
    CHECK_THROWS_WITH_AS(data::dirichlet_partition(two, 2, 10, 0.5, 1),
                         doctest::Contains("partition infeasible"), ConfigError);
}

TEST_CASE("gather copies rows and validates indices") {
    const auto ds = data::gen_synthetic(2, 3, 2, 1.0, 1);
    const std::uint32_t idx[] = {3, 0};
    const auto batch = data::gather(ds, idx);
    CHECK(batch.size() == 2);
    CHECK(batch.labels[0] == ds.labels[3]);
    CHECK(batch.features(1, 2) == ds.features(0, 2));

    const std::uint32_t bad[] = {99};
    CHECK_THROWS_AS(data::gather(ds, bad), ConfigError);
}
