#include "fedsim/data.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

namespace fedsim::data {

void Dataset::validate() const {
    if (size() == 0) throw ConfigError("dataset is empty");
    if (num_classes < 2) throw ConfigError("dataset needs >= 2 classes");
    if (labels.size() != size()) throw ConfigError("dataset labels/features mismatch");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw ConfigError("dataset label out of range");
    for (double v : features.data)
        if (!std::isfinite(v)) throw ConfigError("dataset has non-finite feature");
}

Dataset gen_synthetic(int num_classes, int dim, int per_class, double spread,
                      std::uint64_t seed, std::uint64_t salt) {
    if (num_classes < 1 || dim < 1 || per_class < 1 || spread < 0.0)
        throw ConfigError("gen_synthetic: all sizes must be positive, spread >= 0");

    // centers are salt-independent so held-out sets share the distribution
    rng::Stream center_stream = rng::derive_stream(seed, 0, rng::kEntityData);
    Matrix centers(num_classes, dim);
    for (std::size_t i = 0; i < centers.data.size(); ++i)
        centers.data[i] = 3.0 * center_stream.next_gaussian();

    rng::Stream sample_stream = rng::derive_stream(seed, salt + 1, rng::kEntityData);
    Dataset ds;
    ds.num_classes = num_classes;
    ds.features = Matrix(static_cast<std::size_t>(num_classes) * per_class, dim);
    ds.labels.resize(ds.features.rows);
    std::size_t row = 0;
    for (int k = 0; k < num_classes; ++k) {
        for (int s = 0; s < per_class; ++s, ++row) {
            double* out = ds.features.row(row);
            const double* c = centers.row(k);
            for (int j = 0; j < dim; ++j) out[j] = c[j] + spread * sample_stream.next_gaussian();
            ds.labels[row] = k;
        }
    }
    return ds;
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw IoError("truncated IDX file: " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open IDX images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open IDX labels file: " + labels_path);

    if (std::uint32_t magic = read_be_u32(img, images_path); magic != kImagesMagic)
        throw IoError("bad magic in IDX images file: " + images_path);
    const std::uint32_t count = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);

    if (std::uint32_t magic = read_be_u32(lab, labels_path); magic != kLabelsMagic)
        throw IoError("bad magic in IDX labels file: " + labels_path);
    const std::uint32_t label_count = read_be_u32(lab, labels_path);
    if (count != label_count)
        throw IoError("count mismatch between IDX images (" + std::to_string(count) +
                      ") and labels (" + std::to_string(label_count) + ")");
    if (count == 0) throw IoError("empty IDX file: " + images_path);

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset ds;
    ds.features = Matrix(count, dim);
    ds.labels.resize(count);

    std::vector<unsigned char> pixel_row(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(pixel_row.data()), static_cast<std::streamsize>(dim));
        if (!img) throw IoError("truncated IDX file: " + images_path);
        double* out = ds.features.row(i);
        for (std::size_t j = 0; j < dim; ++j) out[j] = pixel_row[j] / 255.0;
    }
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        char c;
        lab.read(&c, 1);
        if (!lab) throw IoError("truncated IDX file: " + labels_path);
        ds.labels[i] = static_cast<unsigned char>(c);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = max_label + 1;
    return ds;
}

namespace {

std::vector<std::vector<std::uint32_t>> indices_by_class(const std::vector<int>& labels,
                                                         int num_classes) {
    std::vector<std::vector<std::uint32_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ConfigError("partition: label out of range");
        by_class[labels[i]].push_back(static_cast<std::uint32_t>(i));
    }
    return by_class;
}

} // namespace

std::vector<Shard> dirichlet_partition(const std::vector<int>& labels, int num_classes,
                                       int P, double mu, std::uint64_t seed, int min_size) {
    if (!(mu > 0.0)) throw ConfigError("dirichlet_partition: mu must be > 0");
    if (P < 1) throw ConfigError("dirichlet_partition: num_clients must be >= 1");
    if (labels.empty()) throw ConfigError("dirichlet_partition: no samples");
    min_size = std::max(1, min_size);

    const auto by_class_master = indices_by_class(labels, num_classes);

    for (int attempt = 0; attempt < 100; ++attempt) {
        rng::Stream stream = rng::derive_stream(seed, static_cast<std::uint64_t>(attempt),
                                                rng::kEntityData);
        std::vector<Shard> shards(P);
        for (int k = 0; k < num_classes; ++k) {
            auto idx = by_class_master[k];
            if (idx.empty()) continue;
            stream.shuffle(idx);

            // proportions ~ Dirichlet(mu * 1_P) via normalized gammas
            std::vector<double> prop(P);
            double total = 0.0;
            for (int p = 0; p < P; ++p) {
                prop[p] = stream.next_gamma(mu);
                total += prop[p];
            }
            if (total <= 0.0) {
                prop.assign(P, 1.0);
                total = P;
            }
            for (double& v : prop) v /= total;

            // largest-remainder rounding to an exact partition of idx
            const std::size_t n = idx.size();
            std::vector<std::size_t> counts(P);
            std::vector<std::pair<double, int>> remainders(P);
            std::size_t assigned = 0;
            for (int p = 0; p < P; ++p) {
                const double exact = prop[p] * static_cast<double>(n);
                counts[p] = static_cast<std::size_t>(exact);
                remainders[p] = {exact - static_cast<double>(counts[p]), p};
                assigned += counts[p];
            }
            std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second; // deterministic tie-break
            });
            for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r % P].second];

            std::size_t pos = 0;
            for (int p = 0; p < P; ++p) {
                shards[p].indices.insert(shards[p].indices.end(), idx.begin() + pos,
                                         idx.begin() + pos + counts[p]);
                pos += counts[p];
            }
        }

        const bool ok = std::all_of(shards.begin(), shards.end(), [&](const Shard& s) {
            return s.indices.size() >= static_cast<std::size_t>(min_size);
        });
        if (ok) return shards;
    }
    throw ConfigError("partition infeasible: could not satisfy min shard size after 100 draws");
}

std::vector<Shard> pathological_partition(const std::vector<int>& labels, int num_classes,
                                          int P, int n, std::uint64_t seed) {
    if (P < 1) throw ConfigError("pathological_partition: num_clients must be >= 1");
    if (n < 1 || n > num_classes)
        throw ConfigError("pathological_partition: n must be in [1, num_classes]");
    if (static_cast<long long>(n) * P < num_classes)
        throw ConfigError("pathological_partition: n * num_clients < num_classes, "
                          "some class could not be assigned");

    auto by_class = indices_by_class(labels, num_classes);

    // seeded class permutation, then deal classes round-robin: client i
    // takes perm[(i*n + j) mod C] for j in 0..n-1 (distinct since n <= C)
    std::vector<int> perm(num_classes);
    std::iota(perm.begin(), perm.end(), 0);
    rng::Stream stream = rng::derive_stream(seed, 0, rng::kEntityData);
    stream.shuffle(perm);

    std::vector<std::vector<int>> clients_of_class(num_classes);
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < n; ++j) {
            const int k = perm[(static_cast<long long>(i) * n + j) % num_classes];
            clients_of_class[k].push_back(i);
        }

    std::vector<Shard> shards(P);
    for (int k = 0; k < num_classes; ++k) {
        const auto& takers = clients_of_class[k];
        const auto& idx = by_class[k];
        if (takers.empty()) continue;
        if (idx.size() < takers.size())
            throw ConfigError("partition infeasible: class " + std::to_string(k) + " has " +
                              std::to_string(idx.size()) + " samples for " +
                              std::to_string(takers.size()) + " slices");
        // equal contiguous slices, remainder into the last slice
        const std::size_t m = takers.size();
        const std::size_t slice = idx.size() / m;
        for (std::size_t s = 0; s < m; ++s) {
            const std::size_t begin = s * slice;
            const std::size_t end = (s + 1 == m) ? idx.size() : begin + slice;
            auto& dst = shards[takers[s]].indices;
            dst.insert(dst.end(), idx.begin() + begin, idx.begin() + end);
        }
    }
    return shards;
}

std::vector<Shard> make_partition(const std::vector<int>& labels, int num_classes,
                                  const PartitionSpec& spec) {
    if (spec.scheme == PartitionSpec::Scheme::dirichlet)
        return dirichlet_partition(labels, num_classes, spec.num_clients, spec.mu, spec.seed);
    return pathological_partition(labels, num_classes, spec.num_clients, spec.n, spec.seed);
}

nn::Batch gather(const Dataset& ds, std::span<const std::uint32_t> indices) {
    if (indices.empty()) throw ConfigError("gather: empty index set");
    nn::Batch batch;
    batch.features = Matrix(indices.size(), ds.features.cols);
    batch.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::uint32_t src = indices[i];
        if (src >= ds.size()) throw ConfigError("gather: index out of range");
        std::memcpy(batch.features.row(i), ds.features.row(src),
                    ds.features.cols * sizeof(double));
        batch.labels[i] = ds.labels[src];
    }
    return batch;
}

} // namespace fedsim::data
