#pragma once
#include "fedsim/matrix.hpp"
#include "fedsim/mlp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedsim::data {

struct Dataset {
    Matrix features; // N x d
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return features.rows; }
    void validate() const; // throws ConfigError
};

struct Shard {
    std::vector<std::uint32_t> indices;
};

struct PartitionSpec {
    enum class Scheme { dirichlet, pathological };
    Scheme scheme = Scheme::dirichlet;
    double mu = 0.3;      // dirichlet concentration
    int n = 2;            // pathological: classes per client
    int num_clients = 100;
    std::uint64_t seed = 1;
};

// Gaussian class blobs: centers drawn once from 3*N(0,I), samples from
// N(center, spread^2 I). Row order is class-major. `salt` selects a
// disjoint sample stream over the same centers (held-out sets).
Dataset gen_synthetic(int num_classes, int dim, int per_class, double spread,
                      std::uint64_t seed, std::uint64_t salt = 0);

// IDX pair (big-endian magic 0x803 images / 0x801 labels, u8 payload);
// features scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Per class, client proportions ~ Dirichlet(mu * 1_P), largest-remainder
// rounding; redraws (fresh substream, <=100 tries) until every shard has
// at least min_size samples.
std::vector<Shard> dirichlet_partition(const std::vector<int>& labels, int num_classes,
                                       int P, double mu, std::uint64_t seed, int min_size = 1);

// Every client gets slices of exactly n distinct classes, assigned
// round-robin through a seeded class permutation.
std::vector<Shard> pathological_partition(const std::vector<int>& labels, int num_classes,
                                          int P, int n, std::uint64_t seed);

std::vector<Shard> make_partition(const std::vector<int>& labels, int num_classes,
                                  const PartitionSpec& spec);

// Copy the selected rows into a Batch.
nn::Batch gather(const Dataset& ds, std::span<const std::uint32_t> indices);

} // namespace fedsim::data
