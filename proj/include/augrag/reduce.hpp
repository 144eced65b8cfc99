#pragma once

// UMAP-style nonlinear reduction: exact kNN graph, fuzzy simplicial set
// weights, and a force-directed low-dimensional layout with the curve
// parameters fixed at a = b = 1 (kernel 1 / (1 + |x - y|^2)).

#include "augrag/vector.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace augrag {

struct ReducerConfig {
    std::size_t out_dim = 2;
    std::size_t n_neighbors = 10;
    std::size_t layout_epochs = 200;
    double learning_rate = 1.0;
    std::size_t negative_rate = 5;
    std::uint64_t seed = 42;

    void validate(std::size_t n_points) const;
    bool operator==(const ReducerConfig&) const = default;
};

/// k nearest neighbors per point, ascending by distance (ties by lower id).
struct NeighborGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> ids;  ///< n x k
    std::vector<double> distances;   ///< n x k, Euclidean

    std::span<const std::uint32_t> neighbors(std::size_t i) const { return {ids.data() + i * k, k}; }
    std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }

    bool operator==(const NeighborGraph&) const = default;
};

/// Exact brute-force kNN by Euclidean distance, self excluded.
/// Throws InputError when rows() <= k.
NeighborGraph knn_graph(const Matrix& vectors, std::size_t k);

struct SigmaSolution {
    double sigma = 1.0;
    double residual = 0.0; ///< sum_j exp(-max(0, d_j - rho) / sigma) - log2(k)
};

/// Bisection (in log sigma, at most 64 steps) for the bandwidth whose
/// membership sum equals log2(k). Sigma is clamped to [1e-8, 1e8].
SigmaSolution solve_sigma(std::span<const double> dists, double rho);

struct WeightedEdge {
    std::uint32_t to = 0;
    double weight = 0.0;
};

struct FuzzyGraph {
    std::vector<double> rho;
    std::vector<double> sigma;
    std::vector<double> residual;
    std::vector<double> directed;  ///< n x k, w_ij for the kNN list of i
    /// Symmetrized w_ij + w_ji - w_ij * w_ji, one row per point, sorted by `to`.
    std::vector<std::vector<WeightedEdge>> adjacency;

    double weight(std::uint32_t i, std::uint32_t j) const;
};

FuzzyGraph fuzzy_weights(const NeighborGraph& graph);

/// SGD layout over the fuzzy graph. Edges are sampled in proportion to
/// their weight; each attractive step is followed by `negative_rate`
/// repulsive steps against uniformly drawn non-neighbors.
Matrix fit_layout(const FuzzyGraph& graph, const ReducerConfig& cfg);

class Reducer {
public:
    static Reducer fit(Matrix training_vectors, const ReducerConfig& cfg);

    /// Out-of-sample projection: the fuzzy-weighted mean of the k nearest
    /// training points' coordinates. An exact match of a training vector
    /// maps onto the coordinates of the matching training point(s).
    DenseVector transform(const DenseVector& v) const;

    const ReducerConfig& config() const { return cfg_; }
    const Matrix& training_vectors() const { return training_; }
    const Matrix& embedding() const { return embedding_; }
    const NeighborGraph& graph() const { return graph_; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<double>& sigma() const { return sigma_; }
    std::size_t input_dim() const { return training_.cols(); }

    std::string serialize() const;
    static Reducer deserialize(std::string_view data);
    void save(const std::filesystem::path& path) const;
    static Reducer load(const std::filesystem::path& path);

private:
    Reducer() = default;

    ReducerConfig cfg_;
    Matrix training_;
    Matrix embedding_;
    NeighborGraph graph_;
    std::vector<double> rho_;
    std::vector<double> sigma_;
};

} // namespace augrag
