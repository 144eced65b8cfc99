#pragma once
// Shared fixtures for the unit and acceptance tests.

#include "augrag/corpus.hpp"
#include "augrag/rng.hpp"
#include "augrag/text.hpp"
#include "augrag/vector.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

namespace augrag::test {

/// Fresh empty directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("augrag-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Three topics with disjoint vocabularies; `per_topic` chunks each, ids
/// assigned topic-major. Topic of chunk i is i / per_topic.
inline std::vector<Chunk> topic_corpus(std::size_t per_topic = 10, std::uint64_t seed = 3) {
    static const std::vector<std::vector<std::string>> vocab = {
        {"river", "boat", "fish", "water", "bridge", "shore", "current", "paddle", "harbor", "tide", "anchor", "sail"},
        {"galaxy", "orbit", "planet", "comet", "telescope", "nebula", "star", "gravity", "rocket", "moon", "asteroid",
         "eclipse"},
        {"bread", "oven", "flour", "butter", "yeast", "dough", "crust", "bakery", "sugar", "knead", "pastry", "loaf"},
    };
    Rng rng(seed);
    std::vector<Chunk> chunks;
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        for (std::size_t i = 0; i < per_topic; ++i) {
            std::string text;
            for (int w = 0; w < 10; ++w) {
                if (!text.empty()) {
                    text.push_back(' ');
                }
                text += vocab[t][rng.below(vocab[t].size())];
            }
            text.push_back('.');
            chunks.push_back({static_cast<ChunkId>(chunks.size()), "topic" + std::to_string(t), static_cast<int>(i), text});
        }
    }
    return chunks;
}

inline std::vector<Chunk> chunks_from(const std::vector<std::string>& texts, const std::string& doc = "d") {
    std::vector<Chunk> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out.push_back({static_cast<ChunkId>(i), doc, static_cast<int>(i), texts[i]});
    }
    return out;
}

struct LabeledPoints {
    Matrix points;
    std::vector<int> labels;
};

/// `per_cluster` Gaussian points (unit variance) around each of `clusters`
/// centers spaced 10 apart along separate axes.
inline LabeledPoints gaussian_clusters(std::size_t clusters, std::size_t per_cluster, std::size_t dim,
                                       std::uint64_t seed) {
    Rng rng(seed);
    LabeledPoints out{Matrix(clusters * per_cluster, dim), {}};
    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i) {
            auto row = out.points.row(c * per_cluster + i);
            for (std::size_t d = 0; d < dim; ++d) {
                row[d] = rng.gaussian() + (d == c % dim ? 10.0 : 0.0);
            }
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

/// Indices of the other rows ordered by Euclidean distance from row i
/// (ties by index).
inline std::vector<std::size_t> ranked_neighbors(const Matrix& m, std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < m.rows(); ++j) {
        if (j != i) {
            d.emplace_back(squared_distance(m.row(i), m.row(j)), j);
        }
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (const auto& p : d) {
        out.push_back(p.second);
    }
    return out;
}

/// Mean fraction of each point's k nearest neighbors in `m` sharing its label.
inline double label_purity(const Matrix& m, const std::vector<int>& labels, std::size_t k) {
    double total = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto nn = ranked_neighbors(m, i);
        std::size_t same = 0;
        for (std::size_t r = 0; r < k; ++r) {
            same += labels[nn[r]] == labels[i] ? 1 : 0;
        }
        total += static_cast<double>(same) / static_cast<double>(k);
    }
    return total / static_cast<double>(m.rows());
}

/// Trustworthiness of `low` with respect to `high`: penalizes output-space
/// neighbors that are not input-space neighbors by their input rank excess.
inline double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k) {
    const std::size_t n = high.rows();
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto in_rank = ranked_neighbors(high, i);
        std::vector<std::size_t> rank(n, 0);
        for (std::size_t r = 0; r < in_rank.size(); ++r) {
            rank[in_rank[r]] = r + 1;
        }
        auto out_nn = ranked_neighbors(low, i);
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = out_nn[r];
            if (rank[j] > k) {
                penalty += static_cast<double>(rank[j] - k);
            }
        }
    }
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

} // namespace augrag::test
