#include "augrag/reduce.hpp"

#include "augrag/binary_io.hpp"
#include "augrag/error.hpp"
#include "augrag/rng.hpp"
#include "augrag/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace augrag {

namespace {

constexpr std::string_view kMagic = "AGUM";
constexpr std::uint32_t kVersion = 1;
constexpr double kMinSigma = 1e-8;
constexpr double kMaxSigma = 1e8;
constexpr double kSigmaTolerance = 1e-7;
constexpr double kGradClip = 4.0;

double membership_sum(std::span<const double> dists, double rho, double sigma) {
    double s = 0.0;
    for (double d : dists) {
        s += std::exp(-std::max(0.0, d - rho) / sigma);
    }
    return s;
}

double clip(double v) {
    return std::clamp(v, -kGradClip, kGradClip);
}

struct Scored {
    double dist;
    std::uint32_t id;
    bool operator<(const Scored& o) const { return dist != o.dist ? dist < o.dist : id < o.id; }
};

bool is_neighbor(const std::vector<WeightedEdge>& row, std::uint32_t j) {
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const WeightedEdge& e, std::uint32_t v) { return e.to < v; });
    return it != row.end() && it->to == j;
}

} // namespace

void ReducerConfig::validate(std::size_t n_points) const {
    if (out_dim < 1) {
        throw InputError("reducer config: out_dim must be >= 1");
    }
    if (n_neighbors < 2 || n_neighbors >= n_points) {
        throw InputError("reducer config: need 2 <= n_neighbors < n_points (n_neighbors=" +
                         std::to_string(n_neighbors) + ", n_points=" + std::to_string(n_points) + ")");
    }
    if (layout_epochs < 1) {
        throw InputError("reducer config: layout_epochs must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw InputError("reducer config: learning_rate must be positive");
    }
}

NeighborGraph knn_graph(const Matrix& vectors, std::size_t k) {
    const std::size_t n = vectors.rows();
    if (k == 0 || n <= k) {
        throw InputError("knn_graph: need 0 < k < number of points (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
    }
    NeighborGraph g;
    g.n = n;
    g.k = k;
    g.ids.resize(n * k);
    g.distances.resize(n * k);
    std::vector<Scored> scored;
    scored.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        scored.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                scored.push_back({std::sqrt(squared_distance(vectors.row(i), vectors.row(j))),
                                  static_cast<std::uint32_t>(j)});
            }
        }
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
        for (std::size_t r = 0; r < k; ++r) {
            g.ids[i * k + r] = scored[r].id;
            g.distances[i * k + r] = scored[r].dist;
        }
    }
    return g;
}

SigmaSolution solve_sigma(std::span<const double> dists, double rho) {
    const double target = std::log2(static_cast<double>(dists.size()));
    double lo = std::log(kMinSigma);
    double hi = std::log(kMaxSigma);
    SigmaSolution best{kMinSigma, membership_sum(dists, rho, kMinSigma) - target};
    if (best.residual >= 0.0) {
        // Even the narrowest bandwidth overshoots (e.g. all distances equal rho).
        return best;
    }
    for (int iter = 0; iter < 64; ++iter) {
        double mid = 0.5 * (lo + hi);
        double sigma = std::exp(mid);
        double res = membership_sum(dists, rho, sigma) - target;
        if (std::abs(res) < std::abs(best.residual)) {
            best = {sigma, res};
        }
        if (std::abs(res) < kSigmaTolerance) {
            break;
        }
        if (res > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return best;
}

double FuzzyGraph::weight(std::uint32_t i, std::uint32_t j) const {
    const auto& row = adjacency[i];
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const WeightedEdge& e, std::uint32_t v) { return e.to < v; });
    return (it != row.end() && it->to == j) ? it->weight : 0.0;
}

FuzzyGraph fuzzy_weights(const NeighborGraph& graph) {
    const std::size_t n = graph.n;
    const std::size_t k = graph.k;
    FuzzyGraph f;
    f.rho.resize(n);
    f.sigma.resize(n);
    f.residual.resize(n);
    f.directed.resize(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        auto d = graph.dists(i);
        f.rho[i] = d.front();
        auto sol = solve_sigma(d, f.rho[i]);
        f.sigma[i] = sol.sigma;
        f.residual[i] = sol.residual;
        for (std::size_t r = 0; r < k; ++r) {
            f.directed[i * k + r] = std::exp(-std::max(0.0, d[r] - f.rho[i]) / f.sigma[i]);
        }
    }
    auto directed_weight = [&](std::uint32_t i, std::uint32_t j) {
        auto nb = graph.neighbors(i);
        for (std::size_t r = 0; r < k; ++r) {
            if (nb[r] == j) {
                return f.directed[i * k + r];
            }
        }
        return 0.0;
    };
    f.adjacency.assign(n, {});
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j : graph.neighbors(i)) {
            double a = directed_weight(i, j);
            double b = directed_weight(j, i);
            f.adjacency[i].push_back({j, a + b - a * b});
            if (b == 0.0) {
                // j does not list i, so the reverse edge would otherwise be missing.
                f.adjacency[j].push_back({i, b + a - b * a});
            }
        }
    }
    for (auto& row : f.adjacency) {
        std::sort(row.begin(), row.end(), [](const WeightedEdge& x, const WeightedEdge& y) { return x.to < y.to; });
        row.erase(std::unique(row.begin(), row.end(),
                              [](const WeightedEdge& x, const WeightedEdge& y) { return x.to == y.to; }),
                  row.end());
    }
    return f;
}

Matrix fit_layout(const FuzzyGraph& graph, const ReducerConfig& cfg) {
    const std::size_t n = graph.adjacency.size();
    cfg.validate(n);
    const std::size_t dim = cfg.out_dim;
    Rng rng(cfg.seed);

    Matrix coords(n, dim);
    for (double& x : coords.data()) {
        x = 1e-2 * rng.gaussian();
    }

    struct Edge {
        std::uint32_t head;
        std::uint32_t tail;
        double epochs_per_sample;
        double next_sample;
    };
    double max_w = 0.0;
    for (const auto& row : graph.adjacency) {
        for (const auto& e : row) {
            max_w = std::max(max_w, e.weight);
        }
    }
    std::vector<Edge> edges;
    const double n_epochs = static_cast<double>(cfg.layout_epochs);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (const auto& e : graph.adjacency[i]) {
            if (e.weight <= 0.0 || e.weight < max_w / n_epochs) {
                continue;
            }
            double eps = max_w / e.weight;
            edges.push_back({i, e.to, eps, eps});
        }
    }

    std::vector<double> grad(dim);
    for (std::size_t epoch = 0; epoch < cfg.layout_epochs; ++epoch) {
        const double alpha = cfg.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs);
        const double now = static_cast<double>(epoch);
        for (auto& e : edges) {
            if (e.next_sample > now) {
                continue;
            }
            auto x = coords.row(e.head);
            auto y = coords.row(e.tail);
            double d2 = squared_distance(x, y);
            if (d2 > 0.0) {
                double coeff = -2.0 / (1.0 + d2);
                for (std::size_t c = 0; c < dim; ++c) {
                    double g = clip(coeff * (x[c] - y[c]));
                    x[c] += g * alpha;
                    y[c] -= g * alpha;
                }
            }
            e.next_sample += e.epochs_per_sample;

            for (std::size_t s = 0; s < cfg.negative_rate; ++s) {
                std::uint32_t other = e.head;
                for (int attempt = 0; attempt < 3; ++attempt) {
                    auto cand = static_cast<std::uint32_t>(rng.below(n));
                    if (cand != e.head && !is_neighbor(graph.adjacency[e.head], cand)) {
                        other = cand;
                        break;
                    }
                }
                if (other == e.head) {
                    continue;
                }
                auto z = coords.row(other);
                double dz = squared_distance(x, z);
                if (dz > 0.0) {
                    double coeff = 2.0 / ((0.001 + dz) * (1.0 + dz));
                    for (std::size_t c = 0; c < dim; ++c) {
                        grad[c] = clip(coeff * (x[c] - z[c]));
                    }
                } else {
                    std::fill(grad.begin(), grad.end(), kGradClip);
                }
                for (std::size_t c = 0; c < dim; ++c) {
                    x[c] += grad[c] * alpha;
                }
            }
        }
    }
    return coords;
}

Reducer Reducer::fit(Matrix training_vectors, const ReducerConfig& cfg) {
    cfg.validate(training_vectors.rows());
    for (double x : training_vectors.data()) {
        if (!std::isfinite(x)) {
            throw InputError("reducer fit: non-finite input value");
        }
    }
    Reducer r;
    r.cfg_ = cfg;
    r.graph_ = knn_graph(training_vectors, cfg.n_neighbors);
    auto fuzzy = fuzzy_weights(r.graph_);
    r.embedding_ = fit_layout(fuzzy, cfg);
    r.rho_ = std::move(fuzzy.rho);
    r.sigma_ = std::move(fuzzy.sigma);
    r.training_ = std::move(training_vectors);
    return r;
}

DenseVector Reducer::transform(const DenseVector& v) const {
    if (v.dim() != training_.cols()) {
        throw DimensionError("reducer transform: expected dim " + std::to_string(training_.cols()) + ", got " +
                             std::to_string(v.dim()));
    }
    const std::size_t n = training_.rows();
    const std::size_t k = cfg_.n_neighbors;
    std::vector<Scored> scored(n);
    for (std::size_t j = 0; j < n; ++j) {
        scored[j] = {std::sqrt(squared_distance(v.values, training_.row(j))), static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());

    DenseVector out(cfg_.out_dim);
    if (scored.front().dist == 0.0) {
        std::size_t matches = 0;
        for (const auto& s : scored) {
            if (s.dist != 0.0) {
                continue;
            }
            ++matches;
            auto row = embedding_.row(s.id);
            for (std::size_t c = 0; c < out.dim(); ++c) {
                out.values[c] += row[c];
            }
        }
        for (double& x : out.values) {
            x /= static_cast<double>(matches);
        }
        return out;
    }

    std::vector<double> dists(k);
    for (std::size_t r = 0; r < k; ++r) {
        dists[r] = scored[r].dist;
    }
    const double rho = dists.front();
    const double sigma = solve_sigma(dists, rho).sigma;
    double total = 0.0;
    std::vector<double> w(k);
    for (std::size_t r = 0; r < k; ++r) {
        w[r] = std::exp(-std::max(0.0, dists[r] - rho) / sigma);
        total += w[r];
    }
    for (std::size_t r = 0; r < k; ++r) {
        auto row = embedding_.row(scored[r].id);
        for (std::size_t c = 0; c < out.dim(); ++c) {
            out.values[c] += (w[r] / total) * row[c];
        }
    }
    return out;
}

std::string Reducer::serialize() const {
    bin::Writer w;
    w.put_magic(kMagic, kVersion);
    w.put<std::uint64_t>(cfg_.out_dim);
    w.put<std::uint64_t>(cfg_.n_neighbors);
    w.put<std::uint64_t>(cfg_.layout_epochs);
    w.put(cfg_.learning_rate);
    w.put<std::uint64_t>(cfg_.negative_rate);
    w.put<std::uint64_t>(cfg_.seed);
    w.put<std::uint64_t>(training_.rows());
    w.put<std::uint64_t>(training_.cols());
    w.put_doubles(training_.data());
    w.put_doubles(embedding_.data());
    w.put<std::uint64_t>(graph_.ids.size());
    for (auto id : graph_.ids) {
        w.put(id);
    }
    w.put_doubles(graph_.distances);
    w.put_doubles(rho_);
    w.put_doubles(sigma_);
    return w.bytes();
}

Reducer Reducer::deserialize(std::string_view data) {
    bin::Reader r(data, "reducer");
    if (r.expect_magic(kMagic) != kVersion) {
        r.fail("unsupported version");
    }
    Reducer red;
    red.cfg_.out_dim = r.get<std::uint64_t>();
    red.cfg_.n_neighbors = r.get<std::uint64_t>();
    red.cfg_.layout_epochs = r.get<std::uint64_t>();
    red.cfg_.learning_rate = r.get<double>();
    red.cfg_.negative_rate = r.get<std::uint64_t>();
    red.cfg_.seed = r.get<std::uint64_t>();
    auto rows = r.get<std::uint64_t>();
    auto cols = r.get<std::uint64_t>();
    red.cfg_.validate(rows);
    red.training_ = Matrix(rows, cols);
    red.training_.data() = r.get_doubles();
    red.embedding_ = Matrix(rows, red.cfg_.out_dim);
    red.embedding_.data() = r.get_doubles();
    red.graph_.n = rows;
    red.graph_.k = red.cfg_.n_neighbors;
    red.graph_.ids.resize(r.get<std::uint64_t>());
    for (auto& id : red.graph_.ids) {
        id = r.get<std::uint32_t>();
    }
    red.graph_.distances = r.get_doubles();
    red.rho_ = r.get_doubles();
    red.sigma_ = r.get_doubles();
    if (!r.at_end()) {
        r.fail("trailing bytes");
    }
    if (red.training_.data().size() != rows * cols || red.embedding_.data().size() != rows * red.cfg_.out_dim ||
        red.graph_.ids.size() != rows * red.graph_.k || red.graph_.distances.size() != rows * red.graph_.k ||
        red.rho_.size() != rows || red.sigma_.size() != rows) {
        r.fail("array sizes do not match header");
    }
    return red;
}

void Reducer::save(const std::filesystem::path& path) const {
    write_file(path.string(), serialize());
}

Reducer Reducer::load(const std::filesystem::path& path) {
    return deserialize(read_file(path.string()));
}

} // namespace augrag
