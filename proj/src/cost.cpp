#include "augrag/cost.hpp"

#include "augrag/error.hpp"
#include "augrag/retrieval.hpp"
#include "augrag/rng.hpp"
#include "augrag/tfidf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace augrag {

namespace {

constexpr std::size_t kSyntheticVocab = 5000;
constexpr std::size_t kQueryTokens = 6;
constexpr std::size_t kTopK = 10;

volatile double g_sink = 0.0;

// Seconds per call of fn, repeating until the batch is long enough to time.
double timed(const std::function<void()>& fn, double min_seconds) {
    using clock = std::chrono::steady_clock;
    std::size_t reps = 0;
    auto start = clock::now();
    double elapsed = 0.0;
    do {
        fn();
        ++reps;
        elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < min_seconds);
    return elapsed / static_cast<double>(reps);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double time_tfidf(std::size_t n, const CostParams& p, const BenchOptions& opts) {
    auto texts = synthetic_texts(n, static_cast<std::size_t>(p.m), opts.seed);
    auto model = TfIdfModel::fit_texts(texts);
    std::vector<IndexEntry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        entries.push_back({static_cast<ChunkId>(i), model.transform(texts[i])});
    }
    auto index = VectorIndex::build(std::move(entries), Encoding::tfidf, Metric::cosine);
    std::vector<Vector> queries;
    for (const auto& q : synthetic_texts(opts.queries, kQueryTokens, opts.seed + 1)) {
        queries.emplace_back(model.transform(q));
    }
    std::vector<double> trials;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        trials.push_back(timed(
            [&] {
                for (const auto& q : queries) {
                    g_sink = g_sink + index.search(q, kTopK).front().score;
                }
            },
            opts.min_batch_seconds));
    }
    return median(std::move(trials));
}

double time_pairwise(std::size_t n, const CostParams& p, const BenchOptions& opts) {
    const auto d = static_cast<std::size_t>(p.d);
    Matrix x = synthetic_vectors(n, d, opts.seed);
    std::vector<double> trials;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        trials.push_back(timed(
            [&] {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    auto a = x.row(i);
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += dot(a, x.row(j));
                    }
                }
                g_sink = g_sink + acc;
            },
            opts.min_batch_seconds));
    }
    return median(std::move(trials));
}

double time_dense_query(std::size_t n, const CostParams& p, const BenchOptions& opts) {
    const auto d = static_cast<std::size_t>(p.d);
    Matrix x = synthetic_vectors(n, d, opts.seed);
    std::vector<IndexEntry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        entries.push_back({static_cast<ChunkId>(i), DenseVector(std::vector<double>(r.begin(), r.end()))});
    }
    // The 2-D space is searched by distance, as the reduced index is.
    const Metric metric = d <= 2 ? Metric::euclidean : Metric::cosine;
    auto index = VectorIndex::build(std::move(entries), Encoding::dense_full, metric);
    Matrix qm = synthetic_vectors(opts.queries, d, opts.seed + 1);
    std::vector<Vector> queries;
    for (std::size_t i = 0; i < qm.rows(); ++i) {
        auto r = qm.row(i);
        queries.emplace_back(DenseVector(std::vector<double>(r.begin(), r.end())));
    }
    std::vector<double> trials;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        trials.push_back(timed(
            [&] {
                for (const auto& q : queries) {
                    g_sink = g_sink + index.search(q, kTopK).front().score;
                }
            },
            opts.min_batch_seconds));
    }
    // Per query.
    return median(std::move(trials)) / static_cast<double>(queries.size());
}

} // namespace

void CostParams::validate() const {
    const std::pair<const char*, double> fields[] = {{"n", n}, {"m", m}, {"d", d}, {"e_epochs", e_epochs},
                                                     {"e_encode", e_encode}, {"l", l}, {"h", h},
                                                     {"h_prime", h_prime}};
    for (const auto& [name, v] : fields) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw InputError(std::string("cost params: ") + name + " must be positive");
        }
    }
}

std::string_view to_string(CostMethod m) {
    switch (m) {
    case CostMethod::tfidf:
        return "tfidf";
    case CostMethod::pvec:
        return "pvec";
    case CostMethod::bert_reduced:
        return "bert_reduced";
    case CostMethod::bert_full:
        return "bert_full";
    }
    return "?";
}

CostMethod parse_cost_method(std::string_view s) {
    for (auto m : {CostMethod::tfidf, CostMethod::pvec, CostMethod::bert_reduced, CostMethod::bert_full}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InputError("unknown cost method: " + std::string(s));
}

double predict_cost(CostMethod method, const CostParams& p) {
    p.validate();
    switch (method) {
    case CostMethod::tfidf:
        return p.n * p.m;
    case CostMethod::pvec:
        return p.n * p.d * p.e_epochs + p.n * p.n * p.d;
    case CostMethod::bert_reduced:
        return p.n * p.e_encode + p.n * p.d * p.d;
    case CostMethod::bert_full:
        return p.n * p.l * p.h * p.h_prime + p.n * p.n * p.h_prime;
    }
    throw InputError("predict_cost: unknown method");
}

std::string_view to_string(BenchMethod m) {
    switch (m) {
    case BenchMethod::tfidf_retrieval:
        return "tfidf_retrieval";
    case BenchMethod::dense_pairwise:
        return "dense_pairwise";
    case BenchMethod::dense_query:
        return "dense_query";
    }
    return "?";
}

BenchMethod parse_bench_method(std::string_view s) {
    for (auto m : {BenchMethod::tfidf_retrieval, BenchMethod::dense_pairwise, BenchMethod::dense_query}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InputError("unknown benchmark method: " + std::string(s));
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("fit_loglog: need at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw InputError("fit_loglog: values must be positive");
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        sx += lx.back();
        sy += ly.back();
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) {
        throw InputError("fit_loglog: x values must not all be equal");
    }
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

std::vector<std::string> synthetic_texts(std::size_t n, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        for (std::size_t j = 0; j < m; ++j) {
            if (j > 0) {
                text.push_back(' ');
            }
            text += "w" + std::to_string(rng.below(kSyntheticVocab));
        }
        out.push_back(std::move(text));
    }
    return out;
}

Matrix synthetic_vectors(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(n, d);
    for (auto& v : x.data()) {
        v = rng.gaussian();
    }
    return x;
}

double time_method(BenchMethod method, std::size_t n, const CostParams& p, const BenchOptions& opts) {
    if (n == 0 || opts.trials == 0 || opts.queries == 0) {
        throw InputError("benchmark: n, trials and queries must be positive");
    }
    p.validate();
    switch (method) {
    case BenchMethod::tfidf_retrieval:
        return time_tfidf(n, p, opts);
    case BenchMethod::dense_pairwise:
        return time_pairwise(n, p, opts);
    case BenchMethod::dense_query:
        return time_dense_query(n, p, opts);
    }
    throw InputError("benchmark: unknown method");
}

BenchReport run_benchmark(BenchMethod method, std::span<const std::size_t> sizes, const CostParams& p,
                          const BenchOptions& opts) {
    if (sizes.size() < 3) {
        throw InputError("run_benchmark: need at least 3 sizes");
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) {
            throw InputError("run_benchmark: sizes must be strictly increasing");
        }
    }
    BenchReport r;
    r.method = method;
    r.sizes.assign(sizes.begin(), sizes.end());
    std::vector<double> xs;
    for (auto n : sizes) {
        r.timings.push_back(std::max(time_method(method, n, p, opts), 1e-12));
        xs.push_back(static_cast<double>(n));
    }
    auto fit = fit_loglog(xs, r.timings);
    r.fitted_exponent = fit.slope;
    r.r_squared = fit.r_squared;
    return r;
}

std::string bench_csv(std::span<const BenchReport> reports) {
    std::ostringstream out;
    out << "method,n,seconds\n";
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.sizes.size(); ++i) {
            out << to_string(r.method) << ',' << r.sizes[i] << ',' << fmt(r.timings[i]) << '\n';
        }
    }
    for (const auto& r : reports) {
        out << "# " << to_string(r.method) << " exponent=" << fmt(r.fitted_exponent) << " r2=" << fmt(r.r_squared)
            << '\n';
    }
    return out.str();
}

std::string bench_dat(const BenchReport& report) {
    std::ostringstream out;
    out << "# " << to_string(report.method) << " exponent " << fmt(report.fitted_exponent) << " r2 "
        << fmt(report.r_squared) << "\n# n seconds\n";
    for (std::size_t i = 0; i < report.sizes.size(); ++i) {
        out << report.sizes[i] << ' ' << fmt(report.timings[i]) << '\n';
    }
    return out.str();
}

} // namespace augrag
