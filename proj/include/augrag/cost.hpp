#pragma once

#include "augrag/vector.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augrag {

/// Symbols of the retriever complexity formulas. Epoch count and dense
/// per-document encoding cost share a letter in the formulas and are kept
/// apart here.
struct CostParams {
    double n = 1;
    double m = 1;
    double d = 1;
    double e_epochs = 1;
    double e_encode = 1;
    double l = 1;
    double h = 1;
    double h_prime = 1;

    /// Throws InputError unless every field is finite and positive.
    void validate() const;
};

enum class CostMethod { tfidf, pvec, bert_reduced, bert_full };

std::string_view to_string(CostMethod m);
CostMethod parse_cost_method(std::string_view s);

/// Unit-op prediction with all proportionality constants set to 1:
///   tfidf        n*m
///   pvec         n*d*e_epochs + n*n*d
///   bert_reduced n*e_encode + n*d^2
///   bert_full    n*l*h*h' + n*n*h'
double predict_cost(CostMethod method, const CostParams& p);

enum class BenchMethod {
    tfidf_retrieval,  ///< exhaustive sparse query scoring over n chunks
    dense_pairwise,   ///< all n*n dense dot products, dimension d
    dense_query,      ///< exhaustive dense query scoring over n vectors, dimension d
};

std::string_view to_string(BenchMethod m);
BenchMethod parse_bench_method(std::string_view s);

struct BenchReport {
    BenchMethod method = BenchMethod::tfidf_retrieval;
    std::vector<std::size_t> sizes;
    std::vector<double> timings;  ///< median seconds per size
    double fitted_exponent = 0.0;
    double r_squared = 0.0;
};

struct BenchOptions {
    std::size_t trials = 3;
    std::size_t queries = 20;        ///< queries per timed batch (query methods)
    double min_batch_seconds = 0.02; ///< a timed batch repeats until this long
    std::uint64_t seed = 7;
};

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log(y) on log(x). Needs >= 2 points, all positive.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Deterministic synthetic chunk texts: n texts of m tokens drawn from a
/// fixed vocabulary.
std::vector<std::string> synthetic_texts(std::size_t n, std::size_t m, std::uint64_t seed);
/// Deterministic n x d matrix of standard normal entries.
Matrix synthetic_vectors(std::size_t n, std::size_t d, std::uint64_t seed);

/// Median wall time over `trials` for one input size.
double time_method(BenchMethod method, std::size_t n, const CostParams& p, const BenchOptions& opts);

/// Times every size (strictly increasing, at least 3) and fits the scaling
/// exponent. Runs on the calling thread only.
BenchReport run_benchmark(BenchMethod method, std::span<const std::size_t> sizes, const CostParams& p,
                          const BenchOptions& opts = {});

/// method,n,seconds rows, plus exponent and r2 per report as comments.
std::string bench_csv(std::span<const BenchReport> reports);
/// Whitespace-separated "n seconds" data for gnuplot.
std::string bench_dat(const BenchReport& report);

} // namespace augrag
