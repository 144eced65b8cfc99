#include "augrag/cost.hpp"
#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <doctest.h>

#include <cmath>

using namespace augrag;

TEST_CASE("formula examples") {
    CostParams p;
    p.n = 1000;
    p.m = 50;
    CHECK(predict_cost(CostMethod::tfidf, p) == 50000.0);

    p = {};
    p.n = 10;
    p.d = 4;
    p.e_epochs = 400;
    CHECK(predict_cost(CostMethod::pvec, p) == 16400.0);

    p = {};
    p.n = 10;
    p.e_encode = 1;
    p.d = 2;
    CHECK(predict_cost(CostMethod::bert_reduced, p) == 50.0);

    p = {};
    p.n = 3;
    p.l = 128;
    p.h = 12;
    p.h_prime = 768;
    CHECK(predict_cost(CostMethod::bert_full, p) == 3.0 * 128 * 12 * 768 + 9.0 * 768);
}

TEST_CASE("predictions increase strictly in every used parameter") {
    const CostParams base{7, 5, 3, 11, 2, 13, 4, 6};
    const std::vector<std::pair<CostMethod, std::vector<double CostParams::*>>> uses{
        {CostMethod::tfidf, {&CostParams::n, &CostParams::m}},
        {CostMethod::pvec, {&CostParams::n, &CostParams::d, &CostParams::e_epochs}},
        {CostMethod::bert_reduced, {&CostParams::n, &CostParams::e_encode, &CostParams::d}},
        {CostMethod::bert_full, {&CostParams::n, &CostParams::l, &CostParams::h, &CostParams::h_prime}},
    };
    for (const auto& [method, fields] : uses) {
        for (auto f : fields) {
            for (double bump : {0.5, 1.0, 100.0}) {
                CostParams p = base;
                p.*f += bump;
                CHECK(predict_cost(method, p) > predict_cost(method, base));
            }
        }
    }
}

TEST_CASE("parameter validation") {
    CostParams p;
    CHECK_NOTHROW(p.validate());
    p.d = 0;
    CHECK_THROWS_AS(predict_cost(CostMethod::pvec, p), InputError);
    p = {};
    p.h = -1;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.n = NAN;
    CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("method names") {
    for (auto m : {CostMethod::tfidf, CostMethod::pvec, CostMethod::bert_reduced, CostMethod::bert_full}) {
        CHECK(parse_cost_method(to_string(m)) == m);
    }
    for (auto m : {BenchMethod::tfidf_retrieval, BenchMethod::dense_pairwise, BenchMethod::dense_query}) {
        CHECK(parse_bench_method(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_cost_method("bm25"), InputError);
    CHECK_THROWS_AS(parse_bench_method("x"), InputError);
}

TEST_CASE("log-log fit recovers exact power laws") {
    std::vector<double> x{1, 2, 4, 8, 16}, y1, y2;
    for (double v : x) {
        y1.push_back(3.0 * v);
        y2.push_back(0.5 * v * v);
    }
    auto f1 = fit_loglog(x, y1);
    CHECK(f1.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::exp(f1.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f1.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    auto f2 = fit_loglog(x, y2);
    CHECK(f2.slope == doctest::Approx(2.0).epsilon(1e-12));
    std::vector<double> bad{1, 0, 1, 1, 1};
    CHECK_THROWS_AS(fit_loglog(x, bad), InputError);
    CHECK_THROWS_AS(fit_loglog(std::span(x).first(1), std::span(y1).first(1)), InputError);
}

TEST_CASE("synthetic inputs are deterministic") {
    CHECK(synthetic_texts(50, 8, 3) == synthetic_texts(50, 8, 3));
    CHECK(synthetic_texts(50, 8, 3) != synthetic_texts(50, 8, 4));
    auto t = synthetic_texts(10, 12, 1);
    CHECK(t.size() == 10);
    for (const auto& s : t) {
        CHECK(split_whitespace(s).size() == 12);
    }
    CHECK(synthetic_vectors(20, 4, 9) == synthetic_vectors(20, 4, 9));
    CHECK(synthetic_vectors(20, 4, 9).rows() == 20);
    CHECK(synthetic_vectors(20, 4, 9).cols() == 4);
}

TEST_CASE("benchmark preconditions and report shape") {
    std::vector<std::size_t> two{100, 200};
    CostParams p;
    p.m = 10;
    p.d = 8;
    CHECK_THROWS_AS(run_benchmark(BenchMethod::tfidf_retrieval, two, p), InputError);
    std::vector<std::size_t> unordered{100, 300, 200};
    CHECK_THROWS_AS(run_benchmark(BenchMethod::tfidf_retrieval, unordered, p), InputError);

    BenchOptions opts;
    opts.trials = 1;
    opts.min_batch_seconds = 0.001;
    std::vector<std::size_t> sizes{50, 100, 200};
    for (auto m : {BenchMethod::tfidf_retrieval, BenchMethod::dense_pairwise, BenchMethod::dense_query}) {
        auto r = run_benchmark(m, sizes, p, opts);
        CHECK(r.method == m);
        CHECK(r.sizes == sizes);
        REQUIRE(r.timings.size() == 3);
        for (double t : r.timings) {
            CHECK(t > 0.0);
        }
        CHECK(std::isfinite(r.fitted_exponent));
    }
    auto r = run_benchmark(BenchMethod::dense_query, sizes, p, opts);
    auto csv = bench_csv(std::span(&r, 1));
    CHECK(csv.find("method,n,seconds") != std::string::npos);
    CHECK(csv.find("dense_query,200,") != std::string::npos);
    auto dat = bench_dat(r);
    CHECK(split_whitespace(dat).size() >= 6);
}
