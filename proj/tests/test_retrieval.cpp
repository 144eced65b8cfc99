#include "augrag/error.hpp"
#include "augrag/retrieval.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace augrag;

namespace {

DenseVector dv(std::vector<double> v) {
    return DenseVector(std::move(v));
}

std::vector<Hit> oracle_rank(const std::vector<IndexEntry>& entries, const Vector& q, std::size_t k, Metric metric) {
    std::vector<Hit> all;
    for (const auto& e : entries) {
        const auto& a = std::get<DenseVector>(e.vector).values;
        const auto& b = std::get<DenseVector>(q).values;
        double s = 0.0;
        if (metric == Metric::cosine) {
            double ab = 0, aa = 0, bb = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            s = (aa == 0 || bb == 0) ? 0.0 : ab / (std::sqrt(aa) * std::sqrt(bb));
        } else {
            double d = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                d += (a[i] - b[i]) * (a[i] - b[i]);
            }
            s = -std::sqrt(d);
        }
        all.push_back({e.chunk_id, s});
    }
    std::sort(all.begin(), all.end(), [](const Hit& x, const Hit& y) {
        return x.score != y.score ? x.score > y.score : x.chunk_id < y.chunk_id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

std::vector<IndexEntry> random_entries(Rng& rng, std::size_t n, std::size_t d, bool with_ties) {
    std::vector<IndexEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(d);
        for (auto& x : v) {
            x = with_ties ? static_cast<double>(rng.below(3)) : rng.gaussian();
        }
        out.push_back({static_cast<ChunkId>(n - i) * 3, dv(v)});
    }
    return out;
}

} // namespace

TEST_CASE("standard basis example") {
    auto idx = VectorIndex::build({{1, dv({1, 0})}, {2, dv({0, 1})}}, Encoding::dense_full, Metric::cosine);
    auto r = top_k(idx, dv({1, 0}), 1);
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0] == Hit{1, 1.0});
    CHECK(top_k(idx, dv({1, 0}), 5).hits.size() == 2);
    CHECK(std::get<DenseVector>(r.query_repr) == dv({1, 0}));
    CHECK(r.mode == QueryMode::raw);
}

TEST_CASE("build errors") {
    CHECK(VectorIndex::build({{1, dv({1, 0, 0, 0})}, {2, dv({0, 1, 0, 0})}}, Encoding::dense_full, Metric::cosine)
              .size() == 2);
    CHECK_THROWS_AS(VectorIndex::build({}, Encoding::dense_full, Metric::cosine), InputError);
    CHECK_THROWS_AS(VectorIndex::build({{1, dv({1})}, {1, dv({2})}}, Encoding::dense_full, Metric::cosine),
                    InputError);
    CHECK_THROWS_AS(VectorIndex::build({{1, dv({1})}, {2, SparseVector{}}}, Encoding::dense_full, Metric::cosine),
                    DimensionError);
    CHECK_THROWS_AS(VectorIndex::build({{1, dv({1})}, {2, dv({1, 2})}}, Encoding::dense_full, Metric::cosine),
                    DimensionError);
    auto idx = VectorIndex::build({{1, dv({1, 0})}}, Encoding::dense_full, Metric::cosine);
    CHECK_THROWS_AS(top_k(idx, dv({1, 0, 0}), 1), DimensionError);
    CHECK_THROWS_AS(top_k(idx, SparseVector{}, 1), DimensionError);
    CHECK_THROWS_AS(top_k(idx, dv({1, 0}), 0), InputError);
}

TEST_CASE("top_k matches a brute-force sort") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const bool ties = trial % 2 == 1;
        const auto metric = trial % 4 < 2 ? Metric::cosine : Metric::euclidean;
        auto entries = random_entries(rng, 100, 6, ties);
        auto idx = VectorIndex::build(entries, Encoding::dense_full, metric);
        std::vector<double> q(6);
        for (auto& x : q) {
            x = ties ? static_cast<double>(rng.below(3)) : rng.gaussian();
        }
        auto got = top_k(idx, dv(q), 10).hits;
        auto want = oracle_rank(entries, dv(q), 10, metric);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].chunk_id == want[i].chunk_id);
            CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("increasing k extends the ranking") {
    Rng rng(3);
    auto entries = random_entries(rng, 60, 4, true);
    auto idx = VectorIndex::build(entries, Encoding::pvec, Metric::cosine);
    std::vector<double> q{1, 2, 0, 1};
    auto prev = top_k(idx, dv(q), 1).hits;
    for (std::size_t k = 2; k <= 60; ++k) {
        auto cur = top_k(idx, dv(q), k).hits;
        REQUIRE(cur.size() == k);
        CHECK(std::equal(prev.begin(), prev.end(), cur.begin()));
        for (std::size_t i = 1; i < cur.size(); ++i) {
            CHECK(cur[i - 1].score >= cur[i].score);
        }
        prev = cur;
    }
}

TEST_CASE("reduced space scores by negative distance") {
    CHECK(default_metric(Encoding::dense_reduced) == Metric::euclidean);
    CHECK(default_metric(Encoding::tfidf) == Metric::cosine);
    CHECK(default_metric(Encoding::pvec) == Metric::cosine);
    CHECK(default_metric(Encoding::dense_full) == Metric::cosine);
    auto idx = VectorIndex::build({{1, dv({0, 0})}, {2, dv({3, 4})}, {3, dv({1, 0})}}, Encoding::dense_reduced,
                                  Metric::euclidean);
    auto hits = top_k(idx, dv({0, 0}), 3).hits;
    CHECK(hits == std::vector<Hit>{{1, 0.0}, {3, -1.0}, {2, -5.0}});
}

TEST_CASE("sparse index ranks by cosine") {
    SparseVector a{{{0, 1.0}}}, b{{{0, 1.0}, {1, 1.0}}}, c{{{2, 1.0}}};
    auto idx = VectorIndex::build({{7, a}, {8, b}, {9, c}}, Encoding::tfidf, Metric::cosine);
    auto hits = top_k(idx, SparseVector{{{0, 2.0}}}, 3).hits;
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].chunk_id == 7);
    CHECK(hits[0].score == doctest::Approx(1.0));
    CHECK(hits[1].chunk_id == 8);
    CHECK(hits[1].score == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(hits[2] == Hit{9, 0.0});
}

TEST_CASE("index dump round-trips") {
    Rng rng(1);
    auto entries = random_entries(rng, 30, 5, false);
    auto idx = VectorIndex::build(entries, Encoding::dense_full, Metric::euclidean);
    auto back = VectorIndex::deserialize(idx.serialize());
    CHECK(back.size() == 30);
    CHECK(back.metric() == Metric::euclidean);
    CHECK(back.ids() == idx.ids());
    auto q = dv({0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(top_k(back, q, 7).hits == top_k(idx, q, 7).hits);

    auto sparse = VectorIndex::build({{1, SparseVector{{{0, 1.0}}}}, {2, SparseVector{{{3, 0.5}}}}},
                                     Encoding::tfidf, Metric::cosine);
    auto sback = VectorIndex::deserialize(sparse.serialize());
    CHECK(sback.is_sparse());
    CHECK(top_k(sback, SparseVector{{{3, 1.0}}}, 1).hits == top_k(sparse, SparseVector{{{3, 1.0}}}, 1).hits);
    auto bytes = idx.serialize();
    CHECK_THROWS_AS(VectorIndex::deserialize(bytes.substr(0, bytes.size() - 3)), InputError);
    CHECK_THROWS_AS(VectorIndex::deserialize("nonsense"), InputError);
}

TEST_CASE("adjacent hits merge into one passage") {
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) {
        texts.push_back("Sentence number " + std::to_string(i) + " of the document.");
    }
    auto chunks = test::chunks_from(texts);
    std::vector<Hit> hits{{5, 0.9}, {6, 0.8}};
    auto passages = merge_windows(chunks, hits);
    REQUIRE(passages.size() == 1);
    CHECK(passages[0].member_chunk_ids == std::vector<ChunkId>{4, 5, 6, 7});
    CHECK(passages[0].score == 0.9);
    CHECK(passages[0].center_chunk_id == 5);

    auto apart = merge_windows(chunks, std::vector<Hit>{{1, 0.5}, {8, 0.7}});
    REQUIRE(apart.size() == 2);
    CHECK(apart[0].center_chunk_id == 8);
    CHECK(apart[0].member_chunk_ids == std::vector<ChunkId>{7, 8, 9});
    CHECK(apart[1].member_chunk_ids == std::vector<ChunkId>{0, 1, 2});
}

TEST_CASE("merging never drops the top hit's center") {
    Rng rng(12);
    auto chunks = test::topic_corpus(10);
    for (int t = 0; t < 50; ++t) {
        std::vector<Hit> hits;
        std::set<ChunkId> used;
        while (hits.size() < 5) {
            auto id = static_cast<ChunkId>(rng.below(chunks.size()));
            if (used.insert(id).second) {
                hits.push_back({id, 1.0 - 0.1 * static_cast<double>(hits.size())});
            }
        }
        auto passages = merge_windows(chunks, hits);
        REQUIRE_FALSE(passages.empty());
        const auto& m = passages[0].member_chunk_ids;
        CHECK(std::find(m.begin(), m.end(), hits[0].chunk_id) != m.end());
        std::set<ChunkId> members;
        for (const auto& p : passages) {
            for (auto id : p.member_chunk_ids) {
                CHECK(members.insert(id).second);
                CHECK(chunks[static_cast<std::size_t>(id)].doc_id ==
                      chunks[static_cast<std::size_t>(p.center_chunk_id)].doc_id);
            }
        }
    }
}

TEST_CASE("retrieve_passages in raw and augmented modes") {
    std::vector<std::string> texts;
    Rng rng(2);
    const std::vector<std::string> words{"alpha", "bravo", "charlie", "delta", "echo",  "foxtrot", "golf",
                                         "hotel", "india", "juliet",  "kilo",  "lima",  "mike",    "november"};
    for (int i = 0; i < 60; ++i) {
        std::string s;
        for (int w = 0; w < 8; ++w) {
            s += words[rng.below(words.size())] + " ";
        }
        texts.push_back(s + "filler" + std::to_string(i) + ".");
    }
    texts[42] = "Hallucination is fluent text that is not supported by any source document.";
    auto chunks = test::chunks_from(texts);
    auto model = TfIdfModel::fit(chunks);
    std::vector<IndexEntry> entries;
    for (const auto& c : chunks) {
        entries.push_back({c.chunk_id, model.transform(c.text)});
    }
    auto idx = VectorIndex::build(entries, Encoding::tfidf, Metric::cosine);
    TfIdfEncoder enc(model);
    auto stub = StubLlmClient::fixed(texts[42]);

    RetrievalContext ctx;
    ctx.chunks = chunks;
    ctx.index = &idx;
    ctx.encoder = &enc;
    ctx.augmenter = stub.get();

    RetrievalConfig cfg;
    cfg.k = 3;
    auto aug = retrieve_passages(ctx, "Define hallucination", QueryMode::augmented, cfg);
    REQUIRE_FALSE(aug.passages.empty());
    CHECK(aug.passages[0].center_chunk_id == 42);
    CHECK(aug.passages[0].score == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(aug.searched_text == texts[42]);
    REQUIRE(aug.augmentation.has_value());
    CHECK(aug.augmentation->augmented);
    CHECK(aug.result.mode == QueryMode::augmented);
    CHECK(stub->calls() == 1);

    cfg.k = 1;
    auto raw = retrieve_passages(ctx, "alpha bravo", QueryMode::raw, cfg);
    REQUIRE(raw.passages.size() == 1);
    const auto& members = raw.passages[0].member_chunk_ids;
    CHECK(std::find(members.begin(), members.end(), raw.result.hits[0].chunk_id) != members.end());
    CHECK(raw.searched_text == "alpha bravo");
    CHECK_FALSE(raw.augmentation.has_value());
    CHECK(stub->calls() == 1);

    auto trace = trace_record("Define hallucination", aug);
    CHECK(trace["mode"] == "augmented");
    CHECK(trace["searched_text"] == texts[42]);
    CHECK(trace["hits"].at(0)["chunk_id"] == 42);

    ctx.augmenter = nullptr;
    CHECK_THROWS_AS(retrieve_passages(ctx, "x", QueryMode::augmented, cfg), InputError);
}
