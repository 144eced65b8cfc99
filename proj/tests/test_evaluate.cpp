#include "augrag/error.hpp"
#include "augrag/evaluate.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace augrag;

namespace {

Judgment judgment_for(int score) {
    switch (score) {
    case 1:
        return {false, false, false, false, "j"};
    case 2:
        return {true, false, false, false, "j"};
    case 3:
        return {true, true, false, true, "j"};
    default:
        return {true, true, true, true, "j"};
    }
}

Judgment from_bits(unsigned bits) {
    return {(bits & 1u) != 0, (bits & 2u) != 0, (bits & 4u) != 0, (bits & 8u) != 0, "j"};
}

Answer answer_with(std::string text, std::vector<std::string> passages) {
    Answer a;
    a.text = std::move(text);
    a.mode = passages.empty() ? RagMode::no_rag : RagMode::rag_raw;
    a.retriever = passages.empty() ? RetrieverKind::none : RetrieverKind::tfidf;
    ChunkId id = 0;
    for (auto& p : passages) {
        a.passages_used.push_back({id, {id}, std::move(p), 1.0});
        ++id;
    }
    return a;
}

std::string words(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += (i ? " w" : "w") + std::to_string(i);
    }
    return s;
}

} // namespace

TEST_CASE("tree rubric examples") {
    CHECK(score_answer({false, true, true, true, ""}) == 1);
    CHECK(score_answer({true, false, true, true, ""}) == 2);
    CHECK(score_answer({true, true, true, true, ""}) == 4);
    CHECK(score_answer({true, true, false, true, ""}) == 3);
    CHECK(score_answer({true, true, true, false, ""}) == 3);
}

TEST_CASE("all sixteen judgments map to one score, monotonically") {
    for (unsigned bits = 0; bits < 16; ++bits) {
        const auto j = from_bits(bits);
        int expected = !j.related                                      ? 1
                       : !j.correct                                    ? 2
                       : (j.uses_context && j.respects_constraints) ? 4
                                                                       : 3;
        CHECK(score_answer(j) == expected);
        for (unsigned f = 0; f < 4; ++f) {
            if ((bits & (1u << f)) == 0) {
                CHECK(score_answer(from_bits(bits | (1u << f))) >= score_answer(j));
            }
        }
    }
}

TEST_CASE("system ids") {
    CHECK(SystemId::make(RagMode::no_rag, RetrieverKind::pvec).retriever == RetrieverKind::none);
    CHECK_THROWS_AS(SystemId::make(RagMode::rag_raw, RetrieverKind::none), InputError);
    CHECK(SystemId::make(RagMode::rag_augmented, RetrieverKind::bert_umap).mode == RagMode::rag_augmented);
}

TEST_CASE("cell means") {
    const auto cell = SystemId::make(RagMode::rag_augmented, RetrieverKind::tfidf);
    std::vector<EvalRecord> recs;
    for (int s : {4, 4, 4, 4, 3, 4, 3, 4, 3, 3}) {
        recs.push_back(make_record("q" + std::to_string(recs.size()), cell, judgment_for(s)));
    }
    recs.push_back(make_record("q0", SystemId::make(RagMode::no_rag, RetrieverKind::none), judgment_for(3)));
    auto t = aggregate(recs);
    REQUIRE(t.cell(cell).has_value());
    CHECK(std::abs(*t.cell(cell) - 3.6) < 1e-12);
    CHECK(t.count(cell) == 10);
    CHECK(*t.cell(SystemId::make(RagMode::no_rag, RetrieverKind::none)) == 3.0);
    CHECK_FALSE(t.cell(SystemId::make(RagMode::rag_raw, RetrieverKind::pvec)).has_value());
    CHECK(t.count(SystemId::make(RagMode::rag_raw, RetrieverKind::pvec)) == 0);
}

TEST_CASE("means are permutation-invariant and shard-mergeable") {
    Rng rng(8);
    std::vector<EvalRecord> recs;
    for (int i = 0; i < 200; ++i) {
        auto mode = static_cast<RagMode>(rng.below(3));
        auto ret = mode == RagMode::no_rag ? RetrieverKind::none : ScoreTable::kRetrievers[rng.below(3)];
        recs.push_back(make_record("q" + std::to_string(i), SystemId::make(mode, ret),
                                   judgment_for(static_cast<int>(rng.below(4)) + 1)));
    }
    auto base = aggregate(recs);
    auto shuffled = recs;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    }
    auto again = aggregate(shuffled);
    auto a = aggregate(std::span(recs).first(70));
    a.merge(aggregate(std::span(recs).subspan(70)));
    for (auto mode : {RagMode::rag_raw, RagMode::rag_augmented}) {
        for (auto r : ScoreTable::kRetrievers) {
            auto s = SystemId::make(mode, r);
            REQUIRE(base.cell(s).has_value());
            CHECK(std::abs(*base.cell(s) - *again.cell(s)) < 1e-12);
            CHECK(std::abs(*base.cell(s) - *a.cell(s)) < 1e-12);
            CHECK(*base.cell(s) >= 1.0);
            CHECK(*base.cell(s) <= 4.0);
        }
    }
    CHECK(base.to_csv() == a.to_csv());
}

TEST_CASE("aggregate rejects inconsistent records") {
    auto r = make_record("q", SystemId::make(RagMode::rag_raw, RetrieverKind::tfidf), judgment_for(4));
    r.score = 5;
    CHECK_THROWS_AS(aggregate(std::span(&r, 1)), InputError);
    r.score = 2;
    CHECK_THROWS_AS(aggregate(std::span(&r, 1)), InputError);
}

TEST_CASE("text table keeps the 3 x 3 layout") {
    std::vector<EvalRecord> recs{
        make_record("a", SystemId::make(RagMode::no_rag, RetrieverKind::none), judgment_for(3)),
        make_record("a", SystemId::make(RagMode::rag_raw, RetrieverKind::tfidf), judgment_for(2)),
        make_record("a", SystemId::make(RagMode::rag_augmented, RetrieverKind::tfidf), judgment_for(4)),
        make_record("b", SystemId::make(RagMode::rag_augmented, RetrieverKind::tfidf), judgment_for(3)),
    };
    auto text = aggregate(recs).to_text();
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    REQUIRE(lines.size() == 4);
    CHECK(lines[0].find("TF-IDF") != std::string::npos);
    CHECK(lines[0].find("Doc2Vec") != std::string::npos);
    CHECK(lines[0].find("BERT&UMAP") != std::string::npos);
    CHECK(split_whitespace(lines[1]).back() == "3.00");
    CHECK(lines[1].find("3.00") > lines[0].find("TF-IDF"));
    CHECK(lines[1].find("3.00") < lines[0].find("BERT&UMAP"));
    auto raw = split_whitespace(lines[2]);
    CHECK(std::vector<std::string_view>(raw.end() - 3, raw.end()) == std::vector<std::string_view>{"2.00", "-", "-"});
    auto aug = split_whitespace(lines[3]);
    CHECK(std::vector<std::string_view>(aug.end() - 3, aug.end()) == std::vector<std::string_view>{"3.50", "-", "-"});

    auto csv = aggregate(recs).to_csv();
    CHECK(csv.rfind("regime,retriever,mean,n\n", 0) == 0);
    CHECK(csv.find("rag_augmented,tfidf,3.5,2") != std::string::npos);
    CHECK(csv.find("rag_raw,pvec,,0") != std::string::npos);
}

TEST_CASE("constraint check boundaries") {
    CHECK(constraint_check(answer_with(words(60), {}), 60));
    CHECK_FALSE(constraint_check(answer_with(words(61), {}), 60));
    CHECK(constraint_check(answer_with("", {}), 60));
    CHECK(constraint_check(answer_with("  spaced \n\t out  ", {}), 2));
}

TEST_CASE("grounding overlap") {
    CHECK(grounding_overlap(answer_with("The cat sat.", {"The cat sat."})) == 1.0);
    CHECK(grounding_overlap(answer_with("dogs bark", {"cats purr softly"})) == 0.0);
    auto partial = grounding_overlap(answer_with("cat sat here", {"a cat", "it sat"}));
    REQUIRE(partial.has_value());
    CHECK(*partial == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(grounding_overlap(answer_with("anything", {})).has_value());
    CHECK(grounding_overlap(answer_with("", {"context"})) == 0.0);

    Rng rng(6);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g"};
    for (int t = 0; t < 100; ++t) {
        std::string ans, ctx;
        for (int i = 0; i < 5; ++i) {
            ans += vocab[rng.below(vocab.size())] + "x ";
            ctx += vocab[rng.below(vocab.size())] + "x ";
        }
        auto g = grounding_overlap(answer_with(ans, {ctx}));
        REQUIRE(g.has_value());
        CHECK(*g >= 0.0);
        CHECK(*g <= 1.0);
    }
}

TEST_CASE("judgment file") {
    test::TempDir dir("judge");
    std::ofstream(dir / "j.jsonl")
        << R"({"query_id": "q1", "system": {"mode": "rag_augmented", "retriever": "tfidf"}, "related": true, "correct": true, "uses_context": true, "respects_constraints": true, "judge_id": "alice"})"
        << "\n\n"
        << R"({"query_id": "q1", "system": {"mode": "no_rag", "retriever": "none"}, "related": true, "correct": false, "uses_context": false, "respects_constraints": true, "judge_id": "bob"})"
        << "\n";
    auto rows = load_judgments(dir / "j.jsonl");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].system == SystemId::make(RagMode::rag_augmented, RetrieverKind::tfidf));
    CHECK(score_answer(rows[0].judgment) == 4);
    CHECK(rows[1].judgment.judge_id == "bob");
    CHECK(score_answer(rows[1].judgment) == 2);

    std::ofstream(dir / "bad.jsonl")
        << R"({"query_id": "q1", "system": {"mode": "no_rag", "retriever": "none"}, "related": true, "correct": true, "uses_context": true, "respects_constraints": true, "judge_id": "x"})"
        << "\n"
        << R"({"query_id": "q2", "system": {"mode": "no_rag", "retriever": "none"}, "related": true, "judge_id": "x"})"
        << "\n";
    try {
        load_judgments(dir / "bad.jsonl");
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_judgments(dir / "missing.jsonl"), InputError);
}

TEST_CASE("proxy summary per system") {
    std::vector<Answer> answers{answer_with("cat sat", {"cat sat"}), answer_with(words(70), {"w1"}),
                                answer_with("free answer", {})};
    auto stats = summarize_proxies(answers, 60);
    auto raw = stats.at(SystemId::make(RagMode::rag_raw, RetrieverKind::tfidf));
    CHECK(raw.answers == 2);
    CHECK(raw.constraint_rate == 0.5);
    REQUIRE(raw.mean_grounding.has_value());
    CHECK(*raw.mean_grounding == doctest::Approx((1.0 + 1.0 / 70.0) / 2.0));
    auto base = stats.at(SystemId::make(RagMode::no_rag, RetrieverKind::none));
    CHECK(base.constraint_rate == 1.0);
    CHECK_FALSE(base.mean_grounding.has_value());
}
