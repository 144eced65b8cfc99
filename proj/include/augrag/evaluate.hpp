#pragma once

#include "augrag/generate.hpp"
#include "augrag/text.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace augrag {

/// A human assessment of one answer.
struct Judgment {
    bool related = false;
    bool correct = false;
    bool uses_context = false;
    bool respects_constraints = false;
    std::string judge_id;

    bool operator==(const Judgment&) const = default;
};

/// Tree rubric: unrelated -> 1, related but wrong -> 2, correct but ignoring
/// the context or the constraints -> 3, correct and compliant -> 4.
int score_answer(const Judgment& j);

/// Experiment system: a regime plus a retriever. no_rag always carries
/// RetrieverKind::none.
struct SystemId {
    RagMode mode = RagMode::no_rag;
    RetrieverKind retriever = RetrieverKind::none;

    static SystemId make(RagMode mode, RetrieverKind retriever);
    auto operator<=>(const SystemId&) const = default;
};

struct EvalRecord {
    std::string query_id;
    SystemId system;
    std::optional<Answer> answer;
    Judgment judgment;
    int score = 0;
};

/// Builds a record with its score derived from the judgment.
EvalRecord make_record(std::string query_id, SystemId system, Judgment judgment,
                       std::optional<Answer> answer = std::nullopt);

struct CellStats {
    double sum = 0.0;
    std::size_t count = 0;

    std::optional<double> mean() const;
    void add(double v);
    void merge(const CellStats& other);
};

/// Mean score per system, laid out as 3 regimes x 3 retrievers with the
/// no-RAG baseline as a single cell.
class ScoreTable {
public:
    static constexpr std::array<RetrieverKind, 3> kRetrievers{RetrieverKind::tfidf, RetrieverKind::pvec,
                                                               RetrieverKind::bert_umap};

    void add(const EvalRecord& r);
    void merge(const ScoreTable& other);

    /// Absent when no records landed in the cell.
    std::optional<double> cell(SystemId s) const;
    std::size_t count(SystemId s) const;

    /// Long format: regime,retriever,mean,n (mean empty when absent).
    std::string to_csv() const;
    /// Aligned text grid in the layout of the results table.
    std::string to_text() const;

private:
    std::map<SystemId, CellStats> cells_;
};

/// Throws InputError if a record's score is out of range or disagrees
/// with its judgment.
ScoreTable aggregate(std::span<const EvalRecord> records);

/// True iff the answer has at most max_words whitespace-separated words.
bool constraint_check(const Answer& answer, std::size_t max_words);

/// Fraction of the answer's distinct tokens that occur in its passages.
/// Absent when the answer has no passages; 0 for an answer without tokens.
std::optional<double> grounding_overlap(const Answer& answer, const TokenizerConfig& tok = {});

struct JudgmentRow {
    std::string query_id;
    SystemId system;
    Judgment judgment;
};

/// Jsonl, one judgment per line:
/// {"query_id", "system": {"mode", "retriever"}, "related", "correct",
///  "uses_context", "respects_constraints", "judge_id"}
std::vector<JudgmentRow> load_judgments(const std::filesystem::path& path);

struct ProxyStats {
    std::size_t answers = 0;
    double constraint_rate = 0.0;           ///< share of answers within the word limit
    std::optional<double> mean_grounding;   ///< over answers that have passages
};

/// Automated proxy checks per system over generated answers.
std::map<SystemId, ProxyStats> summarize_proxies(std::span<const Answer> answers, std::size_t max_words);

} // namespace augrag
