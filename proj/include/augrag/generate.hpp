#pragma once

#include "augrag/corpus.hpp"
#include "augrag/llm.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augrag {

enum class RagMode { no_rag, rag_raw, rag_augmented };
enum class RetrieverKind { tfidf, pvec, bert_umap, none };

std::string_view to_string(RagMode m);
std::string_view to_string(RetrieverKind r);
RagMode parse_rag_mode(std::string_view s);
RetrieverKind parse_retriever(std::string_view s);

inline constexpr std::string_view kDefaultGenTemplate =
    "Answer the question using only the information in the context below. "
    "If the context does not contain the answer, say so. "
    "Respond in at most {max_words} words.\n"
    "\n"
    "<context>\n"
    "{context}\n"
    "</context>\n"
    "\n"
    "Question: {query}\n"
    "Answer:";

inline constexpr std::string_view kNoContextBlock = "No context available.";

struct GenConfig {
    std::size_t max_words = 60;
    std::string prompt_template{kDefaultGenTemplate};
    /// Upper bound on the rendered prompt length in bytes; 0 disables it.
    std::size_t max_prompt_chars = 0;

    /// Throws InputError unless max_words >= 1 and each of {query},
    /// {context} and {max_words} occurs exactly once.
    void validate() const;
};

struct RenderedPrompt {
    std::string text;
    std::vector<ContextPassage> passages;  ///< passages that made it in, score order
};

/// Render the generation prompt. Passages are listed by descending score; if
/// the prompt exceeds max_prompt_chars, the lowest-scored passages are
/// dropped whole. No passages renders the no-context block.
RenderedPrompt build_prompt(std::string_view query, std::span<const ContextPassage> passages, const GenConfig& cfg);

struct Answer {
    std::string text;
    RagMode mode = RagMode::no_rag;
    RetrieverKind retriever = RetrieverKind::none;
    std::vector<ContextPassage> passages_used;
    std::string query;

    bool operator==(const Answer&) const = default;
};

struct AnswerMeta {
    std::string query;
    RagMode mode = RagMode::no_rag;
    RetrieverKind retriever = RetrieverKind::none;
    std::vector<ContextPassage> passages;
};

/// Ask the model and wrap the completion with its metadata. Client errors
/// propagate; there is no fallback at this stage.
Answer generate_answer(LlmClient& client, const std::string& prompt, AnswerMeta meta);

void to_json(nlohmann::json& j, const ContextPassage& p);
void from_json(const nlohmann::json& j, ContextPassage& p);
void to_json(nlohmann::json& j, const Answer& a);
void from_json(const nlohmann::json& j, Answer& a);

} // namespace augrag
