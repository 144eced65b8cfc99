#pragma once

#include "augrag/llm.hpp"

#include <string>
#include <string_view>

namespace augrag {

/// Prompt used to ask the model for an answer-shaped pseudo-document.
/// Must contain exactly one {query} placeholder.
class AugmentTemplate {
public:
    explicit AugmentTemplate(std::string text, std::string name = "custom");

    static AugmentTemplate standard();
    /// "{query}": the model sees the raw question.
    static AugmentTemplate identity();

    std::string render(std::string_view query) const;
    const std::string& text() const { return text_; }
    const std::string& name() const { return name_; }

private:
    std::string text_;
    std::string name_;
};

inline constexpr std::string_view kDefaultAugmentTemplate =
    "Write a short passage, in the style of a reference document, that would answer the question: {query}";

enum class AugmentFallback { passthrough, fail };

struct AugmentResult {
    std::string text;       ///< pseudo-document, or the original query on fallback
    bool augmented = false; ///< false when the fallback returned the raw query
    std::string error;      ///< client failure message on fallback
};

/// Rewrite `query` into a pseudo-document with the model. A client failure
/// or an empty completion returns the raw query under `passthrough` and
/// throws ClientError under `fail`. Throws InputError on an empty query.
AugmentResult augment_query(LlmClient& client, std::string_view query, const AugmentTemplate& tmpl,
                            AugmentFallback fallback);

} // namespace augrag
