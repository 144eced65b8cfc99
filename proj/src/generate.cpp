#include "augrag/generate.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace augrag {

using nlohmann::json;

namespace {

// Single pass, so placeholder-like text inside substituted values is left alone.
std::string render(std::string_view tmpl, std::span<const std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool replaced = false;
        if (tmpl[i] == '{') {
            for (const auto& [key, value] : values) {
                if (tmpl.substr(i, key.size()) == key) {
                    out.append(value);
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

std::string render_context(std::span<const ContextPassage> passages) {
    if (passages.empty()) {
        return std::string(kNoContextBlock);
    }
    std::string ctx;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) {
            ctx += "\n\n";
        }
        ctx += "[" + std::to_string(i + 1) + "] " + passages[i].text;
    }
    return ctx;
}

} // namespace

std::string_view to_string(RagMode m) {
    switch (m) {
    case RagMode::no_rag:
        return "no_rag";
    case RagMode::rag_raw:
        return "rag_raw";
    case RagMode::rag_augmented:
        return "rag_augmented";
    }
    return "?";
}

std::string_view to_string(RetrieverKind r) {
    switch (r) {
    case RetrieverKind::tfidf:
        return "tfidf";
    case RetrieverKind::pvec:
        return "pvec";
    case RetrieverKind::bert_umap:
        return "bert_umap";
    case RetrieverKind::none:
        return "none";
    }
    return "?";
}

RagMode parse_rag_mode(std::string_view s) {
    for (auto m : {RagMode::no_rag, RagMode::rag_raw, RagMode::rag_augmented}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InputError("unknown rag mode: " + std::string(s));
}

RetrieverKind parse_retriever(std::string_view s) {
    for (auto r : {RetrieverKind::tfidf, RetrieverKind::pvec, RetrieverKind::bert_umap, RetrieverKind::none}) {
        if (to_string(r) == s) {
            return r;
        }
    }
    throw InputError("unknown retriever: " + std::string(s));
}

void GenConfig::validate() const {
    if (max_words < 1) {
        throw InputError("gen config: max_words must be >= 1");
    }
    for (const char* p : {"{query}", "{context}", "{max_words}"}) {
        if (count_occurrences(prompt_template, p) != 1) {
            throw InputError(std::string("gen config: prompt template must contain exactly one ") + p);
        }
    }
}

RenderedPrompt build_prompt(std::string_view query, std::span<const ContextPassage> passages, const GenConfig& cfg) {
    cfg.validate();
    if (trim(query).empty()) {
        throw InputError("build_prompt: empty query");
    }
    RenderedPrompt out;
    out.passages.assign(passages.begin(), passages.end());
    std::stable_sort(out.passages.begin(), out.passages.end(), [](const ContextPassage& a, const ContextPassage& b) {
        return a.score != b.score ? a.score > b.score : a.center_chunk_id < b.center_chunk_id;
    });
    const std::string max_words = std::to_string(cfg.max_words);
    while (true) {
        std::string context = render_context(out.passages);
        const std::array<std::pair<std::string_view, std::string_view>, 3> values{
            {{"{query}", query}, {"{context}", context}, {"{max_words}", max_words}}};
        out.text = render(cfg.prompt_template, values);
        if (cfg.max_prompt_chars == 0 || out.text.size() <= cfg.max_prompt_chars || out.passages.empty()) {
            return out;
        }
        out.passages.pop_back();
    }
}

Answer generate_answer(LlmClient& client, const std::string& prompt, AnswerMeta meta) {
    if (trim(prompt).empty()) {
        throw InputError("generate_answer: empty prompt");
    }
    if (meta.mode == RagMode::no_rag && !meta.passages.empty()) {
        throw InputError("generate_answer: no_rag answers cannot carry passages");
    }
    Answer a;
    a.text = client.complete(prompt);
    a.mode = meta.mode;
    a.retriever = meta.mode == RagMode::no_rag ? RetrieverKind::none : meta.retriever;
    a.passages_used = std::move(meta.passages);
    a.query = std::move(meta.query);
    return a;
}

void to_json(json& j, const ContextPassage& p) {
    j = json{{"center_chunk_id", p.center_chunk_id},
             {"member_chunk_ids", p.member_chunk_ids},
             {"text", p.text},
             {"score", p.score}};
}

void from_json(const json& j, ContextPassage& p) {
    j.at("center_chunk_id").get_to(p.center_chunk_id);
    j.at("member_chunk_ids").get_to(p.member_chunk_ids);
    j.at("text").get_to(p.text);
    j.at("score").get_to(p.score);
}

void to_json(json& j, const Answer& a) {
    j = json{{"query", a.query},
             {"mode", to_string(a.mode)},
             {"retriever", to_string(a.retriever)},
             {"text", a.text},
             {"passages_used", a.passages_used}};
}

void from_json(const json& j, Answer& a) {
    j.at("query").get_to(a.query);
    a.mode = parse_rag_mode(j.at("mode").get<std::string>());
    a.retriever = parse_retriever(j.at("retriever").get<std::string>());
    j.at("text").get_to(a.text);
    j.at("passages_used").get_to(a.passages_used);
}

} // namespace augrag
