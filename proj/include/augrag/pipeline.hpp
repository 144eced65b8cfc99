#pragma once
// Experiment runner: every query under the no-RAG baseline and under raw
// and augmented retrieval with each retriever, producing a run file of
// answers and a trace file of retrieval details.

#include "augrag/bundle.hpp"
#include "augrag/corpus.hpp"
#include "augrag/embed.hpp"
#include "augrag/generate.hpp"
#include "augrag/llm.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace augrag {

/// Environment variable naming the default model-server endpoint.
inline constexpr const char* kEndpointEnv = "AUGRAG_MODEL_ENDPOINT";

/// Value of AUGRAG_MODEL_ENDPOINT, or empty.
std::string default_endpoint_from_env();

struct ClientSpec {
    enum class Kind { stub_fixed, stub_rules, remote };
    Kind kind = Kind::remote;
    std::string fixed_response;     ///< stub_fixed: response template
    std::filesystem::path rules;    ///< stub_rules: rule file
    RemoteLlmConfig remote;         ///< remote: endpoint may be empty (env default)
};

/// Keys: type ("stub" | "remote"); stub takes "response" or "rules";
/// remote takes "endpoint", "max_tokens", "temperature", "seed",
/// "timeout_ms", "retries", "max_in_flight".
ClientSpec parse_client_spec(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::unique_ptr<LlmClient> make_llm_client(const ClientSpec& spec, const std::string& default_endpoint);

struct EmbeddingSpec {
    enum class Kind { none, hashing, file, remote };
    Kind kind = Kind::none;
    std::size_t dim = 0;              ///< hashing and remote
    std::filesystem::path vectors;    ///< file
    std::string endpoint;             ///< remote; empty means env default
    std::size_t batch_size = 32;
};

/// Keys: type ("hashing" | "file" | "remote"), "dim", "vectors", "endpoint", "batch_size".
EmbeddingSpec parse_embedding_spec(const nlohmann::json& j, const std::filesystem::path& base_dir);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSpec& spec,
                                                           const std::string& default_endpoint);

struct QuerySpec {
    std::string id;
    std::string text;
};

struct RunSpec {
    std::filesystem::path corpus;
    DocFormat corpus_format = DocFormat::plain;
    ChunkConfig chunking;
    std::vector<QuerySpec> queries;
    std::vector<RagMode> regimes{RagMode::no_rag, RagMode::rag_raw, RagMode::rag_augmented};
    std::vector<RetrieverKind> retrievers{RetrieverKind::tfidf, RetrieverKind::pvec, RetrieverKind::bert_umap};
    std::size_t k = 3;
    BundleOptions build;
    EmbeddingSpec embeddings;
    ClientSpec augmenter;
    ClientSpec generator;
    std::string augment_template{kDefaultAugmentTemplate};
    AugmentFallback fallback = AugmentFallback::passthrough;
    GenConfig generation;
    std::size_t workers = 1;
    std::filesystem::path run_out;
    std::filesystem::path trace_out;

    /// Throws InputError on empty queries, blank or duplicate query ids,
    /// empty regimes, RAG regimes without retrievers, or k == 0.
    void validate() const;
};

/// JSON run spec. Relative paths resolve against `base_dir`. Regimes and
/// retrievers are kept in canonical order with duplicates removed.
RunSpec parse_run_spec(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunSpec load_run_spec(const std::filesystem::path& path);

/// Clients supplied by the caller take precedence over the spec's.
struct RunDeps {
    LlmClient* augmenter = nullptr;
    LlmClient* generator = nullptr;
    EmbeddingProvider* embedder = nullptr;
    std::string default_endpoint;
};

struct RunOutput {
    std::vector<nlohmann::ordered_json> records;  ///< one per (query, regime, retriever)
    std::vector<nlohmann::ordered_json> traces;   ///< one per RAG record that reached retrieval
    std::size_t errors = 0;
};

/// queries * (no_rag ? 1 : 0) + queries * (RAG regimes) * retrievers
std::size_t expected_record_count(const RunSpec& spec);

/// Runs every combination. Stage failures become error records; the run
/// goes on. Output order depends only on the spec.
RunOutput run_pipeline(const RunSpec& spec, const RunDeps& deps = {});

std::string to_jsonl(std::span<const nlohmann::ordered_json> lines);
void write_run(const RunOutput& out, const std::filesystem::path& run_path,
               const std::filesystem::path& trace_path);

struct RunRecord {
    std::string query_id;
    RagMode mode = RagMode::no_rag;
    RetrieverKind retriever = RetrieverKind::none;
    std::optional<Answer> answer;            ///< absent on error records
    std::optional<std::string> augmented_query;
    std::optional<std::string> error;
};

RunRecord parse_run_record(const nlohmann::json& j);
std::vector<RunRecord> read_run_file(const std::filesystem::path& path);

} // namespace augrag
