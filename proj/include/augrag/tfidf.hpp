#pragma once

#include "augrag/corpus.hpp"
#include "augrag/text.hpp"
#include "augrag/vector.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace augrag {

/// Term table over a chunk collection. Term ids are dense and assigned in
/// order of first appearance.
struct Vocabulary {
    std::unordered_map<std::string, std::uint32_t> term_to_id;
    std::vector<std::string> terms;
    std::vector<std::uint32_t> df;      ///< number of chunks containing the term
    std::vector<std::uint64_t> counts;  ///< total occurrences
    std::size_t n_docs = 0;
    double avg_unique_terms = 0.0;

    std::size_t size() const { return terms.size(); }
    std::optional<std::uint32_t> find(const std::string& term) const;
};

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> token_lists);

class TfIdfModel {
public:
    /// Throws InputError on an empty chunk list.
    static TfIdfModel fit(std::span<const Chunk> chunks, const TokenizerConfig& tokenizer = {});
    static TfIdfModel fit_texts(std::span<const std::string> texts, const TokenizerConfig& tokenizer = {});

    /// Raw count x idf per in-vocabulary term, L2-normalized. Unknown terms
    /// are dropped; a text with no known terms maps to the zero vector.
    SparseVector transform(std::string_view text) const;

    /// ln((1 + n_docs) / (1 + df)) + 1
    double idf(std::uint32_t term_id) const { return idf_[term_id]; }

    const Vocabulary& vocabulary() const { return vocab_; }
    const TokenizerConfig& tokenizer() const { return tokenizer_; }

    /// Jsonl dump: a header object then one {"term","df","count"} per line.
    std::string serialize() const;
    static TfIdfModel deserialize(std::string_view data);
    void save(const std::filesystem::path& path) const;
    static TfIdfModel load(const std::filesystem::path& path);

private:
    TfIdfModel(Vocabulary vocab, TokenizerConfig tokenizer);

    Vocabulary vocab_;
    TokenizerConfig tokenizer_;
    std::vector<double> idf_;
};

} // namespace augrag
