#pragma once

#include "augrag/augment.hpp"
#include "augrag/corpus.hpp"
#include "augrag/embed.hpp"
#include "augrag/pvec.hpp"
#include "augrag/reduce.hpp"
#include "augrag/tfidf.hpp"
#include "augrag/vector.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augrag {

enum class Encoding { tfidf, pvec, dense_reduced, dense_full };
enum class Metric { cosine, euclidean };
enum class QueryMode { raw, augmented };

std::string_view to_string(Encoding e);
std::string_view to_string(Metric m);
std::string_view to_string(QueryMode m);
Encoding parse_encoding(std::string_view s);
Metric parse_metric(std::string_view s);
QueryMode parse_query_mode(std::string_view s);

/// Cosine everywhere except the reduced space, which uses -distance.
Metric default_metric(Encoding e);

struct Hit {
    ChunkId chunk_id = 0;
    double score = 0.0;
    bool operator==(const Hit&) const = default;
};

struct RetrievalResult {
    std::vector<Hit> hits;  ///< score descending, ties by ascending chunk id
    Vector query_repr;
    QueryMode mode = QueryMode::raw;
};

struct IndexEntry {
    ChunkId chunk_id = 0;
    Vector vector;
};

/// Immutable exhaustive-scan index over homogeneous vectors.
class VectorIndex {
public:
    /// Throws InputError on an empty list or duplicate ids, DimensionError
    /// on mixed vector kinds or dimensions.
    static VectorIndex build(std::vector<IndexEntry> entries, Encoding encoding, Metric metric);

    /// Score every entry and keep the best k (all of them if k > size()).
    std::vector<Hit> search(const Vector& query, std::size_t k) const;

    Encoding encoding() const { return encoding_; }
    Metric metric() const { return metric_; }
    std::size_t size() const { return ids_.size(); }
    bool is_sparse() const { return sparse_; }
    std::size_t dim() const { return dense_.cols(); }
    const std::vector<ChunkId>& ids() const { return ids_; }

    std::string serialize() const;
    static VectorIndex deserialize(std::string_view data);

private:
    VectorIndex() = default;
    double score(std::size_t i, const Vector& query, double query_norm) const;

    Encoding encoding_ = Encoding::tfidf;
    Metric metric_ = Metric::cosine;
    bool sparse_ = true;
    std::vector<ChunkId> ids_;
    std::vector<SparseVector> sparse_vectors_;
    Matrix dense_;
    std::vector<double> norms_;
};

RetrievalResult top_k(const VectorIndex& index, const Vector& query, std::size_t k,
                      QueryMode mode = QueryMode::raw);

/// Maps query text into an index's vector space.
class QueryEncoder {
public:
    virtual ~QueryEncoder() = default;
    virtual Vector encode(const std::string& text) const = 0;
    virtual Encoding encoding() const = 0;
};

class TfIdfEncoder : public QueryEncoder {
public:
    explicit TfIdfEncoder(const TfIdfModel& model) : model_(model) {}
    Vector encode(const std::string& text) const override { return model_.transform(text); }
    Encoding encoding() const override { return Encoding::tfidf; }

private:
    const TfIdfModel& model_;
};

class PvecEncoder : public QueryEncoder {
public:
    PvecEncoder(const PvModel& model, std::size_t infer_epochs, std::uint64_t seed)
        : model_(model), infer_epochs_(infer_epochs), seed_(seed) {}
    Vector encode(const std::string& text) const override;
    Encoding encoding() const override { return Encoding::pvec; }

private:
    const PvModel& model_;
    std::size_t infer_epochs_;
    std::uint64_t seed_;
};

/// Dense embeddings, optionally projected through a fitted reducer.
class DenseEncoder : public QueryEncoder {
public:
    DenseEncoder(EmbeddingProvider& provider, const Reducer* reducer) : provider_(provider), reducer_(reducer) {}
    Vector encode(const std::string& text) const override;
    Encoding encoding() const override { return reducer_ ? Encoding::dense_reduced : Encoding::dense_full; }

private:
    EmbeddingProvider& provider_;
    const Reducer* reducer_;
};

struct RetrievalConfig {
    std::size_t k = 3;
};

/// Everything needed to answer a query against one index.
struct RetrievalContext {
    std::span<const Chunk> chunks;
    const VectorIndex* index = nullptr;
    const QueryEncoder* encoder = nullptr;
    LlmClient* augmenter = nullptr;  ///< required for augmented mode
    AugmentTemplate augment_template = AugmentTemplate::standard();
    AugmentFallback fallback = AugmentFallback::passthrough;
};

struct PassageRetrieval {
    std::vector<ContextPassage> passages;
    RetrievalResult result;
    std::string searched_text;  ///< the query or its pseudo-document
    std::optional<AugmentResult> augmentation;
};

/// Expand hits into +-1 windows and merge windows that share a chunk
/// (union of members, max score). Sorted by score, then center id.
std::vector<ContextPassage> merge_windows(std::span<const Chunk> chunks, std::span<const Hit> hits);

/// Raw mode searches the query itself; augmented mode first rewrites it
/// into a pseudo-document with the context's augmenter.
PassageRetrieval retrieve_passages(const RetrievalContext& ctx, std::string_view query, QueryMode mode,
                                   const RetrievalConfig& cfg);

/// One retrieval trace line: query, mode, searched text, hit ids and scores.
nlohmann::ordered_json trace_record(std::string_view query, const PassageRetrieval& r);

} // namespace augrag
