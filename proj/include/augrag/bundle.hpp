#pragma once
// A self-contained retrieval artifact: chunks, the vector index, and the
// model needed to encode queries into the index's space.

#include "augrag/corpus.hpp"
#include "augrag/embed.hpp"
#include "augrag/pvec.hpp"
#include "augrag/reduce.hpp"
#include "augrag/retrieval.hpp"
#include "augrag/tfidf.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace augrag {

struct BundleOptions {
    TokenizerConfig tokenizer;
    PvConfig pvec;
    std::size_t infer_epochs = 100;
    std::uint64_t infer_seed = 1;
    ReducerConfig reducer;
};

/// How dense query vectors are to be produced at query time.
struct EmbeddingSource {
    std::string identity;  ///< provider identity at build time
    std::size_t dim = 0;
};

class IndexBundle {
public:
    /// Fits whatever the encoding needs (TF-IDF model, paragraph vectors,
    /// or embeddings plus reducer) and indexes every chunk. Dense encodings
    /// need `provider`.
    static IndexBundle build(std::vector<Chunk> chunks, Encoding encoding, const BundleOptions& opts,
                             EmbeddingProvider* provider = nullptr);

    /// From prebuilt parts. The model for `encoding` must be present and
    /// must cover the same chunks.
    static IndexBundle from_tfidf(std::vector<Chunk> chunks, TfIdfModel model);
    static IndexBundle from_pvec(std::vector<Chunk> chunks, PvModel model, std::size_t infer_epochs,
                                 std::uint64_t infer_seed);
    static IndexBundle from_reducer(std::vector<Chunk> chunks, Reducer reducer, EmbeddingSource source);
    static IndexBundle from_embeddings(std::vector<Chunk> chunks, const Matrix& embeddings, EmbeddingSource source);

    /// Query encoder bound to this bundle. Dense encodings need a provider
    /// of the recorded dimension (DimensionError otherwise). The bundle must
    /// outlive the encoder.
    std::unique_ptr<QueryEncoder> make_encoder(EmbeddingProvider* provider = nullptr) const;

    Encoding encoding() const { return index_->encoding(); }
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const VectorIndex& index() const { return *index_; }
    const TfIdfModel* tfidf() const { return tfidf_.get(); }
    const PvModel* pvec() const { return pvec_.get(); }
    const Reducer* reducer() const { return reducer_.get(); }
    const EmbeddingSource& embedding_source() const { return source_; }

    /// Versioned binary dump (magic AGBD).
    std::string serialize() const;
    static IndexBundle deserialize(std::string_view data);
    void save(const std::filesystem::path& path) const;
    static IndexBundle load(const std::filesystem::path& path);

private:
    IndexBundle() = default;

    std::vector<Chunk> chunks_;
    std::unique_ptr<VectorIndex> index_;
    std::unique_ptr<TfIdfModel> tfidf_;
    std::unique_ptr<PvModel> pvec_;
    std::unique_ptr<Reducer> reducer_;
    std::size_t infer_epochs_ = 100;
    std::uint64_t infer_seed_ = 1;
    EmbeddingSource source_;
};

/// Embeds every chunk text, in chunk order.
Matrix embed_chunks(EmbeddingProvider& provider, std::span<const Chunk> chunks);

} // namespace augrag
