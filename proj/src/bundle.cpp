#include "augrag/bundle.hpp"

#include "augrag/binary_io.hpp"
#include "augrag/error.hpp"

namespace augrag {

namespace {

constexpr std::string_view kMagic = "AGBD";
constexpr std::uint32_t kVersion = 1;

void require_chunks(const std::vector<Chunk>& chunks) {
    if (chunks.empty()) {
        throw InputError("index bundle: no chunks");
    }
}

VectorIndex index_rows(const std::vector<Chunk>& chunks, const Matrix& rows, Encoding enc) {
    if (rows.rows() != chunks.size()) {
        throw InputError("index bundle: " + std::to_string(rows.rows()) + " vectors for " +
                         std::to_string(chunks.size()) + " chunks");
    }
    std::vector<IndexEntry> entries;
    entries.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        auto r = rows.row(i);
        entries.push_back({chunks[i].chunk_id, DenseVector(std::vector<double>(r.begin(), r.end()))});
    }
    return VectorIndex::build(std::move(entries), enc, default_metric(enc));
}

} // namespace

Matrix embed_chunks(EmbeddingProvider& provider, std::span<const Chunk> chunks) {
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) {
        texts.push_back(c.text);
    }
    auto vectors = provider.embed_texts(texts);
    Matrix m(vectors.size(), provider.expected_dim());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        std::copy(vectors[i].values.begin(), vectors[i].values.end(), m.row(i).begin());
    }
    return m;
}

IndexBundle IndexBundle::from_tfidf(std::vector<Chunk> chunks, TfIdfModel model) {
    require_chunks(chunks);
    IndexBundle b;
    std::vector<IndexEntry> entries;
    entries.reserve(chunks.size());
    for (const auto& c : chunks) {
        entries.push_back({c.chunk_id, model.transform(c.text)});
    }
    b.index_ = std::make_unique<VectorIndex>(VectorIndex::build(std::move(entries), Encoding::tfidf, Metric::cosine));
    b.tfidf_ = std::make_unique<TfIdfModel>(std::move(model));
    b.chunks_ = std::move(chunks);
    return b;
}

IndexBundle IndexBundle::from_pvec(std::vector<Chunk> chunks, PvModel model, std::size_t infer_epochs,
                                   std::uint64_t infer_seed) {
    require_chunks(chunks);
    if (infer_epochs == 0) {
        throw InputError("index bundle: infer_epochs must be >= 1");
    }
    const auto& ids = model.chunk_ids();
    if (ids.size() != chunks.size()) {
        throw InputError("index bundle: paragraph-vector model covers a different chunk set");
    }
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (ids[i] != chunks[i].chunk_id) {
            throw InputError("index bundle: paragraph-vector model covers a different chunk set");
        }
    }
    IndexBundle b;
    b.index_ = std::make_unique<VectorIndex>(index_rows(chunks, model.doc_vectors(), Encoding::pvec));
    b.pvec_ = std::make_unique<PvModel>(std::move(model));
    b.infer_epochs_ = infer_epochs;
    b.infer_seed_ = infer_seed;
    b.chunks_ = std::move(chunks);
    return b;
}

IndexBundle IndexBundle::from_reducer(std::vector<Chunk> chunks, Reducer reducer, EmbeddingSource source) {
    require_chunks(chunks);
    if (source.dim != reducer.input_dim()) {
        throw DimensionError("index bundle: embedding dim " + std::to_string(source.dim) +
                             " does not match reducer input dim " + std::to_string(reducer.input_dim()));
    }
    IndexBundle b;
    b.index_ = std::make_unique<VectorIndex>(index_rows(chunks, reducer.embedding(), Encoding::dense_reduced));
    b.reducer_ = std::make_unique<Reducer>(std::move(reducer));
    b.source_ = std::move(source);
    b.chunks_ = std::move(chunks);
    return b;
}

IndexBundle IndexBundle::from_embeddings(std::vector<Chunk> chunks, const Matrix& embeddings, EmbeddingSource source) {
    require_chunks(chunks);
    if (source.dim != embeddings.cols()) {
        throw DimensionError("index bundle: embedding matrix has dim " + std::to_string(embeddings.cols()) +
                             ", source says " + std::to_string(source.dim));
    }
    IndexBundle b;
    b.index_ = std::make_unique<VectorIndex>(index_rows(chunks, embeddings, Encoding::dense_full));
    b.source_ = std::move(source);
    b.chunks_ = std::move(chunks);
    return b;
}

IndexBundle IndexBundle::build(std::vector<Chunk> chunks, Encoding encoding, const BundleOptions& opts,
                               EmbeddingProvider* provider) {
    require_chunks(chunks);
    switch (encoding) {
    case Encoding::tfidf: {
        auto model = TfIdfModel::fit(chunks, opts.tokenizer);
        return from_tfidf(std::move(chunks), std::move(model));
    }
    case Encoding::pvec: {
        auto model = PvModel::train(chunks, opts.pvec);
        return from_pvec(std::move(chunks), std::move(model), opts.infer_epochs, opts.infer_seed);
    }
    case Encoding::dense_reduced:
    case Encoding::dense_full: {
        if (!provider) {
            throw InputError("index bundle: dense encodings need an embedding provider");
        }
        Matrix emb = embed_chunks(*provider, chunks);
        EmbeddingSource src{provider->identity(), provider->expected_dim()};
        if (encoding == Encoding::dense_full) {
            return from_embeddings(std::move(chunks), emb, std::move(src));
        }
        auto reducer = Reducer::fit(std::move(emb), opts.reducer);
        return from_reducer(std::move(chunks), std::move(reducer), std::move(src));
    }
    }
    throw InputError("index bundle: unknown encoding");
}

std::unique_ptr<QueryEncoder> IndexBundle::make_encoder(EmbeddingProvider* provider) const {
    switch (encoding()) {
    case Encoding::tfidf:
        return std::make_unique<TfIdfEncoder>(*tfidf_);
    case Encoding::pvec:
        return std::make_unique<PvecEncoder>(*pvec_, infer_epochs_, infer_seed_);
    case Encoding::dense_reduced:
    case Encoding::dense_full:
        if (!provider) {
            throw InputError("index bundle: dense queries need an embedding provider");
        }
        if (provider->expected_dim() != source_.dim) {
            throw DimensionError("index bundle: provider dim " + std::to_string(provider->expected_dim()) +
                                 " does not match index embedding dim " + std::to_string(source_.dim));
        }
        return std::make_unique<DenseEncoder>(*provider, reducer_.get());
    }
    throw InputError("index bundle: unknown encoding");
}

std::string IndexBundle::serialize() const {
    bin::Writer w;
    w.put_magic(kMagic, kVersion);
    w.put<std::uint64_t>(chunks_.size());
    for (const auto& c : chunks_) {
        w.put<std::int64_t>(c.chunk_id);
        w.put_string(c.doc_id);
        w.put<std::int32_t>(c.seq);
        w.put_string(c.text);
    }
    w.put_string(index_->serialize());
    w.put_string(tfidf_ ? tfidf_->serialize() : "");
    w.put_string(pvec_ ? pvec_->serialize() : "");
    w.put_string(reducer_ ? reducer_->serialize() : "");
    w.put<std::uint64_t>(infer_epochs_);
    w.put<std::uint64_t>(infer_seed_);
    w.put_string(source_.identity);
    w.put<std::uint64_t>(source_.dim);
    return w.bytes();
}

IndexBundle IndexBundle::deserialize(std::string_view data) {
    bin::Reader r(data, "index bundle");
    if (r.expect_magic(kMagic) != kVersion) {
        r.fail("unsupported version");
    }
    std::vector<Chunk> chunks;
    const auto n = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) {
        Chunk c;
        c.chunk_id = r.get<std::int64_t>();
        c.doc_id = r.get_string();
        c.seq = r.get<std::int32_t>();
        c.text = r.get_string();
        chunks.push_back(std::move(c));
    }
    auto index = VectorIndex::deserialize(r.get_string());
    auto tfidf = r.get_string();
    auto pvec = r.get_string();
    auto reducer = r.get_string();
    const auto infer_epochs = r.get<std::uint64_t>();
    const auto infer_seed = r.get<std::uint64_t>();
    EmbeddingSource src;
    src.identity = r.get_string();
    src.dim = r.get<std::uint64_t>();
    if (!r.at_end()) {
        r.fail("trailing bytes");
    }
    if (index.size() != chunks.size()) {
        r.fail("index size does not match chunk count");
    }

    IndexBundle b;
    switch (index.encoding()) {
    case Encoding::tfidf:
        if (tfidf.empty()) {
            r.fail("missing TF-IDF model");
        }
        b.tfidf_ = std::make_unique<TfIdfModel>(TfIdfModel::deserialize(tfidf));
        break;
    case Encoding::pvec:
        if (pvec.empty()) {
            r.fail("missing paragraph-vector model");
        }
        b.pvec_ = std::make_unique<PvModel>(PvModel::deserialize(pvec));
        break;
    case Encoding::dense_reduced:
        if (reducer.empty()) {
            r.fail("missing reducer");
        }
        b.reducer_ = std::make_unique<Reducer>(Reducer::deserialize(reducer));
        break;
    case Encoding::dense_full:
        break;
    }
    b.index_ = std::make_unique<VectorIndex>(std::move(index));
    b.chunks_ = std::move(chunks);
    b.infer_epochs_ = infer_epochs;
    b.infer_seed_ = infer_seed;
    b.source_ = std::move(src);
    return b;
}

void IndexBundle::save(const std::filesystem::path& path) const {
    write_file(path.string(), serialize());
}

IndexBundle IndexBundle::load(const std::filesystem::path& path) {
    return deserialize(read_file(path.string()));
}

} // namespace augrag
