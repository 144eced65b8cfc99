#include "augrag/retrieval.hpp"

#include "augrag/binary_io.hpp"
#include "augrag/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace augrag {

namespace {

constexpr std::string_view kMagic = "AGIX";
constexpr std::uint32_t kVersion = 1;

bool better(const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.chunk_id < b.chunk_id;
}

} // namespace

std::string_view to_string(Encoding e) {
    switch (e) {
    case Encoding::tfidf:
        return "tfidf";
    case Encoding::pvec:
        return "pvec";
    case Encoding::dense_reduced:
        return "dense_reduced";
    case Encoding::dense_full:
        return "dense_full";
    }
    return "?";
}

std::string_view to_string(Metric m) {
    return m == Metric::cosine ? "cosine" : "euclidean";
}

std::string_view to_string(QueryMode m) {
    return m == QueryMode::raw ? "raw" : "augmented";
}

Encoding parse_encoding(std::string_view s) {
    for (auto e : {Encoding::tfidf, Encoding::pvec, Encoding::dense_reduced, Encoding::dense_full}) {
        if (to_string(e) == s) {
            return e;
        }
    }
    throw InputError("unknown encoding: " + std::string(s));
}

Metric parse_metric(std::string_view s) {
    if (s == "cosine") {
        return Metric::cosine;
    }
    if (s == "euclidean") {
        return Metric::euclidean;
    }
    throw InputError("unknown metric: " + std::string(s));
}

QueryMode parse_query_mode(std::string_view s) {
    if (s == "raw") {
        return QueryMode::raw;
    }
    if (s == "augmented") {
        return QueryMode::augmented;
    }
    throw InputError("unknown query mode: " + std::string(s));
}

Metric default_metric(Encoding e) {
    return e == Encoding::dense_reduced ? Metric::euclidean : Metric::cosine;
}

VectorIndex VectorIndex::build(std::vector<IndexEntry> entries, Encoding encoding, Metric metric) {
    if (entries.empty()) {
        throw InputError("build_index: no vectors");
    }
    VectorIndex idx;
    idx.encoding_ = encoding;
    idx.metric_ = metric;
    idx.sparse_ = std::holds_alternative<SparseVector>(entries.front().vector);
    if (idx.sparse_ && metric == Metric::euclidean) {
        throw InputError("build_index: euclidean metric requires dense vectors");
    }
    std::set<ChunkId> seen;
    std::size_t dim = idx.sparse_ ? 0 : std::get<DenseVector>(entries.front().vector).dim();
    if (!idx.sparse_) {
        if (dim == 0) {
            throw DimensionError("build_index: dense vectors must have dim > 0");
        }
        idx.dense_ = Matrix(entries.size(), dim);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& e = entries[i];
        if (!seen.insert(e.chunk_id).second) {
            throw InputError("build_index: duplicate chunk_id " + std::to_string(e.chunk_id));
        }
        if (std::holds_alternative<SparseVector>(e.vector) != idx.sparse_) {
            throw DimensionError("build_index: mixed sparse and dense vectors");
        }
        idx.ids_.push_back(e.chunk_id);
        if (idx.sparse_) {
            auto& sv = std::get<SparseVector>(e.vector);
            idx.norms_.push_back(sv.norm());
            idx.sparse_vectors_.push_back(std::move(sv));
        } else {
            const auto& dv = std::get<DenseVector>(e.vector);
            if (dv.dim() != dim) {
                throw DimensionError("build_index: dense dimension mismatch at chunk " + std::to_string(e.chunk_id));
            }
            std::copy(dv.values.begin(), dv.values.end(), idx.dense_.row(i).begin());
            idx.norms_.push_back(dv.norm());
        }
    }
    return idx;
}

double VectorIndex::score(std::size_t i, const Vector& query, double query_norm) const {
    if (sparse_) {
        if (query_norm == 0.0 || norms_[i] == 0.0) {
            return 0.0;
        }
        return dot(sparse_vectors_[i], std::get<SparseVector>(query)) / (query_norm * norms_[i]);
    }
    const auto& q = std::get<DenseVector>(query).values;
    if (metric_ == Metric::euclidean) {
        return -std::sqrt(squared_distance(dense_.row(i), q));
    }
    if (query_norm == 0.0 || norms_[i] == 0.0) {
        return 0.0;
    }
    return dot(dense_.row(i), q) / (query_norm * norms_[i]);
}

std::vector<Hit> VectorIndex::search(const Vector& query, std::size_t k) const {
    if (k == 0) {
        throw InputError("top_k: k must be >= 1");
    }
    if (std::holds_alternative<SparseVector>(query) != sparse_) {
        throw DimensionError("top_k: query vector kind does not match the index");
    }
    double qn = 0.0;
    if (sparse_) {
        qn = std::get<SparseVector>(query).norm();
    } else {
        const auto& q = std::get<DenseVector>(query);
        if (q.dim() != dense_.cols()) {
            throw DimensionError("top_k: query dim " + std::to_string(q.dim()) + " does not match index dim " +
                                 std::to_string(dense_.cols()));
        }
        qn = q.norm();
    }
    std::vector<Hit> all(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        all[i] = {ids_[i], score(i, query, qn)};
    }
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
    all.resize(keep);
    return all;
}

std::string VectorIndex::serialize() const {
    bin::Writer w;
    w.put_magic(kMagic, kVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(encoding_));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(metric_));
    w.put<std::uint8_t>(sparse_ ? 1 : 0);
    w.put<std::uint64_t>(ids_.size());
    for (auto id : ids_) {
        w.put<std::int64_t>(id);
    }
    if (sparse_) {
        for (const auto& sv : sparse_vectors_) {
            w.put<std::uint64_t>(sv.entries.size());
            for (const auto& e : sv.entries) {
                w.put(e.term_id);
                w.put(e.weight);
            }
        }
    } else {
        w.put<std::uint64_t>(dense_.cols());
        w.put_doubles(dense_.data());
    }
    return w.bytes();
}

VectorIndex VectorIndex::deserialize(std::string_view data) {
    bin::Reader r(data, "vector index");
    if (r.expect_magic(kMagic) != kVersion) {
        r.fail("unsupported version");
    }
    auto enc = r.get<std::uint8_t>();
    auto met = r.get<std::uint8_t>();
    bool sparse = r.get<std::uint8_t>() != 0;
    if (enc > 3 || met > 1) {
        r.fail("bad encoding or metric tag");
    }
    std::vector<ChunkId> ids(r.get<std::uint64_t>());
    for (auto& id : ids) {
        id = r.get<std::int64_t>();
    }
    std::vector<IndexEntry> entries(ids.size());
    if (sparse) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            SparseVector sv;
            sv.entries.resize(r.get<std::uint64_t>());
            for (auto& e : sv.entries) {
                e.term_id = r.get<std::uint32_t>();
                e.weight = r.get<double>();
            }
            entries[i] = {ids[i], std::move(sv)};
        }
    } else {
        auto dim = r.get<std::uint64_t>();
        auto values = r.get_doubles();
        if (values.size() != dim * ids.size()) {
            r.fail("dense matrix size does not match header");
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto first = values.begin() + static_cast<std::ptrdiff_t>(i * dim);
            entries[i] = {ids[i], DenseVector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(dim)))};
        }
    }
    if (!r.at_end()) {
        r.fail("trailing bytes");
    }
    return build(std::move(entries), static_cast<Encoding>(enc), static_cast<Metric>(met));
}

RetrievalResult top_k(const VectorIndex& index, const Vector& query, std::size_t k, QueryMode mode) {
    RetrievalResult r;
    r.hits = index.search(query, k);
    r.query_repr = query;
    r.mode = mode;
    return r;
}

Vector PvecEncoder::encode(const std::string& text) const {
    return model_.infer_vector(text, infer_epochs_, seed_).vector;
}

Vector DenseEncoder::encode(const std::string& text) const {
    DenseVector v = provider_.embed(text);
    if (reducer_) {
        return reducer_->transform(v);
    }
    return v;
}

std::vector<ContextPassage> merge_windows(std::span<const Chunk> chunks, std::span<const Hit> hits) {
    std::vector<ContextPassage> merged;
    for (const auto& h : hits) {
        ContextPassage w = expand_window(chunks, h.chunk_id, h.score);
        std::vector<ContextPassage> keep;
        for (auto& p : merged) {
            bool overlaps = std::any_of(p.member_chunk_ids.begin(), p.member_chunk_ids.end(), [&](ChunkId id) {
                return std::find(w.member_chunk_ids.begin(), w.member_chunk_ids.end(), id) != w.member_chunk_ids.end();
            });
            if (!overlaps) {
                keep.push_back(std::move(p));
                continue;
            }
            std::vector<ChunkId> ids = p.member_chunk_ids;
            ids.insert(ids.end(), w.member_chunk_ids.begin(), w.member_chunk_ids.end());
            std::sort(ids.begin(), ids.end());
            ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
            if (p.score > w.score || (p.score == w.score && p.center_chunk_id < w.center_chunk_id)) {
                w.center_chunk_id = p.center_chunk_id;
                w.score = p.score;
            }
            w.member_chunk_ids = std::move(ids);
        }
        w.text.clear();
        for (ChunkId id : w.member_chunk_ids) {
            if (!w.text.empty()) {
                w.text.push_back(' ');
            }
            w.text += chunks[find_chunk(chunks, id)].text;
        }
        keep.push_back(std::move(w));
        merged = std::move(keep);
    }
    std::sort(merged.begin(), merged.end(), [](const ContextPassage& a, const ContextPassage& b) {
        return a.score != b.score ? a.score > b.score : a.center_chunk_id < b.center_chunk_id;
    });
    return merged;
}

PassageRetrieval retrieve_passages(const RetrievalContext& ctx, std::string_view query, QueryMode mode,
                                   const RetrievalConfig& cfg) {
    if (!ctx.index || !ctx.encoder) {
        throw InputError("retrieve_passages: context lacks an index or encoder");
    }
    if (ctx.encoder->encoding() != ctx.index->encoding()) {
        throw InputError("retrieve_passages: encoder does not match the index encoding");
    }
    PassageRetrieval out;
    if (mode == QueryMode::augmented) {
        if (!ctx.augmenter) {
            throw InputError("retrieve_passages: augmented mode needs an augmenter client");
        }
        out.augmentation = augment_query(*ctx.augmenter, query, ctx.augment_template, ctx.fallback);
        out.searched_text = out.augmentation->text;
    } else {
        if (trim(query).empty()) {
            throw InputError("retrieve_passages: empty query");
        }
        out.searched_text = std::string(query);
    }
    out.result = top_k(*ctx.index, ctx.encoder->encode(out.searched_text), cfg.k, mode);
    out.passages = merge_windows(ctx.chunks, out.result.hits);
    return out;
}

nlohmann::ordered_json trace_record(std::string_view query, const PassageRetrieval& r) {
    nlohmann::ordered_json j;
    j["query"] = query;
    j["mode"] = to_string(r.result.mode);
    j["searched_text"] = r.searched_text;
    j["augmented"] = r.augmentation ? r.augmentation->augmented : false;
    auto hits = nlohmann::ordered_json::array();
    for (const auto& h : r.result.hits) {
        hits.push_back({{"chunk_id", h.chunk_id}, {"score", h.score}});
    }
    j["hits"] = std::move(hits);
    return j;
}

} // namespace augrag
