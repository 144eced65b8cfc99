#pragma once

#include "augrag/http.hpp"
#include "augrag/vector.hpp"

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace augrag {

/// Text normalization applied before hashing and lookup (surrounding
/// whitespace removed).
std::string normalize_embed_text(std::string_view text);

/// SHA-256 of the normalized text; the key of precomputed vector files.
std::string embed_text_hash(std::string_view text);

/// Source of dense embeddings. Results are cached per (provider identity,
/// normalized text) and checked against expected_dim().
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per text, in input order. Throws InputError on an empty
    /// list, DimensionError on a dimension mismatch, and whatever the
    /// backend throws for missing texts or transport failures.
    std::vector<DenseVector> embed_texts(std::span<const std::string> texts);
    DenseVector embed(const std::string& text);

    std::size_t expected_dim() const { return expected_dim_; }
    virtual std::string identity() const = 0;

    /// Number of backend fetches issued so far (cache misses reach it).
    std::size_t backend_calls() const { return backend_calls_.load(); }
    void set_cache_enabled(bool on) { cache_enabled_ = on; }

protected:
    explicit EmbeddingProvider(std::size_t expected_dim);

    /// Embed normalized texts that missed the cache.
    virtual std::vector<DenseVector> fetch(std::span<const std::string> texts) = 0;

private:
    std::size_t expected_dim_;
    bool cache_enabled_ = true;
    std::atomic<std::size_t> backend_calls_{0};
    std::mutex mu_;
    std::unordered_map<std::string, DenseVector> cache_;
};

/// Vectors looked up by text hash from a precomputed table.
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    FileEmbeddingProvider(std::filesystem::path source, std::size_t dim,
                          std::unordered_map<std::string, DenseVector> table);

    std::string identity() const override;
    std::size_t size() const { return table_.size(); }
    bool contains(std::string_view text) const;

protected:
    std::vector<DenseVector> fetch(std::span<const std::string> texts) override;

private:
    std::filesystem::path source_;
    std::unordered_map<std::string, DenseVector> table_;
};

struct RemoteEmbeddingConfig {
    HttpSettings http;
    std::size_t expected_dim = 0;
    std::size_t batch_size = 32;
};

/// Client for the model server's POST /embed endpoint.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg);

    std::string identity() const override;

protected:
    std::vector<DenseVector> fetch(std::span<const std::string> texts) override;

private:
    RemoteEmbeddingConfig cfg_;
};

/// Offline stand-in for a sentence encoder: signed feature hashing of the
/// text's tokens (FNV-1a) into `dim` buckets, L2-normalized. Lexical only,
/// but deterministic on every platform.
class HashingEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashingEmbeddingProvider(std::size_t dim);
    std::string identity() const override;

protected:
    std::vector<DenseVector> fetch(std::span<const std::string> texts) override;
};

/// Precomputed vector file:
///
///   dim=<D> count=<N>
///   <sha256 of normalized text> <D space-separated reals>   (N lines)
///
/// Throws InputError naming the offending row on malformed content.
std::unique_ptr<FileEmbeddingProvider> load_precomputed(const std::filesystem::path& path);

struct PrecomputedEntry {
    std::string text;
    DenseVector vector;
};

/// Writes unique texts only; later duplicates of a text are skipped.
void write_precomputed(const std::filesystem::path& path, std::span<const PrecomputedEntry> entries);

} // namespace augrag
