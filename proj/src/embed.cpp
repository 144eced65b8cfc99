#include "augrag/embed.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace augrag {

using nlohmann::json;

std::string normalize_embed_text(std::string_view text) {
    return std::string(trim(text));
}

std::string embed_text_hash(std::string_view text) {
    return sha256_hex(normalize_embed_text(text));
}

EmbeddingProvider::EmbeddingProvider(std::size_t expected_dim) : expected_dim_(expected_dim) {
    if (expected_dim_ == 0) {
        throw InputError("embedding provider: expected_dim must be positive");
    }
}

std::vector<DenseVector> EmbeddingProvider::embed_texts(std::span<const std::string> texts) {
    if (texts.empty()) {
        throw InputError("embed_texts: empty text list");
    }
    const std::string id = identity();
    std::vector<std::string> normalized;
    std::vector<std::string> keys;
    normalized.reserve(texts.size());
    keys.reserve(texts.size());
    for (const auto& t : texts) {
        normalized.push_back(normalize_embed_text(t));
        keys.push_back(sha256_hex(id + "\n" + normalized.back()));
    }

    std::vector<DenseVector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> missing_texts;
    {
        std::lock_guard lock(mu_);
        std::set<std::string> queued;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = cache_enabled_ ? cache_.find(keys[i]) : cache_.end();
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(i);
                if (queued.insert(keys[i]).second) {
                    missing_texts.push_back(normalized[i]);
                }
            }
        }
    }
    if (missing.empty()) {
        return out;
    }

    ++backend_calls_;
    auto fetched = fetch(missing_texts);
    if (fetched.size() != missing_texts.size()) {
        throw ClientError("embedding backend returned " + std::to_string(fetched.size()) + " vectors for " +
                          std::to_string(missing_texts.size()) + " texts");
    }
    std::unordered_map<std::string, const DenseVector*> by_text;
    for (std::size_t i = 0; i < fetched.size(); ++i) {
        const auto& v = fetched[i];
        if (v.dim() != expected_dim_) {
            throw DimensionError("embedding dimension mismatch: got " + std::to_string(v.dim()) + ", expected " +
                                 std::to_string(expected_dim_));
        }
        for (double x : v.values) {
            if (!std::isfinite(x)) {
                throw ClientError("embedding backend returned a non-finite value");
            }
        }
        by_text.emplace(missing_texts[i], &v);
    }
    std::lock_guard lock(mu_);
    for (std::size_t i : missing) {
        out[i] = *by_text.at(normalized[i]);
        if (cache_enabled_) {
            cache_.emplace(keys[i], out[i]);
        }
    }
    return out;
}

DenseVector EmbeddingProvider::embed(const std::string& text) {
    return embed_texts(std::span<const std::string>(&text, 1)).front();
}

FileEmbeddingProvider::FileEmbeddingProvider(std::filesystem::path source, std::size_t dim,
                                             std::unordered_map<std::string, DenseVector> table)
    : EmbeddingProvider(dim), source_(std::move(source)), table_(std::move(table)) {}

std::string FileEmbeddingProvider::identity() const {
    return "file:" + source_.string();
}

bool FileEmbeddingProvider::contains(std::string_view text) const {
    return table_.contains(embed_text_hash(text));
}

std::vector<DenseVector> FileEmbeddingProvider::fetch(std::span<const std::string> texts) {
    std::vector<DenseVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto h = sha256_hex(t);
        auto it = table_.find(h);
        if (it == table_.end()) {
            throw InputError("precomputed vectors " + source_.string() + " have no entry for text hash " + h);
        }
        out.push_back(it->second);
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg)
    : EmbeddingProvider(cfg.expected_dim), cfg_(std::move(cfg)) {
    if (cfg_.batch_size == 0) {
        throw InputError("remote embedding: batch_size must be positive");
    }
}

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dim) : EmbeddingProvider(dim) {}

std::string HashingEmbeddingProvider::identity() const {
    return "hashing:" + std::to_string(expected_dim());
}

std::vector<DenseVector> HashingEmbeddingProvider::fetch(std::span<const std::string> texts) {
    std::vector<DenseVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        DenseVector v(expected_dim());
        for (const auto& tok : tokenize(t)) {
            std::uint64_t h = 14695981039346656037ull;
            for (unsigned char c : tok) {
                h = (h ^ c) * 1099511628211ull;
            }
            v.values[h % expected_dim()] += (h >> 63) ? -1.0 : 1.0;
        }
        const double n = v.norm();
        if (n > 0.0) {
            for (auto& x : v.values) {
                x /= n;
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string RemoteEmbeddingProvider::identity() const {
    return "remote:" + cfg_.http.endpoint;
}

std::vector<DenseVector> RemoteEmbeddingProvider::fetch(std::span<const std::string> texts) {
    std::vector<DenseVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += cfg_.batch_size) {
        auto batch = texts.subspan(start, std::min(cfg_.batch_size, texts.size() - start));
        json body;
        body["texts"] = std::vector<std::string>(batch.begin(), batch.end());
        json reply = post_json(cfg_.http, "/embed", body);
        try {
            const auto& vectors = reply.at("vectors");
            if (!vectors.is_array() || vectors.size() != batch.size()) {
                throw ClientError("/embed returned " + std::to_string(vectors.size()) + " vectors for " +
                                  std::to_string(batch.size()) + " texts");
            }
            auto dim = reply.at("dim").get<std::size_t>();
            if (dim != expected_dim()) {
                throw DimensionError("embedding dimension mismatch: server reports dim " + std::to_string(dim) +
                                     ", expected " + std::to_string(expected_dim()));
            }
            for (const auto& v : vectors) {
                out.emplace_back(v.get<std::vector<double>>());
            }
        } catch (const json::exception& e) {
            throw ClientError(std::string("/embed reply does not match the protocol: ") + e.what());
        }
    }
    return out;
}

std::unique_ptr<FileEmbeddingProvider> load_precomputed(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read precomputed vectors: " + path.string());
    }
    const std::string where = "precomputed vectors " + path.string();
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw InputError(where + ": empty file");
    }
    std::size_t dim = 0;
    std::size_t count = 0;
    {
        std::istringstream hs(line);
        std::string a, b, extra;
        if (!(hs >> a >> b) || (hs >> extra) || a.rfind("dim=", 0) != 0 || b.rfind("count=", 0) != 0) {
            throw InputError(where + ": malformed header, expected 'dim=<D> count=<N>'");
        }
        auto parse_size = [&](std::string_view s) {
            std::size_t v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) {
                throw InputError(where + ": malformed header value '" + std::string(s) + "'");
            }
            return v;
        };
        dim = parse_size(std::string_view(a).substr(4));
        count = parse_size(std::string_view(b).substr(6));
    }
    if (dim == 0) {
        throw InputError(where + ": dim must be positive");
    }
    std::unordered_map<std::string, DenseVector> table;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        ++row;
        auto fields = split_whitespace(line);
        const std::string at_row = where + ": row " + std::to_string(row);
        if (fields.empty() || fields[0].size() != 64 ||
            fields[0].find_first_not_of("0123456789abcdef") != std::string_view::npos) {
            throw InputError(at_row + ": first field must be a lowercase sha256 hex digest");
        }
        if (fields.size() - 1 != dim) {
            throw InputError(at_row + ": expected " + std::to_string(dim) + " values, found " +
                             std::to_string(fields.size() - 1));
        }
        std::vector<double> values(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            auto f = fields[i + 1];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(values[i])) {
                throw InputError(at_row + ": bad value '" + std::string(f) + "'");
            }
        }
        if (!table.emplace(std::string(fields[0]), DenseVector(std::move(values))).second) {
            throw InputError(at_row + ": duplicate text hash");
        }
    }
    if (row != count) {
        throw InputError(where + ": header declares " + std::to_string(count) + " vectors but file has " +
                         std::to_string(row));
    }
    return std::make_unique<FileEmbeddingProvider>(path, dim, std::move(table));
}

void write_precomputed(const std::filesystem::path& path, std::span<const PrecomputedEntry> entries) {
    if (entries.empty()) {
        throw InputError("write_precomputed: no entries");
    }
    const std::size_t dim = entries.front().vector.dim();
    std::set<std::string> seen;
    std::string body;
    std::size_t count = 0;
    std::array<char, 64> buf{};
    for (const auto& e : entries) {
        if (e.vector.dim() != dim) {
            throw DimensionError("write_precomputed: inconsistent vector lengths");
        }
        auto h = embed_text_hash(e.text);
        if (!seen.insert(h).second) {
            continue;
        }
        ++count;
        body += h;
        for (double x : e.vector.values) {
            auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
            body.push_back(' ');
            body.append(buf.data(), p);
        }
        body.push_back('\n');
    }
    write_file(path.string(), "dim=" + std::to_string(dim) + " count=" + std::to_string(count) + "\n" + body);
}

} // namespace augrag
