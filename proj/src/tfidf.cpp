#include "augrag/tfidf.hpp"

#include "augrag/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace augrag {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "augrag.tfidf";
constexpr int kVersion = 1;

} // namespace

std::optional<std::uint32_t> Vocabulary::find(const std::string& term) const {
    auto it = term_to_id.find(term);
    if (it == term_to_id.end()) {
        return std::nullopt;
    }
    return it->second;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> token_lists) {
    Vocabulary v;
    v.n_docs = token_lists.size();
    std::vector<std::uint32_t> last_seen_in;
    std::size_t unique_total = 0;
    for (std::size_t doc = 0; doc < token_lists.size(); ++doc) {
        for (const auto& tok : token_lists[doc]) {
            auto [it, inserted] = v.term_to_id.try_emplace(tok, static_cast<std::uint32_t>(v.terms.size()));
            std::uint32_t id = it->second;
            if (inserted) {
                v.terms.push_back(tok);
                v.df.push_back(0);
                v.counts.push_back(0);
                last_seen_in.push_back(UINT32_MAX);
            }
            ++v.counts[id];
            if (last_seen_in[id] != doc) {
                last_seen_in[id] = static_cast<std::uint32_t>(doc);
                ++v.df[id];
                ++unique_total;
            }
        }
    }
    v.avg_unique_terms = v.n_docs == 0 ? 0.0 : static_cast<double>(unique_total) / static_cast<double>(v.n_docs);
    return v;
}

TfIdfModel::TfIdfModel(Vocabulary vocab, TokenizerConfig tokenizer)
    : vocab_(std::move(vocab)), tokenizer_(tokenizer) {
    idf_.resize(vocab_.size());
    const double n = static_cast<double>(vocab_.n_docs);
    for (std::size_t t = 0; t < vocab_.size(); ++t) {
        idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(vocab_.df[t]))) + 1.0;
    }
}

TfIdfModel TfIdfModel::fit_texts(std::span<const std::string> texts, const TokenizerConfig& tokenizer) {
    if (texts.empty()) {
        throw InputError("tfidf fit: empty chunk list");
    }
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(texts.size());
    for (const auto& t : texts) {
        tokens.push_back(tokenize(t, tokenizer));
    }
    return TfIdfModel(build_vocabulary(tokens), tokenizer);
}

TfIdfModel TfIdfModel::fit(std::span<const Chunk> chunks, const TokenizerConfig& tokenizer) {
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) {
        texts.push_back(c.text);
    }
    return fit_texts(texts, tokenizer);
}

SparseVector TfIdfModel::transform(std::string_view text) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& tok : tokenize(text, tokenizer_)) {
        if (auto id = vocab_.find(tok)) {
            counts[*id] += 1.0;
        }
    }
    SparseVector v;
    v.entries.reserve(counts.size());
    double sq = 0.0;
    for (const auto& [id, c] : counts) {
        double w = c * idf_[id];
        v.entries.push_back({id, w});
        sq += w * w;
    }
    if (sq > 0.0) {
        double inv = 1.0 / std::sqrt(sq);
        for (auto& e : v.entries) {
            e.weight *= inv;
        }
    }
    return v;
}

std::string TfIdfModel::serialize() const {
    std::ostringstream out;
    nlohmann::ordered_json header;
    header["format"] = kFormat;
    header["version"] = kVersion;
    header["n_docs"] = vocab_.n_docs;
    header["avg_unique_terms"] = vocab_.avg_unique_terms;
    header["lowercase"] = tokenizer_.lowercase;
    header["terms"] = vocab_.size();
    out << header.dump() << '\n';
    for (std::size_t t = 0; t < vocab_.size(); ++t) {
        nlohmann::ordered_json row;
        row["term"] = vocab_.terms[t];
        row["df"] = vocab_.df[t];
        row["count"] = vocab_.counts[t];
        out << row.dump() << '\n';
    }
    return out.str();
}

TfIdfModel TfIdfModel::deserialize(std::string_view data) {
    std::istringstream in{std::string(data)};
    std::string line;
    int lineno = 0;
    auto next = [&]() -> json {
        if (!std::getline(in, line)) {
            throw InputError("tfidf model: truncated at line " + std::to_string(lineno + 1));
        }
        ++lineno;
        try {
            return json::parse(line);
        } catch (const json::exception&) {
            throw InputError("tfidf model: malformed line " + std::to_string(lineno));
        }
    };
    try {
        json header = next();
        if (header.value("format", "") != kFormat) {
            throw InputError("tfidf model: not a tfidf dump");
        }
        if (header.at("version").get<int>() != kVersion) {
            throw InputError("tfidf model: unsupported version");
        }
        Vocabulary v;
        v.n_docs = header.at("n_docs").get<std::size_t>();
        v.avg_unique_terms = header.at("avg_unique_terms").get<double>();
        TokenizerConfig tok;
        tok.lowercase = header.at("lowercase").get<bool>();
        auto n_terms = header.at("terms").get<std::size_t>();
        for (std::size_t t = 0; t < n_terms; ++t) {
            json row = next();
            auto term = row.at("term").get<std::string>();
            auto df = row.at("df").get<std::uint32_t>();
            if (df < 1 || df > v.n_docs) {
                throw InputError("tfidf model: df out of range on line " + std::to_string(lineno));
            }
            if (!v.term_to_id.emplace(term, static_cast<std::uint32_t>(t)).second) {
                throw InputError("tfidf model: duplicate term on line " + std::to_string(lineno));
            }
            v.terms.push_back(std::move(term));
            v.df.push_back(df);
            v.counts.push_back(row.at("count").get<std::uint64_t>());
        }
        return TfIdfModel(std::move(v), tok);
    } catch (const json::exception& e) {
        throw InputError(std::string("tfidf model: ") + e.what());
    }
}

void TfIdfModel::save(const std::filesystem::path& path) const {
    write_file(path.string(), serialize());
}

TfIdfModel TfIdfModel::load(const std::filesystem::path& path) {
    return deserialize(read_file(path.string()));
}

} // namespace augrag
