#include "augrag/corpus.hpp"

#include "augrag/error.hpp"
#include "augrag/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace augrag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

Document checked(Document doc, const std::string& where) {
    if (trim(doc.text).empty()) {
        throw InputError(where + ": document '" + doc.doc_id + "' has empty text");
    }
    return doc;
}

std::vector<Document> load_plain(const fs::path& path) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    } else {
        files.push_back(path);
    }
    std::vector<Document> docs;
    for (const auto& f : files) {
        std::string stem = f.stem().string();
        docs.push_back(checked(Document{stem, stem, read_file(f.string())}, f.string()));
    }
    return docs;
}

std::vector<Document> load_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read file: " + path.string());
    }
    std::vector<Document> docs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::string where = path.string() + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            throw InputError(where + ": malformed json (line " + std::to_string(lineno) + ")");
        }
        for (const char* key : {"doc_id", "title", "text"}) {
            if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
                throw InputError(where + ": line " + std::to_string(lineno) + " is missing string field \"" +
                                 key + "\"");
            }
        }
        docs.push_back(checked(
            Document{j["doc_id"].get<std::string>(), j["title"].get<std::string>(), j["text"].get<std::string>()},
            where));
    }
    return docs;
}

} // namespace

std::vector<Document> load_documents(const fs::path& path, DocFormat format) {
    if (!fs::exists(path)) {
        throw InputError("input path does not exist: " + path.string());
    }
    auto docs = format == DocFormat::plain ? load_plain(path) : load_jsonl(path);
    if (docs.empty()) {
        throw InputError("empty corpus: " + path.string());
    }
    std::set<std::string> seen;
    for (const auto& d : docs) {
        if (!seen.insert(d.doc_id).second) {
            throw InputError("duplicate doc_id: " + d.doc_id);
        }
    }
    return docs;
}

std::vector<Chunk> build_chunks(const Document& doc, const ChunkConfig& cfg, ChunkId first_chunk_id) {
    std::string_view text = doc.text;
    if (trim(text).empty()) {
        throw InputError("build_chunks: document '" + doc.doc_id + "' has empty text");
    }
    std::vector<Chunk> out;
    auto emit = [&](std::string_view piece) {
        piece = trim(piece);
        if (utf8_length(piece) > cfg.min_chars) {
            Chunk c;
            c.chunk_id = first_chunk_id + static_cast<ChunkId>(out.size());
            c.doc_id = doc.doc_id;
            c.seq = static_cast<int>(out.size());
            c.text = std::string(piece);
            out.push_back(std::move(c));
        }
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (cfg.sentence_terminators.find(text[i]) == std::string::npos) {
            continue;
        }
        if (i + 1 == text.size() || is_space(text[i + 1])) {
            emit(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < text.size()) {
        emit(text.substr(start));
    }
    return out;
}

std::vector<Chunk> chunk_corpus(std::span<const Document> docs, const ChunkConfig& cfg) {
    std::vector<Chunk> all;
    for (const auto& d : docs) {
        auto part = build_chunks(d, cfg, static_cast<ChunkId>(all.size()));
        std::move(part.begin(), part.end(), std::back_inserter(all));
    }
    return all;
}

std::size_t find_chunk(std::span<const Chunk> chunks, ChunkId id) {
    auto it = std::lower_bound(chunks.begin(), chunks.end(), id,
                               [](const Chunk& c, ChunkId v) { return c.chunk_id < v; });
    if (it == chunks.end() || it->chunk_id != id) {
        throw InputError("unknown chunk_id: " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - chunks.begin());
}

ContextPassage expand_window(std::span<const Chunk> chunks, ChunkId center, double score) {
    std::size_t idx = find_chunk(chunks, center);
    const Chunk& c = chunks[idx];
    std::size_t lo = idx;
    std::size_t hi = idx;
    if (idx > 0 && chunks[idx - 1].doc_id == c.doc_id && chunks[idx - 1].chunk_id == center - 1) {
        lo = idx - 1;
    }
    if (idx + 1 < chunks.size() && chunks[idx + 1].doc_id == c.doc_id && chunks[idx + 1].chunk_id == center + 1) {
        hi = idx + 1;
    }
    ContextPassage p;
    p.center_chunk_id = center;
    p.score = score;
    for (std::size_t i = lo; i <= hi; ++i) {
        p.member_chunk_ids.push_back(chunks[i].chunk_id);
        if (!p.text.empty()) {
            p.text.push_back(' ');
        }
        p.text += chunks[i].text;
    }
    return p;
}

void write_chunks_jsonl(const fs::path& path, std::span<const Chunk> chunks) {
    std::string out;
    for (const auto& c : chunks) {
        nlohmann::ordered_json j;
        j["chunk_id"] = c.chunk_id;
        j["doc_id"] = c.doc_id;
        j["seq"] = c.seq;
        j["text"] = c.text;
        out += j.dump();
        out.push_back('\n');
    }
    write_file(path.string(), out);
}

std::vector<Chunk> read_chunks_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read file: " + path.string());
    }
    std::vector<Chunk> chunks;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            auto j = json::parse(line);
            Chunk c;
            c.chunk_id = j.at("chunk_id").get<ChunkId>();
            c.doc_id = j.at("doc_id").get<std::string>();
            c.seq = j.at("seq").get<int>();
            c.text = j.at("text").get<std::string>();
            if (!chunks.empty() && c.chunk_id <= chunks.back().chunk_id) {
                throw InputError("chunk ids must be strictly increasing");
            }
            chunks.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ": bad chunk record on line " + std::to_string(lineno) + ": " +
                             e.what());
        } catch (const InputError& e) {
            throw InputError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (chunks.empty()) {
        throw InputError("no chunks in " + path.string());
    }
    return chunks;
}

} // namespace augrag
