#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace augrag {

using ChunkId = std::int64_t;

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
};

/// One retained sentence, the retrieval unit.
struct Chunk {
    ChunkId chunk_id = 0;
    std::string doc_id;
    int seq = 0; ///< index among the document's retained chunks
    std::string text;

    bool operator==(const Chunk&) const = default;
};

struct ChunkConfig {
    /// Sentences need strictly more than this many characters to be kept.
    std::size_t min_chars = 15;
    std::string sentence_terminators = ".!?";
};

/// A retrieved chunk widened to its neighbors within the same document.
struct ContextPassage {
    ChunkId center_chunk_id = 0;
    std::vector<ChunkId> member_chunk_ids;
    std::string text;
    double score = 0.0;

    bool operator==(const ContextPassage&) const = default;
};

enum class DocFormat { plain, jsonl };

/// Plain: a directory of *.txt files (lexicographic filename order, doc_id is
/// the file stem) or a single text file. Jsonl: one {doc_id,title,text}
/// object per line. Throws InputError on unreadable input, malformed lines
/// (with the line number), duplicate ids, blank texts, or an empty corpus.
std::vector<Document> load_documents(const std::filesystem::path& path, DocFormat format);

/// Split `doc` into sentences and keep the ones longer than cfg.min_chars.
/// Chunk ids are assigned consecutively from `first_chunk_id`.
std::vector<Chunk> build_chunks(const Document& doc, const ChunkConfig& cfg, ChunkId first_chunk_id = 0);

/// Chunk a whole corpus; ids run 0..N-1 in (document, seq) order.
std::vector<Chunk> chunk_corpus(std::span<const Document> docs, const ChunkConfig& cfg);

/// The center chunk plus its predecessor and successor when they belong to
/// the same document. `chunks` must be in corpus order.
ContextPassage expand_window(std::span<const Chunk> chunks, ChunkId center, double score = 0.0);

/// Index of `id` in a chunk list sorted by id; throws InputError if absent.
std::size_t find_chunk(std::span<const Chunk> chunks, ChunkId id);

/// Chunk dump: one {"chunk_id","doc_id","seq","text"} object per line.
void write_chunks_jsonl(const std::filesystem::path& path, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunks_jsonl(const std::filesystem::path& path);

} // namespace augrag
