#pragma once

// Paragraph vectors, distributed bag-of-words variant (PV-DBOW), trained
// with negative sampling. Each chunk gets a vector v_doc that is trained to
// predict the chunk's words through per-word output vectors u_word:
//
//   loss(doc, word) = -log s(v_doc . u_word) - sum_neg log s(-v_doc . u_neg)
//
// with s the logistic function and negatives drawn from the unigram
// distribution raised to the 0.75 power.

#include "augrag/corpus.hpp"
#include "augrag/rng.hpp"
#include "augrag/tfidf.hpp"
#include "augrag/vector.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace augrag {

struct PvConfig {
    std::size_t dim = 64;
    std::size_t epochs = 400;
    std::size_t negative_samples = 5;
    double initial_lr = 0.025;
    double final_lr = 0.0001;
    std::uint64_t min_count = 1;
    std::uint64_t seed = 1;

    /// Throws InputError when an invariant is violated.
    void validate() const;

    bool operator==(const PvConfig&) const = default;
};

/// Draws word ids with probability proportional to count^0.75.
class NegativeSampler {
public:
    NegativeSampler() = default;
    explicit NegativeSampler(std::span<const std::uint64_t> counts);

    std::uint32_t sample(Rng& rng) const;
    const std::vector<double>& probabilities() const { return probs_; }

private:
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

struct PairGradients {
    double loss = 0.0;
    std::vector<double> doc;                    ///< dL/dv_doc
    std::vector<double> word;                   ///< dL/du_word
    std::vector<std::vector<double>> negatives; ///< dL/du_neg, one per entry of `negs`
};

struct PvTrainStats {
    std::vector<double> epoch_loss; ///< mean loss per (doc, word) pair
};

struct InferResult {
    DenseVector vector;
    bool all_oov = false; ///< no known tokens; `vector` is zero
};

class PvModel {
public:
    /// Single-threaded SGD in the order epoch -> chunk -> token, with the
    /// learning rate decayed linearly from initial_lr to final_lr across
    /// epochs. Row i of doc_vectors() belongs to chunks[i].
    static PvModel train(std::span<const Chunk> chunks, const PvConfig& cfg, PvTrainStats* stats = nullptr);

    /// Assemble a model from explicit parameters (used for gradient checks
    /// and by the loader).
    static PvModel from_parts(PvConfig cfg, Vocabulary vocab, std::vector<ChunkId> chunk_ids, Matrix doc_vectors,
                              Matrix word_vectors);

    PairGradients pair_loss_and_grad(std::size_t doc, std::uint32_t word, std::span<const std::uint32_t> negs) const;

    /// Fit a fresh document vector for `text` with the word vectors frozen.
    InferResult infer_vector(std::string_view text, std::size_t infer_epochs, std::uint64_t seed) const;

    const PvConfig& config() const { return cfg_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const NegativeSampler& sampler() const { return sampler_; }
    const std::vector<ChunkId>& chunk_ids() const { return chunk_ids_; }
    const Matrix& doc_vectors() const { return doc_vectors_; }
    const Matrix& word_vectors() const { return word_vectors_; }
    Matrix& doc_vectors() { return doc_vectors_; }
    Matrix& word_vectors() { return word_vectors_; }

    DenseVector doc_vector(std::size_t row) const;

    /// Versioned binary dump of config, vocabulary, chunk ids and both matrices.
    std::string serialize() const;
    static PvModel deserialize(std::string_view data);
    void save(const std::filesystem::path& path) const;
    static PvModel load(const std::filesystem::path& path);

private:
    PvModel() = default;

    std::vector<std::uint32_t> known_token_ids(std::string_view text) const;

    PvConfig cfg_;
    Vocabulary vocab_;
    NegativeSampler sampler_;
    std::vector<ChunkId> chunk_ids_;
    Matrix doc_vectors_;
    Matrix word_vectors_;
};

/// Numerically stable log(1 / (1 + exp(-x))).
double log_sigmoid(double x);
double sigmoid(double x);

} // namespace augrag
