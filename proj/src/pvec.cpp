#include "augrag/pvec.hpp"

#include "augrag/binary_io.hpp"
#include "augrag/error.hpp"

#include <algorithm>
#include <cmath>

namespace augrag {

namespace {

constexpr std::string_view kMagic = "AGPV";
constexpr std::uint32_t kVersion = 1;

double lr_at(double initial, double final, std::size_t epoch, std::size_t epochs) {
    if (epochs <= 1) {
        return initial;
    }
    double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return initial + (final - initial) * t;
}

void init_doc_vector(std::span<double> v, Rng& rng) {
    const double half = 0.5 / static_cast<double>(v.size());
    for (double& x : v) {
        x = rng.uniform(-half, half);
    }
}

// One SGD step on a (doc, word) pair. Word vectors are updated only when
// `words_out` is non-null. Returns the pair loss before the update.
double sgd_pair(std::span<double> v, const Matrix& words, Matrix* words_out, std::uint32_t word, std::size_t k,
                const NegativeSampler& sampler, Rng& rng, double lr, std::vector<double>& grad_v) {
    std::fill(grad_v.begin(), grad_v.end(), 0.0);
    double loss = 0.0;
    auto step = [&](std::uint32_t target, double label) {
        auto u = words.row(target);
        double f = dot(v, u);
        loss -= label > 0.0 ? log_sigmoid(f) : log_sigmoid(-f);
        double g = (label - sigmoid(f)) * lr;
        for (std::size_t c = 0; c < v.size(); ++c) {
            grad_v[c] += g * u[c];
        }
        if (words_out) {
            auto uo = words_out->row(target);
            for (std::size_t c = 0; c < v.size(); ++c) {
                uo[c] += g * v[c];
            }
        }
    };
    step(word, 1.0);
    for (std::size_t n = 0; n < k; ++n) {
        std::uint32_t neg = sampler.sample(rng);
        if (neg == word) {
            continue;
        }
        step(neg, 0.0);
    }
    for (std::size_t c = 0; c < v.size(); ++c) {
        v[c] += grad_v[c];
    }
    return loss;
}

} // namespace

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    if (x >= 0.0) {
        return -std::log1p(std::exp(-x));
    }
    return x - std::log1p(std::exp(x));
}

void PvConfig::validate() const {
    if (dim < 1) {
        throw InputError("pvec config: dim must be >= 1");
    }
    if (epochs < 1) {
        throw InputError("pvec config: epochs must be >= 1");
    }
    if (negative_samples < 1) {
        throw InputError("pvec config: negative_samples must be >= 1");
    }
    if (!(final_lr > 0.0) || !(final_lr <= initial_lr)) {
        throw InputError("pvec config: require 0 < final_lr <= initial_lr");
    }
    if (min_count < 1) {
        throw InputError("pvec config: min_count must be >= 1");
    }
}

NegativeSampler::NegativeSampler(std::span<const std::uint64_t> counts) {
    probs_.resize(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        probs_[i] = std::pow(static_cast<double>(counts[i]), 0.75);
        total += probs_[i];
    }
    cumulative_.resize(counts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        probs_[i] /= total;
        acc += probs_[i];
        cumulative_[i] = acc;
    }
    if (!cumulative_.empty()) {
        cumulative_.back() = 1.0;
    }
}

std::uint32_t NegativeSampler::sample(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
        --it;
    }
    return static_cast<std::uint32_t>(it - cumulative_.begin());
}

PvModel PvModel::train(std::span<const Chunk> chunks, const PvConfig& cfg, PvTrainStats* stats) {
    cfg.validate();
    if (chunks.size() < 2) {
        throw InputError("pvec train: need at least 2 chunks");
    }
    std::vector<std::vector<std::string>> tokens;
    tokens.reserve(chunks.size());
    for (const auto& c : chunks) {
        tokens.push_back(tokenize(c.text));
    }
    Vocabulary vocab = build_vocabulary(tokens);
    if (cfg.min_count > 1) {
        for (auto& list : tokens) {
            std::erase_if(list, [&](const std::string& t) { return vocab.counts[*vocab.find(t)] < cfg.min_count; });
        }
        vocab = build_vocabulary(tokens);
    }
    if (vocab.size() == 0) {
        throw InputError("pvec train: corpus has no trainable (doc, word) pairs");
    }
    std::vector<std::vector<std::uint32_t>> ids(chunks.size());
    for (std::size_t d = 0; d < chunks.size(); ++d) {
        if (tokens[d].empty()) {
            throw InputError("pvec train: chunk " + std::to_string(chunks[d].chunk_id) +
                             " has no in-vocabulary tokens");
        }
        for (const auto& t : tokens[d]) {
            ids[d].push_back(*vocab.find(t));
        }
    }

    PvModel m;
    m.cfg_ = cfg;
    m.sampler_ = NegativeSampler(vocab.counts);
    m.vocab_ = std::move(vocab);
    for (const auto& c : chunks) {
        m.chunk_ids_.push_back(c.chunk_id);
    }
    m.doc_vectors_ = Matrix(chunks.size(), cfg.dim);
    m.word_vectors_ = Matrix(m.vocab_.size(), cfg.dim);

    Rng rng(cfg.seed);
    for (std::size_t d = 0; d < chunks.size(); ++d) {
        init_doc_vector(m.doc_vectors_.row(d), rng);
    }

    std::vector<double> grad_v(cfg.dim);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = lr_at(cfg.initial_lr, cfg.final_lr, epoch, cfg.epochs);
        double loss = 0.0;
        std::size_t pairs = 0;
        for (std::size_t d = 0; d < ids.size(); ++d) {
            auto v = m.doc_vectors_.row(d);
            for (std::uint32_t w : ids[d]) {
                loss += sgd_pair(v, m.word_vectors_, &m.word_vectors_, w, cfg.negative_samples, m.sampler_, rng, lr,
                                 grad_v);
                ++pairs;
            }
        }
        if (stats) {
            stats->epoch_loss.push_back(loss / static_cast<double>(pairs));
        }
    }
    return m;
}

PvModel PvModel::from_parts(PvConfig cfg, Vocabulary vocab, std::vector<ChunkId> chunk_ids, Matrix doc_vectors,
                            Matrix word_vectors) {
    cfg.validate();
    if (doc_vectors.rows() != chunk_ids.size() || doc_vectors.cols() != cfg.dim) {
        throw DimensionError("pvec model: doc matrix must be n_docs x dim");
    }
    if (word_vectors.rows() != vocab.size() || word_vectors.cols() != cfg.dim) {
        throw DimensionError("pvec model: word matrix must be |vocab| x dim");
    }
    for (double x : doc_vectors.data()) {
        if (!std::isfinite(x)) {
            throw InputError("pvec model: non-finite doc vector entry");
        }
    }
    for (double x : word_vectors.data()) {
        if (!std::isfinite(x)) {
            throw InputError("pvec model: non-finite word vector entry");
        }
    }
    PvModel m;
    m.cfg_ = cfg;
    m.sampler_ = NegativeSampler(vocab.counts);
    m.vocab_ = std::move(vocab);
    m.chunk_ids_ = std::move(chunk_ids);
    m.doc_vectors_ = std::move(doc_vectors);
    m.word_vectors_ = std::move(word_vectors);
    return m;
}

PairGradients PvModel::pair_loss_and_grad(std::size_t doc, std::uint32_t word,
                                          std::span<const std::uint32_t> negs) const {
    if (doc >= doc_vectors_.rows()) {
        throw InputError("pair_loss_and_grad: doc index " + std::to_string(doc) + " out of range");
    }
    auto check_word = [&](std::uint32_t w) {
        if (w >= word_vectors_.rows()) {
            throw InputError("pair_loss_and_grad: word id " + std::to_string(w) + " out of range");
        }
    };
    check_word(word);
    for (auto n : negs) {
        check_word(n);
    }
    const std::size_t dim = cfg_.dim;
    auto v = doc_vectors_.row(doc);
    PairGradients g;
    g.doc.assign(dim, 0.0);

    auto u = word_vectors_.row(word);
    double f = dot(v, u);
    g.loss = -log_sigmoid(f);
    double coef = sigmoid(f) - 1.0;
    g.word.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        g.doc[c] += coef * u[c];
        g.word[c] = coef * v[c];
    }
    for (auto n : negs) {
        auto un = word_vectors_.row(n);
        double fn = dot(v, un);
        g.loss -= log_sigmoid(-fn);
        double cn = sigmoid(fn);
        std::vector<double> gn(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            g.doc[c] += cn * un[c];
            gn[c] = cn * v[c];
        }
        g.negatives.push_back(std::move(gn));
    }
    return g;
}

std::vector<std::uint32_t> PvModel::known_token_ids(std::string_view text) const {
    std::vector<std::uint32_t> ids;
    for (const auto& t : tokenize(text)) {
        if (auto id = vocab_.find(t)) {
            ids.push_back(*id);
        }
    }
    return ids;
}

InferResult PvModel::infer_vector(std::string_view text, std::size_t infer_epochs, std::uint64_t seed) const {
    InferResult r;
    r.vector = DenseVector(cfg_.dim);
    auto ids = known_token_ids(text);
    if (ids.empty()) {
        r.all_oov = true;
        return r;
    }
    Rng rng(seed);
    std::span<double> v(r.vector.values);
    init_doc_vector(v, rng);
    std::vector<double> grad_v(cfg_.dim);
    for (std::size_t epoch = 0; epoch < infer_epochs; ++epoch) {
        double lr = lr_at(cfg_.initial_lr, cfg_.final_lr, epoch, infer_epochs);
        for (std::uint32_t w : ids) {
            sgd_pair(v, word_vectors_, nullptr, w, cfg_.negative_samples, sampler_, rng, lr, grad_v);
        }
    }
    return r;
}

DenseVector PvModel::doc_vector(std::size_t row) const {
    auto r = doc_vectors_.row(row);
    return DenseVector(std::vector<double>(r.begin(), r.end()));
}

std::string PvModel::serialize() const {
    bin::Writer w;
    w.put_magic(kMagic, kVersion);
    w.put<std::uint64_t>(cfg_.dim);
    w.put<std::uint64_t>(cfg_.epochs);
    w.put<std::uint64_t>(cfg_.negative_samples);
    w.put(cfg_.initial_lr);
    w.put(cfg_.final_lr);
    w.put<std::uint64_t>(cfg_.min_count);
    w.put<std::uint64_t>(cfg_.seed);
    w.put<std::uint64_t>(vocab_.n_docs);
    w.put(vocab_.avg_unique_terms);
    w.put<std::uint64_t>(vocab_.size());
    for (std::size_t t = 0; t < vocab_.size(); ++t) {
        w.put_string(vocab_.terms[t]);
        w.put(vocab_.df[t]);
        w.put(vocab_.counts[t]);
    }
    w.put<std::uint64_t>(chunk_ids_.size());
    for (auto id : chunk_ids_) {
        w.put<std::int64_t>(id);
    }
    w.put_doubles(doc_vectors_.data());
    w.put_doubles(word_vectors_.data());
    return w.bytes();
}

PvModel PvModel::deserialize(std::string_view data) {
    bin::Reader r(data, "pvec model");
    if (r.expect_magic(kMagic) != kVersion) {
        r.fail("unsupported version");
    }
    PvConfig cfg;
    cfg.dim = r.get<std::uint64_t>();
    cfg.epochs = r.get<std::uint64_t>();
    cfg.negative_samples = r.get<std::uint64_t>();
    cfg.initial_lr = r.get<double>();
    cfg.final_lr = r.get<double>();
    cfg.min_count = r.get<std::uint64_t>();
    cfg.seed = r.get<std::uint64_t>();
    Vocabulary v;
    v.n_docs = r.get<std::uint64_t>();
    v.avg_unique_terms = r.get<double>();
    auto n_terms = r.get<std::uint64_t>();
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        auto term = r.get_string();
        v.term_to_id.emplace(term, static_cast<std::uint32_t>(t));
        v.terms.push_back(std::move(term));
        v.df.push_back(r.get<std::uint32_t>());
        v.counts.push_back(r.get<std::uint64_t>());
    }
    if (v.term_to_id.size() != v.terms.size()) {
        r.fail("duplicate vocabulary term");
    }
    std::vector<ChunkId> ids(r.get<std::uint64_t>());
    for (auto& id : ids) {
        id = r.get<std::int64_t>();
    }
    auto docs = r.get_doubles();
    auto words = r.get_doubles();
    if (!r.at_end()) {
        r.fail("trailing bytes");
    }
    if (docs.size() != ids.size() * cfg.dim || words.size() != v.size() * cfg.dim) {
        r.fail("matrix sizes do not match header");
    }
    Matrix dm(ids.size(), cfg.dim);
    dm.data() = std::move(docs);
    Matrix wm(v.size(), cfg.dim);
    wm.data() = std::move(words);
    return from_parts(cfg, std::move(v), std::move(ids), std::move(dm), std::move(wm));
}

void PvModel::save(const std::filesystem::path& path) const {
    write_file(path.string(), serialize());
}

PvModel PvModel::load(const std::filesystem::path& path) {
    return deserialize(read_file(path.string()));
}

} // namespace augrag
