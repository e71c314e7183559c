#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metaclone/tokenizer.hpp"

namespace metaclone {

struct EncoderConfig {
    uint32_t vocab_size = 4096;  // power of two
    uint32_t embed_dim = 64;
    uint32_t hidden_dim = 128;
    uint32_t out_dim = 64;
    uint32_t max_len = 512;
    uint64_t init_seed = 0;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// All parameters live in one flat double buffer:
//   E  [vocab_size x embed_dim]   token embeddings
//   W1 [embed_dim x hidden_dim]   b1 [hidden_dim]
//   W2 [hidden_dim x out_dim]     b2 [out_dim]
//   a, b                          affine head mapping cosine to a logit
// Flat storage keeps SGD updates, serialization and finite-difference
// checks trivial.
struct ParamLayout {
    size_t e = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, a = 0, b = 0;
    size_t total = 0;

    explicit ParamLayout(const EncoderConfig& cfg) {
        size_t off = 0;
        e = off;
        off += static_cast<size_t>(cfg.vocab_size) * cfg.embed_dim;
        w1 = off;
        off += static_cast<size_t>(cfg.embed_dim) * cfg.hidden_dim;
        b1 = off;
        off += cfg.hidden_dim;
        w2 = off;
        off += static_cast<size_t>(cfg.hidden_dim) * cfg.out_dim;
        b2 = off;
        off += cfg.out_dim;
        a = off++;
        b = off++;
        total = off;
    }
};

struct Params {
    EncoderConfig config;
    std::vector<double> data;
};

using Gradients = std::vector<double>;  // same layout as Params::data

// Seeded initialization: each weight matrix uniform in +/- 1/sqrt(fan_in),
// biases zero, head (a, b) = (1, 0).
Params init_params(const EncoderConfig& cfg);

struct LabeledPair {
    TokenSeq first;
    TokenSeq second;
    double label = 0.0;  // 0 or 1
};

class Encoder {
public:
    explicit Encoder(const EncoderConfig& cfg) : cfg_(cfg), layout_(cfg) {}

    const EncoderConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }

    // Mean-pooled token embeddings through the tanh MLP. Throws
    // EmptySequence on an empty sequence. Parameter vectors are passed as
    // flat spans (layout()) so optimizers can evaluate at any point without
    // copying into a Params.
    std::vector<double> embed(std::span<const double> theta, const TokenSeq& seq) const;

    // (probability, logit) for a pair: sigmoid(a * cosine + b).
    std::pair<double, double> classify_pair(std::span<const double> theta,
                                            const TokenSeq& s1,
                                            const TokenSeq& s2) const;

    // Mean sigmoid cross-entropy over the batch, with exact gradients for
    // the whole graph. Gradients are accumulated into `grad` (zeroed here).
    double loss_and_grad(std::span<const double> theta,
                         std::span<const LabeledPair> batch,
                         Gradients& grad) const;

    // Backpropagates d(loss)/d(embedding) through the MLP into `grad`.
    // Exposed for objectives that differentiate other losses of the
    // embeddings (InfoNCE).
    struct EmbedCache {
        std::vector<double> pooled;  // mean token embedding
        std::vector<double> hidden;  // tanh activations
        std::vector<double> out;
        const TokenSeq* seq = nullptr;
    };
    EmbedCache embed_cached(std::span<const double> theta, const TokenSeq& seq) const;
    void backprop_embedding(std::span<const double> theta, const EmbedCache& cache,
                            std::span<const double> d_out, Gradients& grad) const;

private:
    EncoderConfig cfg_;
    ParamLayout layout_;
};

// Cosine similarity clamped to [-1, 1]; throws ZeroVector on a zero input.
double similarity(std::span<const double> e1, std::span<const double> e2);

double sigmoid(double z);

// Binary cross-entropy of a logit, in log-sum-exp form. Finite for any
// representable logit.
double bce_from_logit(double logit, double label);

// Flat binary serialization: one JSON header line with the config, then the
// raw little-endian doubles. Round-trip exact.
void save_params(const Params& params, const std::string& path);
Params load_params(const std::string& path);

}  // namespace metaclone
