#include "metaclone/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "metaclone/errors.hpp"
#include "metaclone/rng.hpp"

namespace metaclone {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_from_logit(double logit, double label) {
    // softplus(z) - y*z, softplus evaluated stably on either side
    const double softplus =
        logit > 0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
    return softplus - label * logit;
}

double similarity(std::span<const double> e1, std::span<const double> e2) {
    if (e1.size() != e2.size())
        throw LengthMismatch("embedding dims differ: " + std::to_string(e1.size()) +
                             " vs " + std::to_string(e2.size()));
    const double n1 = norm(e1);
    const double n2 = norm(e2);
    if (n1 == 0.0 || n2 == 0.0) throw ZeroVector("cosine of zero vector");
    const double s = dot(e1, e2) / (n1 * n2);
    return s > 1.0 ? 1.0 : (s < -1.0 ? -1.0 : s);
}

Params init_params(const EncoderConfig& cfg) {
    Params p;
    p.config = cfg;
    const ParamLayout layout(cfg);
    p.data.assign(layout.total, 0.0);
    Rng rng(cfg.init_seed);

    const double e_bound = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
    for (size_t i = layout.e; i < layout.w1; ++i) p.data[i] = rng.symmetric(e_bound);
    const double w1_bound = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
    for (size_t i = layout.w1; i < layout.b1; ++i) p.data[i] = rng.symmetric(w1_bound);
    const double w2_bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    for (size_t i = layout.w2; i < layout.b2; ++i) p.data[i] = rng.symmetric(w2_bound);
    p.data[layout.a] = 1.0;
    p.data[layout.b] = 0.0;
    return p;
}

Encoder::EmbedCache Encoder::embed_cached(std::span<const double> theta,
                                          const TokenSeq& seq) const {
    if (seq.empty()) throw EmptySequence("cannot embed an empty token sequence");
    std::span<const double> p = theta;
    const size_t d = cfg_.embed_dim;
    const size_t h = cfg_.hidden_dim;
    const size_t o = cfg_.out_dim;

    EmbedCache cache;
    cache.seq = &seq;
    cache.pooled.assign(d, 0.0);
    for (uint32_t id : seq.ids) {
        const double* row = &p[layout_.e + static_cast<size_t>(id) * d];
        for (size_t i = 0; i < d; ++i) cache.pooled[i] += row[i];
    }
    const double inv_len = 1.0 / static_cast<double>(seq.length());
    for (size_t i = 0; i < d; ++i) cache.pooled[i] *= inv_len;

    cache.hidden.assign(h, 0.0);
    for (size_t j = 0; j < h; ++j) {
        double acc = p[layout_.b1 + j];
        for (size_t i = 0; i < d; ++i)
            acc += cache.pooled[i] * p[layout_.w1 + i * h + j];
        cache.hidden[j] = std::tanh(acc);
    }

    cache.out.assign(o, 0.0);
    for (size_t k = 0; k < o; ++k) {
        double acc = p[layout_.b2 + k];
        for (size_t j = 0; j < h; ++j)
            acc += cache.hidden[j] * p[layout_.w2 + j * o + k];
        cache.out[k] = acc;
    }
    return cache;
}

std::vector<double> Encoder::embed(std::span<const double> theta,
                                   const TokenSeq& seq) const {
    return embed_cached(theta, seq).out;
}

void Encoder::backprop_embedding(std::span<const double> theta, const EmbedCache& cache,
                                 std::span<const double> d_out,
                                 Gradients& grad) const {
    std::span<const double> p = theta;
    const size_t d = cfg_.embed_dim;
    const size_t h = cfg_.hidden_dim;
    const size_t o = cfg_.out_dim;

    // output layer
    std::vector<double> d_hidden(h, 0.0);
    for (size_t k = 0; k < o; ++k) {
        grad[layout_.b2 + k] += d_out[k];
        for (size_t j = 0; j < h; ++j) {
            grad[layout_.w2 + j * o + k] += cache.hidden[j] * d_out[k];
            d_hidden[j] += p[layout_.w2 + j * o + k] * d_out[k];
        }
    }

    // tanh layer
    std::vector<double> d_pre(h);
    for (size_t j = 0; j < h; ++j)
        d_pre[j] = (1.0 - cache.hidden[j] * cache.hidden[j]) * d_hidden[j];

    std::vector<double> d_pooled(d, 0.0);
    for (size_t j = 0; j < h; ++j) {
        grad[layout_.b1 + j] += d_pre[j];
        for (size_t i = 0; i < d; ++i) {
            grad[layout_.w1 + i * h + j] += cache.pooled[i] * d_pre[j];
            d_pooled[i] += p[layout_.w1 + i * h + j] * d_pre[j];
        }
    }

    // mean pooling back to the token embedding rows
    const double inv_len = 1.0 / static_cast<double>(cache.seq->length());
    for (uint32_t id : cache.seq->ids) {
        double* row = &grad[layout_.e + static_cast<size_t>(id) * d];
        for (size_t i = 0; i < d; ++i) row[i] += d_pooled[i] * inv_len;
    }
}

std::pair<double, double> Encoder::classify_pair(std::span<const double> theta,
                                                 const TokenSeq& s1,
                                                 const TokenSeq& s2) const {
    const auto e1 = embed(theta, s1);
    const auto e2 = embed(theta, s2);
    const double s = similarity(e1, e2);
    const double logit = theta[layout_.a] * s + theta[layout_.b];
    return {sigmoid(logit), logit};
}

double Encoder::loss_and_grad(std::span<const double> theta,
                              std::span<const LabeledPair> batch,
                              Gradients& grad) const {
    if (batch.empty()) throw EmptyInput("loss over empty batch");
    grad.assign(layout_.total, 0.0);
    std::span<const double> p = theta;
    const double head_a = p[layout_.a];
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    double total_loss = 0.0;
    std::vector<double> d_e1, d_e2;
    for (const auto& pair : batch) {
        const EmbedCache c1 = embed_cached(theta, pair.first);
        const EmbedCache c2 = embed_cached(theta, pair.second);
        const double n1 = norm(c1.out);
        const double n2 = norm(c2.out);
        if (n1 == 0.0 || n2 == 0.0) throw ZeroVector("cosine of zero vector");
        const double raw = dot(c1.out, c2.out) / (n1 * n2);
        const double s = raw > 1.0 ? 1.0 : (raw < -1.0 ? -1.0 : raw);
        const double logit = head_a * s + p[layout_.b];
        total_loss += bce_from_logit(logit, pair.label) * inv_batch;

        const double d_logit = (sigmoid(logit) - pair.label) * inv_batch;
        grad[layout_.a] += d_logit * s;
        grad[layout_.b] += d_logit;

        const double d_s = d_logit * head_a;
        const size_t o = cfg_.out_dim;
        d_e1.assign(o, 0.0);
        d_e2.assign(o, 0.0);
        const double inv_nn = 1.0 / (n1 * n2);
        for (size_t k = 0; k < o; ++k) {
            d_e1[k] = d_s * (c2.out[k] * inv_nn - s * c1.out[k] / (n1 * n1));
            d_e2[k] = d_s * (c1.out[k] * inv_nn - s * c2.out[k] / (n2 * n2));
        }
        backprop_embedding(theta, c1, d_e1, grad);
        backprop_embedding(theta, c2, d_e2, grad);
    }
    return total_loss;
}

void save_params(const Params& params, const std::string& path) {
    nlohmann::ordered_json header;
    header["vocab_size"] = params.config.vocab_size;
    header["embed_dim"] = params.config.embed_dim;
    header["hidden_dim"] = params.config.hidden_dim;
    header["out_dim"] = params.config.out_dim;
    header["max_len"] = params.config.max_len;
    header["init_seed"] = params.config.init_seed;
    header["count"] = params.data.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write params: " + path);
    out << header.dump() << '\n';
    for (double v : params.data) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!out) throw IoError("write failed: " + path);
}

Params load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open params: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw ParseError(path + ": missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad header: " + e.what());
    }
    Params p;
    size_t count = 0;
    try {
        p.config.vocab_size = header.at("vocab_size").get<uint32_t>();
        p.config.embed_dim = header.at("embed_dim").get<uint32_t>();
        p.config.hidden_dim = header.at("hidden_dim").get<uint32_t>();
        p.config.out_dim = header.at("out_dim").get<uint32_t>();
        p.config.max_len = header.at("max_len").get<uint32_t>();
        p.config.init_seed = header.at("init_seed").get<uint64_t>();
        count = header.at("count").get<size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad header: " + e.what());
    }
    const ParamLayout layout(p.config);
    if (count != layout.total)
        throw ParseError(path + ": header count " + std::to_string(count) +
                         " does not match config layout " + std::to_string(layout.total));
    p.data.resize(count);
    for (size_t i = 0; i < count; ++i) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8))
            throw ParseError(path + ": truncated parameter data at " + std::to_string(i));
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(bytes[k]) << (8 * k);
        std::memcpy(&p.data[i], &bits, sizeof(double));
    }
    return p;
}

}  // namespace metaclone
