#include "metaclone/contrastive.hpp"

#include <algorithm>
#include <cmath>

#include "metaclone/errors.hpp"

namespace metaclone {

InfoNceResult infonce_loss(std::span<const double> query,
                           std::span<const double> positive,
                           std::span<const std::vector<double>> negatives,
                           double temperature) {
    if (temperature <= 0.0)
        throw NonPositiveTemperature("temperature must be > 0, got " +
                                     std::to_string(temperature));
    if (negatives.empty()) throw NoNegatives("InfoNCE needs at least one negative");
    const size_t d = query.size();
    if (positive.size() != d)
        throw LengthMismatch("positive embedding dim mismatch");
    for (const auto& n : negatives)
        if (n.size() != d) throw LengthMismatch("negative embedding dim mismatch");

    auto dot = [d](std::span<const double> a, std::span<const double> b) {
        double s = 0.0;
        for (size_t i = 0; i < d; ++i) s += a[i] * b[i];
        return s;
    };

    const size_t n = negatives.size();
    std::vector<double> logits(n + 1);
    logits[0] = dot(query, positive) / temperature;
    for (size_t j = 0; j < n; ++j)
        logits[j + 1] = dot(query, negatives[j]) / temperature;

    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    const double lse = m + std::log(sum);

    InfoNceResult res;
    res.loss = lse - logits[0];
    res.positive_prob = std::exp(logits[0] - lse);
    res.positive_ranked_first = true;
    for (size_t j = 1; j <= n; ++j)
        if (logits[j] >= logits[0]) res.positive_ranked_first = false;

    // dL/dl_0 = p_0 - 1, dL/dl_j = p_j; chain through l = (q . k) / t.
    const double inv_t = 1.0 / temperature;
    const double d_l0 = res.positive_prob - 1.0;
    res.d_query.assign(d, 0.0);
    res.d_positive.assign(d, 0.0);
    res.d_negatives.assign(n, std::vector<double>(d, 0.0));
    for (size_t i = 0; i < d; ++i) {
        res.d_query[i] += d_l0 * positive[i] * inv_t;
        res.d_positive[i] = d_l0 * query[i] * inv_t;
    }
    for (size_t j = 0; j < n; ++j) {
        const double p_j = std::exp(logits[j + 1] - lse);
        for (size_t i = 0; i < d; ++i) {
            res.d_query[i] += p_j * negatives[j][i] * inv_t;
            res.d_negatives[j][i] = p_j * query[i] * inv_t;
        }
    }
    return res;
}

ContrastiveBatch sample_contrastive_batch(const Split& split,
                                          size_t n_negatives, Rng& rng,
                                          double temperature) {
    if (n_negatives == 0) throw NoNegatives("batch needs at least one negative");

    std::vector<size_t> eligible;
    for (size_t i = 0; i < split.size(); ++i) {
        for (size_t j = 0; j < split.size(); ++j) {
            if (j != i && split[j].problem_id == split[i].problem_id) {
                eligible.push_back(i);
                break;
            }
        }
    }
    if (eligible.empty())
        throw InsufficientData("no problem in the split has two submissions");

    ContrastiveBatch batch;
    batch.temperature = temperature;
    batch.query = eligible[rng.below(eligible.size())];

    std::vector<size_t> mates;
    std::vector<size_t> others;
    for (size_t i = 0; i < split.size(); ++i) {
        if (i == batch.query) continue;
        if (split[i].problem_id == split[batch.query].problem_id)
            mates.push_back(i);
        else
            others.push_back(i);
    }
    batch.positive = mates[rng.below(mates.size())];

    if (others.size() < n_negatives)
        throw InsufficientData("need " + std::to_string(n_negatives) +
                               " cross-problem negatives, have " +
                               std::to_string(others.size()));
    for (size_t pick : rng.sample_indices(others.size(), n_negatives))
        batch.negatives.push_back(others[pick]);
    return batch;
}

namespace {

// u = e / |e|; converts d(loss)/d(u) in place into d(loss)/d(e).
void unnormalize_grad(std::span<const double> u, double norm,
                      std::span<double> d_u_to_e) {
    double proj = 0.0;
    for (size_t i = 0; i < u.size(); ++i) proj += d_u_to_e[i] * u[i];
    const double inv = 1.0 / norm;
    for (size_t i = 0; i < u.size(); ++i)
        d_u_to_e[i] = (d_u_to_e[i] - proj * u[i]) * inv;
}

std::vector<double> normalize(std::span<const double> e, double& norm_out) {
    double sq = 0.0;
    for (double v : e) sq += v * v;
    norm_out = std::sqrt(sq);
    if (norm_out == 0.0) throw ZeroVector("cannot unit-normalize a zero embedding");
    std::vector<double> u(e.size());
    for (size_t i = 0; i < e.size(); ++i) u[i] = e[i] / norm_out;
    return u;
}

}  // namespace

ContrastiveObjective::ContrastiveObjective(const Encoder& enc,
                                           std::vector<Batch> batches,
                                           double temperature)
    : enc_(&enc), batches_(std::move(batches)), temperature_(temperature) {
    if (temperature_ <= 0.0)
        throw NonPositiveTemperature("temperature must be > 0");
    if (batches_.empty()) throw EmptyInput("objective over empty batch set");
    for (const auto& b : batches_)
        if (b.negatives.empty()) throw NoNegatives("batch without negatives");
}

double ContrastiveObjective::eval(std::span<const double> theta,
                                  Gradients* grad, double* accuracy) const {
    if (grad != nullptr) grad->assign(enc_->layout().total, 0.0);
    const double inv_b = 1.0 / static_cast<double>(batches_.size());
    double total = 0.0;
    size_t hits = 0;

    for (const auto& batch : batches_) {
        const Encoder::EmbedCache cq = enc_->embed_cached(theta, batch.query);
        const Encoder::EmbedCache cp = enc_->embed_cached(theta, batch.positive);
        std::vector<Encoder::EmbedCache> cn;
        cn.reserve(batch.negatives.size());
        for (const auto& seq : batch.negatives)
            cn.push_back(enc_->embed_cached(theta, seq));

        double nq = 0.0, np = 0.0;
        const std::vector<double> uq = normalize(cq.out, nq);
        const std::vector<double> up = normalize(cp.out, np);
        std::vector<double> nn(cn.size());
        std::vector<std::vector<double>> un;
        un.reserve(cn.size());
        for (size_t j = 0; j < cn.size(); ++j)
            un.push_back(normalize(cn[j].out, nn[j]));

        InfoNceResult r = infonce_loss(uq, up, un, temperature_);
        total += r.loss * inv_b;
        if (r.positive_ranked_first) ++hits;

        if (grad != nullptr) {
            for (double& v : r.d_query) v *= inv_b;
            for (double& v : r.d_positive) v *= inv_b;
            unnormalize_grad(uq, nq, r.d_query);
            unnormalize_grad(up, np, r.d_positive);
            enc_->backprop_embedding(theta, cq, r.d_query, *grad);
            enc_->backprop_embedding(theta, cp, r.d_positive, *grad);
            for (size_t j = 0; j < cn.size(); ++j) {
                for (double& v : r.d_negatives[j]) v *= inv_b;
                unnormalize_grad(un[j], nn[j], r.d_negatives[j]);
                enc_->backprop_embedding(theta, cn[j], r.d_negatives[j], *grad);
            }
        }
    }
    if (accuracy != nullptr)
        *accuracy = static_cast<double>(hits) / static_cast<double>(batches_.size());
    return total;
}

double ContrastiveObjective::loss(std::span<const double> theta) const {
    return eval(theta, nullptr, nullptr);
}

double ContrastiveObjective::loss_grad(std::span<const double> theta,
                                       std::span<double> grad) const {
    Gradients g;
    const double loss = eval(theta, &g, nullptr);
    std::copy(g.begin(), g.end(), grad.begin());
    return loss;
}

double ContrastiveObjective::positive_accuracy(
    std::span<const double> theta) const {
    double acc = 0.0;
    eval(theta, nullptr, &acc);
    return acc;
}

namespace {

OwnedTask make_contrastive_task(const Encoder& enc, const Split& split,
                                const std::vector<TokenSeq>& seqs,
                                const Episode& ep,
                                const ContrastiveConfig& ccfg, Rng& rng) {
    const EpisodePairs pairs = pairs_from_episode(split, ep, rng);
    std::vector<LabeledPair> support;
    support.reserve(pairs.support.size());
    for (const IndexPair& p : pairs.support)
        support.push_back({seqs[p.first], seqs[p.second], p.label ? 1.0 : 0.0});

    // Contrastive batches are drawn from the episode's query items only.
    Split query_split;
    query_split.reserve(ep.query.size());
    for (size_t idx : ep.query) query_split.push_back(split[idx]);

    // Negatives cannot exceed the smallest cross-problem pool in the query
    // side; clamp so thin episodes still train.
    size_t max_others = query_split.size();
    for (const std::string& cls : ep.classes) {
        size_t count = 0;
        for (const auto& item : query_split)
            if (item.problem_id == cls) ++count;
        max_others = std::min(max_others, query_split.size() - count);
    }
    const size_t n_neg = std::min(ccfg.num_negatives, max_others);
    if (n_neg == 0) throw DegenerateEpisode("query side has no cross-problem items");

    std::vector<ContrastiveObjective::Batch> batches;
    batches.reserve(ccfg.batches_per_task);
    for (size_t b = 0; b < ccfg.batches_per_task; ++b) {
        const ContrastiveBatch cb =
            sample_contrastive_batch(query_split, n_neg, rng, ccfg.temperature);
        ContrastiveObjective::Batch tb;
        tb.query = seqs[ep.query[cb.query]];
        tb.positive = seqs[ep.query[cb.positive]];
        for (size_t j : cb.negatives) tb.negatives.push_back(seqs[ep.query[j]]);
        batches.push_back(std::move(tb));
    }

    OwnedTask task;
    task.support = std::make_unique<PairObjective>(enc, std::move(support));
    task.query = std::make_unique<ContrastiveObjective>(enc, std::move(batches),
                                                        ccfg.temperature);
    return task;
}

}  // namespace

TaskFactory contrastive_task_factory(const std::vector<TokenSeq>& seqs,
                                     const ContrastiveConfig& ccfg) {
    return [&seqs, ccfg](const Encoder& enc, const Split& split,
                         const Episode& ep, Rng& rng) {
        return make_contrastive_task(enc, split, seqs, ep, ccfg, rng);
    };
}

MetaStepResult meta_step_contrastive(std::vector<double>& theta,
                                     const Split& split,
                                     const std::vector<TokenSeq>& seqs,
                                     const EncoderConfig& enc_cfg,
                                     std::span<const Episode> episodes,
                                     const MamlConfig& cfg,
                                     const ContrastiveConfig& ccfg, Rng& rng) {
    if (episodes.empty()) throw EmptyInput("meta_step over empty episode batch");
    const Encoder enc(enc_cfg);
    std::vector<OwnedTask> owned;
    owned.reserve(episodes.size());
    std::vector<MetaTask> tasks;
    tasks.reserve(episodes.size());
    for (const Episode& ep : episodes) {
        owned.push_back(make_contrastive_task(enc, split, seqs, ep, ccfg, rng));
        tasks.push_back({owned.back().support.get(), owned.back().query.get()});
    }
    return meta_step(theta, tasks, cfg);
}

TrainResult train_maml_infonce(const Split& split,
                               const std::vector<TokenSeq>& seqs,
                               const EncoderConfig& enc_cfg,
                               const MamlConfig& cfg,
                               const EpisodeConfig& ep_cfg,
                               const ContrastiveConfig& ccfg) {
    return train_maml_with(split, seqs, enc_cfg, cfg, ep_cfg,
                           contrastive_task_factory(seqs, ccfg));
}

}  // namespace metaclone
