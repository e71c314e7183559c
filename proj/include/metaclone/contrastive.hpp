#pragma once

#include <span>
#include <vector>

#include "metaclone/encoder.hpp"
#include "metaclone/episode.hpp"
#include "metaclone/meta.hpp"
#include "metaclone/rng.hpp"

namespace metaclone {

// One InfoNCE batch, as indices into the split it was sampled from: a query
// item, one same-problem positive, N cross-problem negatives.
struct ContrastiveBatch {
    size_t query = 0;
    size_t positive = 0;
    std::vector<size_t> negatives;
    double temperature = 0.07;
};

struct ContrastiveConfig {
    double temperature = 0.07;
    size_t num_negatives = 15;
    size_t batches_per_task = 4;  // InfoNCE batches per meta-task query loss
};

struct InfoNceResult {
    double loss = 0.0;
    std::vector<double> d_query;
    std::vector<double> d_positive;
    std::vector<std::vector<double>> d_negatives;
    double positive_prob = 0.0;        // softmax mass on the positive
    bool positive_ranked_first = false;  // positive logit strictly largest
};

// L = -log( exp(q.k+/t) / (exp(q.k+/t) + sum_j exp(q.k-_j/t)) ), evaluated
// in log-sum-exp form, with exact gradients w.r.t. every embedding.
InfoNceResult infonce_loss(std::span<const double> query,
                           std::span<const double> positive,
                           std::span<const std::vector<double>> negatives,
                           double temperature);

// Uniform query among items whose problem has a second submission, uniform
// positive among the query's problem-mates, negatives drawn without
// replacement from other problems' submissions.
ContrastiveBatch sample_contrastive_batch(const Split& split,
                                          size_t n_negatives, Rng& rng,
                                          double temperature = 0.07);

// Mean InfoNCE over fixed batches of token sequences; embeddings are
// unit-normalized before the dot products so similarity equals cosine.
class ContrastiveObjective : public Objective {
public:
    struct Batch {
        TokenSeq query;
        TokenSeq positive;
        std::vector<TokenSeq> negatives;
    };

    ContrastiveObjective(const Encoder& enc, std::vector<Batch> batches,
                         double temperature);

    size_t dim() const override { return enc_->layout().total; }
    double loss(std::span<const double> theta) const override;
    double loss_grad(std::span<const double> theta,
                     std::span<double> grad) const override;

    // Fraction of batches whose positive outranks every negative.
    double positive_accuracy(std::span<const double> theta) const;

private:
    double eval(std::span<const double> theta, Gradients* grad,
                double* accuracy) const;

    const Encoder* enc_;
    std::vector<Batch> batches_;
    double temperature_;
};

// Task factory for train_maml_with: cross-entropy inner loop on support
// pairs, InfoNCE outer loss over batches drawn from the episode's query set.
TaskFactory contrastive_task_factory(const std::vector<TokenSeq>& seqs,
                                     const ContrastiveConfig& ccfg);

// One meta-update where each episode's query loss is InfoNCE.
MetaStepResult meta_step_contrastive(std::vector<double>& theta,
                                     const Split& split,
                                     const std::vector<TokenSeq>& seqs,
                                     const EncoderConfig& enc_cfg,
                                     std::span<const Episode> episodes,
                                     const MamlConfig& cfg,
                                     const ContrastiveConfig& ccfg, Rng& rng);

// train_maml with the contrastive meta-objective.
TrainResult train_maml_infonce(const Split& split,
                               const std::vector<TokenSeq>& seqs,
                               const EncoderConfig& enc_cfg,
                               const MamlConfig& cfg,
                               const EpisodeConfig& ep_cfg,
                               const ContrastiveConfig& ccfg);

}  // namespace metaclone
