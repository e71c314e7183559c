#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "metaclone/encoder.hpp"
#include "metaclone/episode.hpp"

namespace metaclone {

// Differentiable scalar objective over a flat parameter vector. The MAML
// routines are written against this interface so that tiny probe models can
// exercise the second-order path; the encoder side stays first-order.
class Objective {
public:
    virtual ~Objective() = default;

    virtual size_t dim() const = 0;
    virtual double loss(std::span<const double> theta) const = 0;
    // Overwrites grad (length dim()) and returns the loss.
    virtual double loss_grad(std::span<const double> theta,
                             std::span<double> grad) const = 0;

    // Hessian-vector product out = H(theta) * v, required only by
    // MamlMode::Full. The default throws InvalidArgument.
    virtual bool has_hessian_vec() const { return false; }
    virtual void hessian_vec(std::span<const double> theta,
                             std::span<const double> v,
                             std::span<double> out) const;
};

// Mean sigmoid cross-entropy of the siamese encoder over fixed labeled pairs.
class PairObjective : public Objective {
public:
    PairObjective(const Encoder& enc, std::vector<LabeledPair> pairs);

    size_t dim() const override { return enc_->layout().total; }
    double loss(std::span<const double> theta) const override;
    double loss_grad(std::span<const double> theta,
                     std::span<double> grad) const override;

private:
    const Encoder* enc_;
    std::vector<LabeledPair> pairs_;
};

struct MetaTask {
    const Objective* support = nullptr;
    const Objective* query = nullptr;
};

enum class MamlMode { FirstOrder, Full };

MamlMode parse_maml_mode(const std::string& name);
std::string maml_mode_name(MamlMode mode);

struct MamlConfig {
    double alpha = 5e-5;  // inner-loop lr
    double beta = 5e-5;   // outer-loop lr
    size_t inner_steps = 10;
    size_t outer_epochs = 10;
    size_t episodes_per_epoch = 100;
    size_t meta_batch = 4;  // tasks per meta-step
    MamlMode mode = MamlMode::FirstOrder;
    uint64_t seed = 0;
};

// Episode shape used when meta-training the encoder.
struct EpisodeConfig {
    size_t n_way = 2;
    size_t k_shot = 10;
    size_t query_cap = 32;
};

struct TrainLogEntry {
    size_t meta_step = 0;
    double outer_loss = 0.0;  // sum of task query losses at adapted params
    std::vector<double> task_losses;
    double seconds = 0.0;  // wall time since training started
};

struct TrainLog {
    std::vector<TrainLogEntry> steps;
};

// CSV with header meta_step,outer_loss,mean_task_loss,seconds.
std::string train_log_csv(const TrainLog& log);

// `steps` SGD steps on `objective` starting from theta; theta is untouched.
std::vector<double> inner_update(std::span<const double> theta,
                                 const Objective& objective, double alpha,
                                 size_t steps);

struct MetaStepResult {
    double outer_loss = 0.0;
    std::vector<double> task_losses;
};

// One meta-update over a batch of tasks, applied to theta in place:
// theta <- theta - beta * sum_i meta_grad_i. FirstOrder takes each task's
// query gradient at the adapted parameters; Full additionally backpropagates
// through the inner trajectory via support Hessian-vector products.
MetaStepResult meta_step(std::vector<double>& theta,
                         std::span<const MetaTask> tasks,
                         const MamlConfig& cfg);

struct OwnedTask {
    std::unique_ptr<Objective> support;
    std::unique_ptr<Objective> query;
};

// Builds one task's objectives from a sampled episode. The contrastive
// trainer swaps the query side for InfoNCE; the default is cross-entropy on
// balanced pairs from each side.
using TaskFactory =
    std::function<OwnedTask(const Encoder& enc, const Split& split,
                            const Episode& episode, Rng& rng)>;

struct TrainResult {
    Params params;
    TrainLog log;
};

// Meta-trains a fresh encoder over episodes sampled from the split.
// `seqs` holds the token sequence of each split item. Deterministic per
// cfg.seed (and enc_cfg.init_seed).
TrainResult train_maml(const Split& split, const std::vector<TokenSeq>& seqs,
                       const EncoderConfig& enc_cfg, const MamlConfig& cfg,
                       const EpisodeConfig& ep_cfg);

// Same loop with a caller-supplied task factory.
TrainResult train_maml_with(const Split& split,
                            const std::vector<TokenSeq>& seqs,
                            const EncoderConfig& enc_cfg,
                            const MamlConfig& cfg, const EpisodeConfig& ep_cfg,
                            const TaskFactory& make_task);

// Baseline arm: no inner adaptation, plain SGD on the pooled episode query
// loss (train_maml with inner_steps = 0).
TrainResult train_conventional(const Split& split,
                               const std::vector<TokenSeq>& seqs,
                               const EncoderConfig& enc_cfg, MamlConfig cfg,
                               const EpisodeConfig& ep_cfg);

// Plain SGD on a support set starting from trained parameters.
Params finetune(const Params& start, std::span<const LabeledPair> support,
                size_t steps, double lr);

}  // namespace metaclone
