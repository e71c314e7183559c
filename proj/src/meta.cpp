#include "metaclone/meta.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "metaclone/errors.hpp"

namespace metaclone {

void Objective::hessian_vec(std::span<const double>, std::span<const double>,
                            std::span<double>) const {
    throw InvalidArgument("objective has no Hessian-vector product");
}

PairObjective::PairObjective(const Encoder& enc, std::vector<LabeledPair> pairs)
    : enc_(&enc), pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw EmptyInput("objective over empty pair set");
}

double PairObjective::loss(std::span<const double> theta) const {
    double total = 0.0;
    for (const auto& pair : pairs_) {
        const auto [prob, logit] = enc_->classify_pair(theta, pair.first, pair.second);
        (void)prob;
        total += bce_from_logit(logit, pair.label);
    }
    return total / static_cast<double>(pairs_.size());
}

double PairObjective::loss_grad(std::span<const double> theta,
                                std::span<double> grad) const {
    Gradients g;
    const double loss = enc_->loss_and_grad(theta, pairs_, g);
    std::copy(g.begin(), g.end(), grad.begin());
    return loss;
}

MamlMode parse_maml_mode(const std::string& name) {
    if (name == "first_order" || name == "FirstOrder") return MamlMode::FirstOrder;
    if (name == "full" || name == "Full") return MamlMode::Full;
    throw InvalidArgument("unknown MAML mode: " + name);
}

std::string maml_mode_name(MamlMode mode) {
    return mode == MamlMode::FirstOrder ? "first_order" : "full";
}

std::string train_log_csv(const TrainLog& log) {
    std::ostringstream out;
    out << "meta_step,outer_loss,mean_task_loss,seconds\n";
    char buf[128];
    for (const auto& e : log.steps) {
        const double mean =
            e.task_losses.empty()
                ? 0.0
                : e.outer_loss / static_cast<double>(e.task_losses.size());
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.6f\n", e.meta_step,
                      e.outer_loss, mean, e.seconds);
        out << buf;
    }
    return out.str();
}

namespace {

void check_config(const MamlConfig& cfg) {
    if (cfg.alpha <= 0.0 || cfg.beta <= 0.0)
        throw InvalidArgument("learning rates must be positive");
}

// theta_0 .. theta_S; back() is the adapted parameter vector.
std::vector<std::vector<double>> inner_trajectory(std::span<const double> theta,
                                                  const Objective& support,
                                                  double alpha, size_t steps) {
    std::vector<std::vector<double>> traj;
    traj.reserve(steps + 1);
    traj.emplace_back(theta.begin(), theta.end());
    std::vector<double> grad(support.dim());
    for (size_t t = 0; t < steps; ++t) {
        const std::vector<double>& cur = traj.back();
        support.loss_grad(cur, grad);
        std::vector<double> next(cur);
        for (size_t i = 0; i < next.size(); ++i) next[i] -= alpha * grad[i];
        traj.push_back(std::move(next));
    }
    return traj;
}

}  // namespace

std::vector<double> inner_update(std::span<const double> theta,
                                 const Objective& objective, double alpha,
                                 size_t steps) {
    std::vector<double> cur(theta.begin(), theta.end());
    if (steps == 0 || alpha == 0.0) return cur;
    std::vector<double> grad(objective.dim());
    for (size_t t = 0; t < steps; ++t) {
        objective.loss_grad(cur, grad);
        for (size_t i = 0; i < cur.size(); ++i) cur[i] -= alpha * grad[i];
    }
    return cur;
}

MetaStepResult meta_step(std::vector<double>& theta,
                         std::span<const MetaTask> tasks,
                         const MamlConfig& cfg) {
    if (tasks.empty()) throw EmptyInput("meta_step over empty task batch");
    check_config(cfg);

    MetaStepResult result;
    std::vector<double> meta_grad(theta.size(), 0.0);
    std::vector<double> grad(theta.size());

    for (const MetaTask& task : tasks) {
        if (task.support == nullptr || task.query == nullptr)
            throw InvalidArgument("meta task missing an objective");

        if (cfg.mode == MamlMode::FirstOrder || cfg.inner_steps == 0) {
            const std::vector<double> adapted =
                inner_update(theta, *task.support, cfg.alpha, cfg.inner_steps);
            const double task_loss = task.query->loss_grad(adapted, grad);
            result.task_losses.push_back(task_loss);
            for (size_t i = 0; i < meta_grad.size(); ++i) meta_grad[i] += grad[i];
        } else {
            if (!task.support->has_hessian_vec())
                throw InvalidArgument(
                    "Full mode needs a support objective with hessian_vec");
            const auto traj =
                inner_trajectory(theta, *task.support, cfg.alpha, cfg.inner_steps);
            const double task_loss = task.query->loss_grad(traj.back(), grad);
            result.task_losses.push_back(task_loss);
            // g <- (I - alpha * H_support(theta_t)) g, walking the
            // trajectory backwards; what remains is d(query loss)/d(theta_0).
            std::vector<double> hv(theta.size());
            for (size_t t = cfg.inner_steps; t-- > 0;) {
                task.support->hessian_vec(traj[t], grad, hv);
                for (size_t i = 0; i < grad.size(); ++i)
                    grad[i] -= cfg.alpha * hv[i];
            }
            for (size_t i = 0; i < meta_grad.size(); ++i) meta_grad[i] += grad[i];
        }
    }

    for (double l : result.task_losses) result.outer_loss += l;
    for (size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.beta * meta_grad[i];
    return result;
}

namespace {

OwnedTask make_pair_task(const Encoder& enc, const Split& split,
                         const std::vector<TokenSeq>& seqs, const Episode& ep,
                         Rng& rng) {
    const EpisodePairs pairs = pairs_from_episode(split, ep, rng);
    auto to_labeled = [&](const std::vector<IndexPair>& idx) {
        std::vector<LabeledPair> out;
        out.reserve(idx.size());
        for (const IndexPair& p : idx)
            out.push_back({seqs[p.first], seqs[p.second], p.label ? 1.0 : 0.0});
        return out;
    };
    OwnedTask task;
    task.support = std::make_unique<PairObjective>(enc, to_labeled(pairs.support));
    task.query = std::make_unique<PairObjective>(enc, to_labeled(pairs.query));
    return task;
}

}  // namespace

TrainResult train_maml_with(const Split& split,
                            const std::vector<TokenSeq>& seqs,
                            const EncoderConfig& enc_cfg,
                            const MamlConfig& cfg, const EpisodeConfig& ep_cfg,
                            const TaskFactory& make_task) {
    if (split.size() != seqs.size())
        throw LengthMismatch("split and token sequences differ in length");
    check_config(cfg);

    TrainResult result;
    result.params = init_params(enc_cfg);
    const Encoder enc(enc_cfg);
    Rng rng(cfg.seed);

    const auto start = std::chrono::steady_clock::now();
    size_t step_idx = 0;
    for (size_t epoch = 0; epoch < cfg.outer_epochs; ++epoch) {
        size_t remaining = cfg.episodes_per_epoch;
        while (remaining > 0) {
            const size_t batch = std::min(remaining, cfg.meta_batch);
            remaining -= batch;

            std::vector<OwnedTask> owned;
            owned.reserve(batch);
            std::vector<MetaTask> tasks;
            tasks.reserve(batch);
            for (size_t b = 0; b < batch; ++b) {
                const Episode ep = sample_episode(split, ep_cfg.n_way,
                                                  ep_cfg.k_shot, rng,
                                                  ep_cfg.query_cap);
                owned.push_back(make_task(enc, split, ep, rng));
                tasks.push_back({owned.back().support.get(),
                                 owned.back().query.get()});
            }

            const MetaStepResult step = meta_step(result.params.data, tasks, cfg);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
            result.log.steps.push_back(
                {step_idx++, step.outer_loss, step.task_losses, seconds});
        }
    }
    return result;
}

TrainResult train_maml(const Split& split, const std::vector<TokenSeq>& seqs,
                       const EncoderConfig& enc_cfg, const MamlConfig& cfg,
                       const EpisodeConfig& ep_cfg) {
    return train_maml_with(split, seqs, enc_cfg, cfg, ep_cfg,
                           [&seqs](const Encoder& enc, const Split& sp,
                                   const Episode& ep, Rng& rng) {
                               return make_pair_task(enc, sp, seqs, ep, rng);
                           });
}

TrainResult train_conventional(const Split& split,
                               const std::vector<TokenSeq>& seqs,
                               const EncoderConfig& enc_cfg, MamlConfig cfg,
                               const EpisodeConfig& ep_cfg) {
    cfg.inner_steps = 0;
    return train_maml(split, seqs, enc_cfg, cfg, ep_cfg);
}

Params finetune(const Params& start, std::span<const LabeledPair> support,
                size_t steps, double lr) {
    if (lr <= 0.0) throw InvalidArgument("learning rate must be positive");
    Params out = start;
    if (steps == 0) return out;
    const Encoder enc(start.config);
    const PairObjective objective(
        enc, std::vector<LabeledPair>(support.begin(), support.end()));
    out.data = inner_update(start.data, objective, lr, steps);
    return out;
}

}  // namespace metaclone
