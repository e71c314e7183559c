#include "metaclone/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "metaclone/encoder.hpp"
#include "metaclone/errors.hpp"

namespace metaclone {

ConfusionCounts confusion(const std::vector<bool>& predictions,
                          const std::vector<bool>& labels) {
    if (predictions.size() != labels.size())
        throw LengthMismatch("predictions/labels length mismatch: " +
                             std::to_string(predictions.size()) + " vs " +
                             std::to_string(labels.size()));
    if (predictions.empty()) throw EmptyInput("confusion over empty input");
    ConfusionCounts c;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] && labels[i]) ++c.tp;
        else if (predictions[i] && !labels[i]) ++c.fp;
        else if (!predictions[i] && labels[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

F1Result f1(const ConfusionCounts& counts) {
    F1Result r;
    const double tp = static_cast<double>(counts.tp);
    if (counts.tp + counts.fp > 0)
        r.precision = tp / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0)
        r.recall = tp / static_cast<double>(counts.tp + counts.fn);
    if (r.precision + r.recall > 0.0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

ThresholdResult sweep_threshold(std::span<const double> similarities,
                                const std::vector<bool>& labels,
                                std::span<const double> grid) {
    if (similarities.size() != labels.size())
        throw LengthMismatch("similarities/labels length mismatch");
    if (similarities.empty()) throw EmptyInput("threshold sweep over empty input");
    if (grid.empty()) throw EmptyInput("threshold sweep over empty grid");

    ThresholdResult best{grid[0], -1.0};
    std::vector<bool> preds(similarities.size());
    for (double delta : grid) {
        for (size_t i = 0; i < similarities.size(); ++i)
            preds[i] = similarities[i] >= delta;
        const double score = f1(confusion(preds, labels)).f1;
        if (score > best.f1 || (score == best.f1 && delta < best.delta)) {
            best = {delta, score};
        }
    }
    return best;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid(201);
    for (int i = 0; i < 201; ++i) grid[i] = static_cast<double>(i - 100) / 100.0;
    return grid;
}

double map_at_r(const RetrievalRun& run) {
    if (run.queries.empty()) throw EmptyInput("MAP over empty run");
    double total = 0.0;
    for (const RetrievalQuery& q : run.queries) {
        if (q.r < 1)
            throw InsufficientCandidates("query needs R >= 1");
        if (q.ranked.size() < q.r)
            throw InsufficientCandidates("query has " +
                                         std::to_string(q.ranked.size()) +
                                         " candidates, R = " + std::to_string(q.r));
        double ap = 0.0;
        size_t hits = 0;
        for (size_t i = 0; i < q.r; ++i) {
            if (q.relevant.count(q.ranked[i]) > 0) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        total += ap / static_cast<double>(q.r);
    }
    return total / static_cast<double>(run.queries.size());
}

std::vector<std::string> rank_candidates(std::span<const double> query,
                                         std::span<const Candidate> candidates) {
    if (candidates.empty()) throw EmptyInput("ranking over empty candidate set");
    std::vector<std::pair<double, const Candidate*>> scored;
    scored.reserve(candidates.size());
    for (const Candidate& c : candidates)
        scored.emplace_back(similarity(query, c.embedding), &c);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->id < b.second->id;
    });
    std::vector<std::string> out;
    out.reserve(scored.size());
    for (const auto& [score, c] : scored) out.push_back(c->id);
    return out;
}

RetrievalRun build_retrieval_run(std::span<const Candidate> items,
                                 std::span<const std::string> labels,
                                 size_t r_config) {
    if (items.size() != labels.size())
        throw LengthMismatch("items/labels length mismatch");
    if (items.size() < 2) throw EmptyInput("retrieval needs at least 2 items");

    std::map<std::string, size_t> label_counts;
    for (const std::string& l : labels) ++label_counts[l];

    RetrievalRun run;
    for (size_t i = 0; i < items.size(); ++i) {
        const size_t relevant_others = label_counts.at(labels[i]) - 1;
        if (relevant_others == 0) continue;

        std::vector<Candidate> others;
        others.reserve(items.size() - 1);
        RetrievalQuery q;
        for (size_t j = 0; j < items.size(); ++j) {
            if (j == i) continue;
            others.push_back(items[j]);
            if (labels[j] == labels[i]) q.relevant.insert(items[j].id);
        }
        q.ranked = rank_candidates(items[i].embedding, others);
        q.r = r_config == 0 ? relevant_others : std::min(r_config, relevant_others);
        run.queries.push_back(std::move(q));
    }
    return run;
}

double expected_random_ap_at_r(size_t n_relevant, size_t m_candidates, size_t r) {
    if (r < 1 || m_candidates < r)
        throw InsufficientCandidates("need 1 <= R <= candidate count");
    if (n_relevant == 0) return 0.0;
    if (m_candidates == 1) return 1.0;
    const double n = static_cast<double>(n_relevant);
    const double m = static_cast<double>(m_candidates);
    double total = 0.0;
    for (size_t i = 1; i <= r; ++i) {
        const double di = static_cast<double>(i);
        const double expected_hits_given_rel =
            1.0 + (di - 1.0) * (n - 1.0) / (m - 1.0);
        total += (n / m) * expected_hits_given_rel / di;
    }
    return total / static_cast<double>(r);
}

double expected_random_map_at_r(const RetrievalRun& run) {
    if (run.queries.empty()) throw EmptyInput("MAP over empty run");
    double total = 0.0;
    for (const RetrievalQuery& q : run.queries)
        total += expected_random_ap_at_r(q.relevant.size(), q.ranked.size(), q.r);
    return total / static_cast<double>(run.queries.size());
}

}  // namespace metaclone
