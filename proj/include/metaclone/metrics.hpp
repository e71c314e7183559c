#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace metaclone {

struct ConfusionCounts {
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t tn = 0;
    uint64_t fn = 0;
};

ConfusionCounts confusion(const std::vector<bool>& predictions,
                          const std::vector<bool>& labels);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero-denominator conventions: precision = 0 when tp+fp = 0, recall = 0
// when tp+fn = 0, f1 = 0 when precision+recall = 0.
F1Result f1(const ConfusionCounts& counts);

struct ThresholdResult {
    double delta = 0.0;
    double f1 = 0.0;
};

// Prediction rule: clone iff similarity >= delta. Returns the grid point
// maximizing F1; ties broken toward the smaller delta.
ThresholdResult sweep_threshold(std::span<const double> similarities,
                                const std::vector<bool>& labels,
                                std::span<const double> grid);

// 201 evenly spaced points covering [-1, 1].
std::vector<double> default_threshold_grid();

struct RetrievalQuery {
    std::vector<std::string> ranked;  // candidate ids, best first
    std::set<std::string> relevant;   // same-label candidate ids
    size_t r = 0;
};

struct RetrievalRun {
    std::vector<RetrievalQuery> queries;
};

// Mean over queries of AP@R = (1/R) sum_{i<=R} Prec(i) * rel(i).
double map_at_r(const RetrievalRun& run);

struct Candidate {
    std::string id;
    std::vector<double> embedding;
};

// Candidate ids by descending cosine against the query; ties broken by id
// ascending.
std::vector<std::string> rank_candidates(std::span<const double> query,
                                         std::span<const Candidate> candidates);

// Leave-one-out retrieval over a labeled embedding set: every item queries
// all the others, R = min(r_config, #same-label others); r_config = 0 means
// "all relevant". Items whose label appears nowhere else are skipped.
RetrievalRun build_retrieval_run(std::span<const Candidate> items,
                                 std::span<const std::string> labels,
                                 size_t r_config = 0);

// Expected AP@R of a uniformly random ranking with n_relevant relevant items
// among m_candidates.
double expected_random_ap_at_r(size_t n_relevant, size_t m_candidates, size_t r);

// The same expectation averaged over a run's queries: the analytic baseline
// a trained ranker must beat.
double expected_random_map_at_r(const RetrievalRun& run);

}  // namespace metaclone
