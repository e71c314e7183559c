#pragma once

#include <string>
#include <vector>

#include "metaclone/dataset.hpp"
#include "metaclone/rng.hpp"

namespace metaclone {

// One element of a training split; episodes refer to items by index so the
// token sequences can live in a parallel array.
struct SplitItem {
    std::string submission_id;
    std::string problem_id;
};

using Split = std::vector<SplitItem>;

// A C-way K-shot task: K support items per class, the remaining items of
// those classes as query (optionally capped).
struct Episode {
    std::vector<std::string> classes;
    std::vector<size_t> support;  // indices into the split, K per class
    std::vector<size_t> query;    // indices into the split

    static constexpr size_t kNoQueryCap = 0;
};

Episode sample_episode(const Split& split, size_t n_way, size_t k_shot, Rng& rng,
                       size_t query_cap = 32);

// Balanced labeled pairs for the support and query sides, each drawn only
// from its own side, balanced at min availability.
struct EpisodePairs {
    std::vector<IndexPair> support;  // indices into the split
    std::vector<IndexPair> query;
};

EpisodePairs pairs_from_episode(const Split& split, const Episode& ep, Rng& rng);

}  // namespace metaclone
