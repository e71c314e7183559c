#include "metaclone/episode.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "metaclone/errors.hpp"

namespace metaclone {

namespace {

// Class label -> indices into the split, ordered by label for determinism.
std::map<std::string, std::vector<size_t>> group_by_class(const Split& split) {
    std::map<std::string, std::vector<size_t>> by_class;
    for (size_t i = 0; i < split.size(); ++i) {
        by_class[split[i].problem_id].push_back(i);
    }
    return by_class;
}

}  // namespace

Episode sample_episode(const Split& split, size_t n_way, size_t k_shot, Rng& rng,
                       size_t query_cap) {
    if (n_way < 2) throw NotEnoughClasses("episode needs at least 2 classes");
    if (k_shot == 0) throw NotEnoughSamples("episode needs at least 1 shot");

    auto by_class = group_by_class(split);

    // Only classes with at least K+1 items can contribute both support and query.
    std::vector<const std::pair<const std::string, std::vector<size_t>>*> eligible;
    for (const auto& entry : by_class) {
        if (entry.second.size() >= k_shot + 1) eligible.push_back(&entry);
    }
    if (eligible.size() < n_way) {
        throw NotEnoughClasses("only " + std::to_string(eligible.size()) +
                               " classes have >= " + std::to_string(k_shot + 1) +
                               " items, need " + std::to_string(n_way));
    }

    Episode ep;
    std::vector<size_t> chosen = rng.sample_indices(eligible.size(), n_way);
    for (size_t c : chosen) ep.classes.push_back(eligible[c]->first);

    for (size_t c : chosen) {
        const std::vector<size_t>& members = eligible[c]->second;
        std::vector<size_t> order = rng.sample_indices(members.size(), members.size());
        for (size_t j = 0; j < k_shot; ++j) ep.support.push_back(members[order[j]]);
        for (size_t j = k_shot; j < order.size(); ++j) ep.query.push_back(members[order[j]]);
    }

    if (query_cap != Episode::kNoQueryCap && ep.query.size() > query_cap) {
        rng.shuffle(ep.query);
        ep.query.resize(query_cap);
        std::sort(ep.query.begin(), ep.query.end());
    }
    return ep;
}

namespace {

// Sample balanced pairs within one side of an episode, then map the local
// pair indices back onto split indices.
std::vector<IndexPair> side_pairs(const Split& split,
                                  const std::vector<size_t>& side, Rng& rng) {
    std::vector<std::string> labels;
    labels.reserve(side.size());
    for (size_t idx : side) labels.push_back(split[idx].problem_id);

    std::vector<IndexPair> local = sample_balanced_pairs_max(
        labels, std::numeric_limits<uint64_t>::max(), rng);
    for (IndexPair& p : local) {
        p.first = side[p.first];
        p.second = side[p.second];
    }
    return local;
}

}  // namespace

EpisodePairs pairs_from_episode(const Split& split, const Episode& ep, Rng& rng) {
    if (ep.classes.size() < 2) {
        throw DegenerateEpisode("pair sampling needs at least 2 classes");
    }
    EpisodePairs out;
    out.support = side_pairs(split, ep.support, rng);
    out.query = side_pairs(split, ep.query, rng);
    if (out.support.empty() || out.query.empty()) {
        throw DegenerateEpisode("episode side produced no labeled pairs");
    }
    return out;
}

}  // namespace metaclone
