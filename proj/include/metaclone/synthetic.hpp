#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaclone/corpus.hpp"

namespace metaclone {

// Parameters of the generated corpus. Every problem owns a disjoint set of
// signature tokens; submissions mix signature tokens with a per-language
// shared filler vocabulary at noise_rate, so noise_rate dials task
// difficulty from trivially separable (0) toward indistinguishable (-> 1).
struct SyntheticSpec {
    size_t n_problems = 30;
    size_t n_submissions = 50;  // per problem
    size_t n_languages = 1;
    size_t vocab_per_problem = 16;
    double noise_rate = 0.3;
    uint64_t seed = 0;
};

std::vector<Language> synthetic_languages(size_t n);

// The corpus in memory, identical to what generate_synthetic writes.
Corpus synthetic_corpus(const SyntheticSpec& spec);

// Writes root/<problem_id>/<submission file> plus root/metadata.csv in the
// loader's format; returns the metadata path.
std::string generate_synthetic(const SyntheticSpec& spec, const std::string& root);

}  // namespace metaclone
