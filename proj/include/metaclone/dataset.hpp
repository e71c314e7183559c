#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaclone/corpus.hpp"
#include "metaclone/rng.hpp"

namespace metaclone {

// One line of the binary-pair dataset. `index` carries the problem id of
// func1; on negative pairs the two problems differ and id1/id2 keep the
// record lossless.
struct PairRecord {
    std::string func1;
    std::string func2;
    std::string id1;
    std::string id2;
    std::string index;
    bool label = false;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct RetrievalRecord {
    std::string code;
    std::string id;
    std::string label;  // problem id

    friend bool operator==(const RetrievalRecord&, const RetrievalRecord&) = default;
};

enum class Scenario { I = 1, II = 2, III = 3 };

// Concrete experiment cell: which submissions train the model, which K-shot
// support set adapts it, and which test set scores it.
struct ScenarioManifest {
    Scenario scenario = Scenario::I;
    int group_id = 0;
    uint64_t seed = 0;
    int k = 0;
    Language train_lang;
    Language eval_lang;
    std::vector<std::string> train_ids;
    std::vector<std::string> support_ids;
    std::vector<std::string> test_ids;
    std::string train_path;  // Scenario III: external train dataset
};

// Scenario I protocol knobs. Defaults follow the 105-problem / 7-group /
// 499-cap experiment layout.
struct Scenario1Config {
    size_t n_problems = 105;
    size_t group_size = 15;
    size_t submission_cap = 499;
};

std::vector<PairRecord> build_binary_pairs(const Corpus& corpus,
                                           size_t target_count, uint64_t seed);

std::vector<RetrievalRecord> build_retrieval(const Corpus& corpus);

std::vector<ScenarioManifest> split_scenario1(const Corpus& corpus,
                                              const Language& lang,
                                              const std::vector<int>& shots,
                                              uint64_t seed,
                                              const Scenario1Config& cfg = {});

ScenarioManifest split_scenario2(const Corpus& corpus, const Language& train_lang,
                                 const Language& eval_lang, int k, uint64_t seed);

ScenarioManifest split_scenario3(const std::string& train_dataset_path,
                                 const Corpus& eval_corpus,
                                 const Language& eval_lang, int k, uint64_t seed);

// Throws OverlapError / InvalidArgument when the manifest violates its
// invariants against the given corpus (support/test overlap, Scenario I
// train/test problem overlap, unknown ids).
void validate_manifest(const ScenarioManifest& m, const Corpus& corpus);

void write_manifest(const ScenarioManifest& m, const std::string& path);
ScenarioManifest read_manifest(const std::string& path);

// JSONL round-trip. One object per line, UTF-8, no BOM.
void write_jsonl(const std::vector<PairRecord>& records, const std::string& path);
void write_jsonl(const std::vector<RetrievalRecord>& records, const std::string& path);
std::vector<PairRecord> read_pair_jsonl(const std::string& path);
std::vector<RetrievalRecord> read_retrieval_jsonl(const std::string& path);

// --- balanced pair sampling over an arbitrary item/class list ---
//
// Items are identified by index; classes[i] names item i's class. Positives
// pair items of one class, negatives cross classes; the result has the same
// number of each, sampled uniformly without replacement.

struct IndexPair {
    size_t first = 0;
    size_t second = 0;
    bool label = false;
};

struct PairAvailability {
    uint64_t positives = 0;
    uint64_t negatives = 0;
};

PairAvailability count_available_pairs(const std::vector<std::string>& classes);

// per_side = pairs of each label to draw. Throws InsufficientPairs when the
// classes cannot supply per_side distinct pairs of each label.
std::vector<IndexPair> sample_balanced_pairs(const std::vector<std::string>& classes,
                                             uint64_t per_side, Rng& rng);

// Balanced at min availability, optionally capped.
std::vector<IndexPair> sample_balanced_pairs_max(
    const std::vector<std::string>& classes, uint64_t cap_per_side, Rng& rng);

}  // namespace metaclone
