#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metaclone/contrastive.hpp"
#include "metaclone/corpus.hpp"
#include "metaclone/dataset.hpp"
#include "metaclone/encoder.hpp"
#include "metaclone/meta.hpp"

namespace metaclone {

// One experiment matrix: scenario x groups x shots x seeds, resolved from a
// config JSON (see README for the schema).
struct ExperimentConfig {
    std::string task = "binary";  // "binary" | "retrieval"
    Scenario scenario = Scenario::I;

    std::string corpus_root;
    std::string metadata;        // defaults to corpus_root/metadata.csv
    std::string store;           // extract output, alternative to corpus_root
    std::string external_train;  // Scenario III training JSONL

    Language train_lang = Language::cpp();
    Language eval_lang = Language::cpp();

    std::vector<int> shots = {5, 10, 15};
    std::vector<uint64_t> seeds = {1};

    EncoderConfig encoder;
    MamlConfig maml;
    EpisodeConfig episode;

    std::string objective = "ce";  // "ce" | "infonce"
    ContrastiveConfig contrastive;
    bool no_meta = false;

    size_t eval_pair_count = 400;  // balanced pairs per binary evaluation
    size_t retrieval_r = 0;        // 0: per query, all same-label items
    size_t finetune_steps = 0;     // 0: use maml.inner_steps
    double finetune_lr = 0.0;      // 0: use maml.alpha

    Scenario1Config scenario1;
};

ExperimentConfig load_experiment_config(const std::string& path);

// The fully resolved config as canonical JSON, and the hash every report embeds.
std::string experiment_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Split items plus their token sequences. Empty sources embed a sentinel
// token so downstream code never sees an empty sequence.
struct TokenizedSplit {
    Split split;
    std::vector<TokenSeq> seqs;
};

TokenizedSplit tokenized_split(const Corpus& corpus,
                               const std::vector<std::string>& ids,
                               const EncoderConfig& enc);

// Builds an episode source from an external JSONL train set: retrieval
// records keep their label as the class; pair records contribute both sides
// of each positive pair under the pair's problem id.
TokenizedSplit split_from_external(const std::string& path,
                                   const EncoderConfig& enc);

TokenSeq sequence_or_sentinel(const std::string& source, const EncoderConfig& enc);

// Loads the corpus the config points at: the JSONL store when `store` is
// set, otherwise the tree under `corpus_root`.
Corpus load_configured_corpus(const ExperimentConfig& cfg);

// Scenario-dispatching manifest generation for one seed.
std::vector<ScenarioManifest> make_manifests(const ExperimentConfig& cfg,
                                             const Corpus& corpus,
                                             uint64_t seed);

// Trains the encoder for the manifest's train split exactly as run_experiment
// would, including the derived init/train seeds, so a standalone `train`
// reproduces the matrix cell bit for bit.
TrainResult train_manifest(const ExperimentConfig& cfg, const Corpus& corpus,
                           const ScenarioManifest& m);

// Deterministic per-cell seed streams derived from the cell coordinates, so a
// cell reproduces bit-identically whether it runs in a matrix or standalone.
struct CellSeeds {
    uint64_t support = 0;
    uint64_t eval = 0;
};
CellSeeds cell_seeds(const ScenarioManifest& m);

// Balanced clone/non-clone pairs over every submission in `support`,
// tokenized and ready for fine-tuning.
std::vector<LabeledPair> support_pairs(const Corpus& support,
                                       const EncoderConfig& enc, uint64_t seed);

struct EvalOutcome {
    std::string metric_name;  // "f1" | "map_at_r"
    double value = 0.0;
    std::map<std::string, double> metric;  // full metric object
};

// Scores `params` on a test corpus: balanced-pair F1 for "binary",
// leave-one-out MAP@R for "retrieval".
EvalOutcome evaluate_split(const std::string& task, const Corpus& test_corpus,
                           const Params& params, size_t eval_pair_count,
                           size_t retrieval_r, uint64_t eval_seed);

// One cell's report object with pinned key order, and its file name.
std::string report_json(const ExperimentConfig& cfg, const ScenarioManifest& m,
                        const EvalOutcome& outcome);
std::string report_filename(const ScenarioManifest& m);

struct CellResult {
    int scenario = 0;
    int group_id = 0;
    int k = 0;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::string metric_name;  // "f1" | "map_at_r"
    double metric_value = 0.0;
    std::map<std::string, double> metric;  // full metric object
    std::string report_path;
};

struct RunResult {
    std::vector<CellResult> cells;
    std::string aggregate_csv;
    std::string config_path;
    bool any_failed = false;
};

// Full matrix: per seed, generate manifests; per cell, train (cached per
// train split), fine-tune on the manifest's support set, evaluate, write a
// report JSON. Cell failures are recorded, not fatal.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// Aggregate CSV analysis: mean primary metric per shot count and the best X
// (argmax of the mean, ties toward the smaller X).
struct AggregateSummary {
    std::map<int, double> mean_by_shot;
    int best_shot = 0;
};

AggregateSummary summarize_aggregate(const std::string& csv_path);

}  // namespace metaclone
