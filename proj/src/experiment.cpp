#include "metaclone/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "metaclone/errors.hpp"
#include "metaclone/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace metaclone {

namespace {

int scenario_number(Scenario s) { return static_cast<int>(s); }

Scenario scenario_from_number(int n) {
    switch (n) {
        case 1: return Scenario::I;
        case 2: return Scenario::II;
        case 3: return Scenario::III;
        default: throw InvalidArgument("scenario must be 1, 2 or 3, got " +
                                       std::to_string(n));
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("config field `") + key + "`: " + e.what());
    }
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }

    ExperimentConfig cfg;
    cfg.task = get_or<std::string>(j, "task", cfg.task);
    if (cfg.task != "binary" && cfg.task != "retrieval")
        throw InvalidArgument("task must be \"binary\" or \"retrieval\"");
    cfg.scenario = scenario_from_number(get_or<int>(j, "scenario", 1));

    cfg.corpus_root = get_or<std::string>(j, "corpus_root", "");
    cfg.metadata = get_or<std::string>(j, "metadata", "");
    cfg.store = get_or<std::string>(j, "store", "");
    cfg.external_train = get_or<std::string>(j, "external_train", "");

    cfg.train_lang = Language::parse(get_or<std::string>(j, "train_lang", "C++"));
    cfg.eval_lang = Language::parse(
        get_or<std::string>(j, "eval_lang", cfg.train_lang.str()));

    cfg.shots = get_or<std::vector<int>>(j, "shots", cfg.shots);
    cfg.seeds = get_or<std::vector<uint64_t>>(j, "seeds", cfg.seeds);
    if (cfg.shots.empty()) throw InvalidArgument("shots list is empty");
    if (cfg.seeds.empty()) throw InvalidArgument("seeds list is empty");
    for (int k : cfg.shots)
        if (k < 1) throw InvalidArgument("shot counts must be >= 1");

    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        cfg.encoder.vocab_size = get_or<uint32_t>(e, "vocab_size", cfg.encoder.vocab_size);
        cfg.encoder.embed_dim = get_or<uint32_t>(e, "embed_dim", cfg.encoder.embed_dim);
        cfg.encoder.hidden_dim = get_or<uint32_t>(e, "hidden_dim", cfg.encoder.hidden_dim);
        cfg.encoder.out_dim = get_or<uint32_t>(e, "out_dim", cfg.encoder.out_dim);
        cfg.encoder.max_len = get_or<uint32_t>(e, "max_len", cfg.encoder.max_len);
        if ((cfg.encoder.vocab_size & (cfg.encoder.vocab_size - 1)) != 0 ||
            cfg.encoder.vocab_size == 0)
            throw InvalidArgument("vocab_size must be a power of two");
    }

    if (j.contains("maml")) {
        const json& m = j.at("maml");
        cfg.maml.alpha = get_or<double>(m, "alpha", cfg.maml.alpha);
        cfg.maml.beta = get_or<double>(m, "beta", cfg.maml.beta);
        cfg.maml.inner_steps = get_or<size_t>(m, "inner_steps", cfg.maml.inner_steps);
        cfg.maml.outer_epochs = get_or<size_t>(m, "outer_epochs", cfg.maml.outer_epochs);
        cfg.maml.episodes_per_epoch =
            get_or<size_t>(m, "episodes_per_epoch", cfg.maml.episodes_per_epoch);
        cfg.maml.meta_batch = get_or<size_t>(m, "meta_batch", cfg.maml.meta_batch);
        cfg.maml.mode = parse_maml_mode(
            get_or<std::string>(m, "mode", maml_mode_name(cfg.maml.mode)));
        cfg.maml.seed = get_or<uint64_t>(m, "seed", cfg.maml.seed);
        cfg.episode.n_way = get_or<size_t>(m, "C", cfg.episode.n_way);
        cfg.episode.k_shot = get_or<size_t>(m, "K", cfg.episode.k_shot);
        cfg.episode.query_cap = get_or<size_t>(m, "query_cap", cfg.episode.query_cap);
        if (cfg.maml.alpha <= 0.0 || cfg.maml.beta <= 0.0)
            throw InvalidArgument("learning rates must be positive");
    }

    cfg.objective = get_or<std::string>(j, "objective", cfg.objective);
    if (cfg.objective != "ce" && cfg.objective != "infonce")
        throw InvalidArgument("objective must be \"ce\" or \"infonce\"");
    cfg.contrastive.temperature =
        get_or<double>(j, "temperature", cfg.contrastive.temperature);
    cfg.contrastive.num_negatives =
        get_or<size_t>(j, "num_negatives", cfg.contrastive.num_negatives);
    cfg.contrastive.batches_per_task =
        get_or<size_t>(j, "batches_per_task", cfg.contrastive.batches_per_task);
    cfg.no_meta = get_or<bool>(j, "no_meta", cfg.no_meta);

    cfg.eval_pair_count = get_or<size_t>(j, "eval_pair_count", cfg.eval_pair_count);
    cfg.retrieval_r = get_or<size_t>(j, "retrieval_r", cfg.retrieval_r);
    cfg.finetune_steps = get_or<size_t>(j, "finetune_steps", cfg.finetune_steps);
    cfg.finetune_lr = get_or<double>(j, "finetune_lr", cfg.finetune_lr);

    if (j.contains("scenario1")) {
        const json& s = j.at("scenario1");
        cfg.scenario1.n_problems =
            get_or<size_t>(s, "n_problems", cfg.scenario1.n_problems);
        cfg.scenario1.group_size =
            get_or<size_t>(s, "group_size", cfg.scenario1.group_size);
        cfg.scenario1.submission_cap =
            get_or<size_t>(s, "submission_cap", cfg.scenario1.submission_cap);
    }

    if (cfg.store.empty() && cfg.corpus_root.empty())
        throw InvalidArgument("config needs `corpus_root` or `store`");
    if (cfg.scenario == Scenario::III && cfg.external_train.empty())
        throw InvalidArgument("scenario 3 needs `external_train`");
    return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["task"] = cfg.task;
    j["scenario"] = scenario_number(cfg.scenario);
    j["corpus_root"] = cfg.corpus_root;
    j["metadata"] = cfg.metadata;
    j["store"] = cfg.store;
    j["external_train"] = cfg.external_train;
    j["train_lang"] = cfg.train_lang.str();
    j["eval_lang"] = cfg.eval_lang.str();
    j["shots"] = cfg.shots;
    j["seeds"] = cfg.seeds;
    j["encoder"] = {{"vocab_size", cfg.encoder.vocab_size},
                    {"embed_dim", cfg.encoder.embed_dim},
                    {"hidden_dim", cfg.encoder.hidden_dim},
                    {"out_dim", cfg.encoder.out_dim},
                    {"max_len", cfg.encoder.max_len}};
    j["maml"] = {{"alpha", cfg.maml.alpha},
                 {"beta", cfg.maml.beta},
                 {"inner_steps", cfg.maml.inner_steps},
                 {"outer_epochs", cfg.maml.outer_epochs},
                 {"episodes_per_epoch", cfg.maml.episodes_per_epoch},
                 {"meta_batch", cfg.maml.meta_batch},
                 {"mode", maml_mode_name(cfg.maml.mode)},
                 {"seed", cfg.maml.seed},
                 {"C", cfg.episode.n_way},
                 {"K", cfg.episode.k_shot},
                 {"query_cap", cfg.episode.query_cap}};
    j["objective"] = cfg.objective;
    j["temperature"] = cfg.contrastive.temperature;
    j["num_negatives"] = cfg.contrastive.num_negatives;
    j["batches_per_task"] = cfg.contrastive.batches_per_task;
    j["no_meta"] = cfg.no_meta;
    j["eval_pair_count"] = cfg.eval_pair_count;
    j["retrieval_r"] = cfg.retrieval_r;
    j["finetune_steps"] = cfg.finetune_steps;
    j["finetune_lr"] = cfg.finetune_lr;
    j["scenario1"] = {{"n_problems", cfg.scenario1.n_problems},
                      {"group_size", cfg.scenario1.group_size},
                      {"submission_cap", cfg.scenario1.submission_cap}};
    return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = experiment_config_json(cfg);
    return hex64(fnv1a64(text.data(), text.size()));
}

TokenSeq sequence_or_sentinel(const std::string& source, const EncoderConfig& enc) {
    TokenSeq seq = sequence_from_source(source, enc.vocab_size, enc.max_len);
    if (seq.empty()) seq.ids.push_back(hash_token("<empty>", enc.vocab_size));
    return seq;
}

TokenizedSplit tokenized_split(const Corpus& corpus,
                               const std::vector<std::string>& ids,
                               const EncoderConfig& enc) {
    const std::set<std::string> wanted(ids.begin(), ids.end());
    TokenizedSplit out;
    size_t found = 0;
    for (const auto& [pid, problem] : corpus.problems) {
        for (const Submission& sub : problem.submissions) {
            if (!wanted.count(sub.submission_id)) continue;
            ++found;
            out.split.push_back({sub.submission_id, pid});
            out.seqs.push_back(sequence_or_sentinel(sub.source, enc));
        }
    }
    if (found != wanted.size())
        throw InvalidArgument(std::to_string(wanted.size() - found) +
                              " ids not present in the corpus");
    return out;
}

TokenizedSplit split_from_external(const std::string& path,
                                   const EncoderConfig& enc) {
    std::ifstream probe(path);
    if (!probe) throw MissingFile("cannot open train set: " + path);
    std::string first_line;
    while (std::getline(probe, first_line) && first_line.empty()) {
    }
    bool pair_like = false;
    try {
        pair_like = json::parse(first_line).contains("func1");
    } catch (const json::exception& e) {
        throw MalformedDataset(path + ": " + e.what());
    }

    TokenizedSplit out;
    std::set<std::string> seen;
    auto add = [&](const std::string& id, const std::string& cls,
                   const std::string& source) {
        if (!seen.insert(id).second) return;
        out.split.push_back({id, cls});
        out.seqs.push_back(sequence_or_sentinel(source, enc));
    };

    if (pair_like) {
        // Positive pairs carry the class structure: both sides belong to the
        // record's problem. Negatives are implied by cross-class sampling.
        for (const PairRecord& r : read_pair_jsonl(path)) {
            if (!r.label) continue;
            add(r.id1, r.index, r.func1);
            add(r.id2, r.index, r.func2);
        }
        if (out.split.empty())
            throw MalformedDataset(path + ": no positive pairs to train on");
    } else {
        for (const RetrievalRecord& r : read_retrieval_jsonl(path))
            add(r.id, r.label, r.code);
        if (out.split.empty()) throw MalformedDataset(path + ": no records");
    }
    return out;
}

std::vector<ScenarioManifest> make_manifests(const ExperimentConfig& cfg,
                                             const Corpus& corpus,
                                             uint64_t seed) {
    std::vector<ScenarioManifest> manifests;
    switch (cfg.scenario) {
        case Scenario::I:
            return split_scenario1(corpus, cfg.train_lang, cfg.shots, seed,
                                   cfg.scenario1);
        case Scenario::II:
            for (int k : cfg.shots)
                manifests.push_back(split_scenario2(corpus, cfg.train_lang,
                                                    cfg.eval_lang, k, seed));
            return manifests;
        case Scenario::III:
            for (int k : cfg.shots)
                manifests.push_back(split_scenario3(cfg.external_train, corpus,
                                                    cfg.eval_lang, k, seed));
            return manifests;
    }
    throw InvalidArgument("unknown scenario");
}

Corpus load_configured_corpus(const ExperimentConfig& cfg) {
    if (!cfg.store.empty()) return load_corpus_store(cfg.store);
    const std::string metadata =
        cfg.metadata.empty() ? (fs::path(cfg.corpus_root) / "metadata.csv").string()
                             : cfg.metadata;
    return load_corpus(cfg.corpus_root, metadata);
}

namespace {

struct FlatItems {
    std::vector<std::string> ids;
    std::vector<std::string> classes;
    std::vector<const std::string*> sources;
};

FlatItems flatten_corpus(const Corpus& corpus) {
    FlatItems items;
    for (const auto& [pid, problem] : corpus.problems) {
        for (const Submission& sub : problem.submissions) {
            items.ids.push_back(sub.submission_id);
            items.classes.push_back(pid);
            items.sources.push_back(&sub.source);
        }
    }
    return items;
}

std::vector<LabeledPair> balanced_labeled_pairs(const FlatItems& items,
                                                uint64_t cap_per_side, Rng& rng,
                                                const EncoderConfig& enc) {
    std::vector<TokenSeq> seqs;
    seqs.reserve(items.ids.size());
    for (const std::string* src : items.sources)
        seqs.push_back(sequence_or_sentinel(*src, enc));

    std::vector<LabeledPair> out;
    for (const IndexPair& p : sample_balanced_pairs_max(items.classes,
                                                        cap_per_side, rng))
        out.push_back({seqs[p.first], seqs[p.second], p.label ? 1.0 : 0.0});
    if (out.empty())
        throw InsufficientPairs("support set yields no balanced pairs");
    return out;
}

}  // namespace

CellSeeds cell_seeds(const ScenarioManifest& m) {
    char name[128];
    std::snprintf(name, sizeof name, "s%d:g%d:k%d:seed%llu",
                  scenario_number(m.scenario), m.group_id, m.k,
                  static_cast<unsigned long long>(m.seed));
    SplitMix64 mix(fnv1a64(name, std::string(name).size()));
    CellSeeds seeds;
    seeds.support = mix.next();
    seeds.eval = mix.next();
    return seeds;
}

std::vector<LabeledPair> support_pairs(const Corpus& support,
                                       const EncoderConfig& enc, uint64_t seed) {
    Rng rng(seed);
    return balanced_labeled_pairs(flatten_corpus(support),
                                  std::numeric_limits<uint64_t>::max(), rng, enc);
}

EvalOutcome evaluate_split(const std::string& task, const Corpus& test_corpus,
                           const Params& params, size_t eval_pair_count,
                           size_t retrieval_r, uint64_t eval_seed) {
    EvalOutcome out;
    const Encoder enc(params.config);
    if (task == "binary") {
        const FlatItems items = flatten_corpus(test_corpus);
        const PairAvailability avail = count_available_pairs(items.classes);
        const uint64_t per_side = std::min<uint64_t>(
            {eval_pair_count / 2, avail.positives, avail.negatives});
        if (per_side == 0)
            throw InsufficientPairs("test set yields no balanced evaluation pairs");

        const std::vector<PairRecord> records = build_binary_pairs(
            test_corpus, static_cast<size_t>(per_side) * 2, eval_seed);

        std::vector<bool> preds, labels;
        preds.reserve(records.size());
        labels.reserve(records.size());
        for (const PairRecord& r : records) {
            const TokenSeq s1 = sequence_or_sentinel(r.func1, params.config);
            const TokenSeq s2 = sequence_or_sentinel(r.func2, params.config);
            preds.push_back(enc.classify_pair(params.data, s1, s2).first >= 0.5);
            labels.push_back(r.label);
        }

        const F1Result r = f1(confusion(preds, labels));
        out.metric_name = "f1";
        out.value = r.f1;
        out.metric = {{"f1", r.f1}, {"precision", r.precision}, {"recall", r.recall}};
        return out;
    }
    if (task != "retrieval")
        throw InvalidArgument("task must be \"binary\" or \"retrieval\"");

    std::vector<Candidate> items;
    std::vector<std::string> labels;
    for (const auto& [pid, problem] : test_corpus.problems) {
        for (const Submission& sub : problem.submissions) {
            const TokenSeq seq = sequence_or_sentinel(sub.source, params.config);
            items.push_back({sub.submission_id, enc.embed(params.data, seq)});
            labels.push_back(pid);
        }
    }
    const RetrievalRun run = build_retrieval_run(items, labels, retrieval_r);
    out.metric_name = "map_at_r";
    out.value = map_at_r(run);
    out.metric = {{"map_at_r", out.value}, {"R", static_cast<double>(retrieval_r)}};
    return out;
}

std::string report_json(const ExperimentConfig& cfg, const ScenarioManifest& m,
                        const EvalOutcome& outcome) {
    ordered_json metric;
    if (outcome.metric_name == "f1") {
        metric["f1"] = outcome.metric.at("f1");
        metric["precision"] = outcome.metric.at("precision");
        metric["recall"] = outcome.metric.at("recall");
    } else {
        metric["map_at_r"] = outcome.metric.at("map_at_r");
        metric["R"] = outcome.metric.at("R");
    }
    ordered_json report;
    report["task"] = cfg.task;
    report["scenario"] = scenario_number(m.scenario);
    report["train_lang"] = m.train_lang.str();
    report["eval_lang"] = m.eval_lang.str();
    report["group_id"] = m.group_id;
    report["K"] = m.k;
    report["seed"] = m.seed;
    report["metric"] = metric;
    report["config_hash"] = config_hash(cfg);
    return report.dump(2) + "\n";
}

std::string report_filename(const ScenarioManifest& m) {
    char name[128];
    std::snprintf(name, sizeof name, "report_s%d_g%d_k%d_seed%llu.json",
                  scenario_number(m.scenario), m.group_id, m.k,
                  static_cast<unsigned long long>(m.seed));
    return name;
}

namespace {

std::string train_identity(const ScenarioManifest& m) {
    if (!m.train_path.empty()) return "external:" + m.train_path;
    std::string joined = "ids:";
    for (const std::string& id : m.train_ids) {
        joined += id;
        joined += ',';
    }
    return joined;
}

std::string train_key_for(const ExperimentConfig& cfg, const ScenarioManifest& m,
                          uint64_t seed) {
    std::ostringstream key;
    key << cfg.objective << '|' << (cfg.no_meta ? "no_meta" : "meta") << '|'
        << seed << '|' << cfg.encoder.vocab_size << 'x' << cfg.encoder.embed_dim
        << 'x' << cfg.encoder.hidden_dim << 'x' << cfg.encoder.out_dim << 'x'
        << cfg.encoder.max_len << '|' << cfg.maml.alpha << ',' << cfg.maml.beta
        << ',' << cfg.maml.inner_steps << ',' << cfg.maml.outer_epochs << ','
        << cfg.maml.episodes_per_epoch << ',' << cfg.maml.meta_batch << ','
        << maml_mode_name(cfg.maml.mode) << '|' << cfg.episode.n_way << ','
        << cfg.episode.k_shot << ',' << cfg.episode.query_cap << '|'
        << cfg.contrastive.temperature << ',' << cfg.contrastive.num_negatives
        << ',' << cfg.contrastive.batches_per_task << '|' << train_identity(m);
    return key.str();
}

Params train_cell(const ExperimentConfig& cfg, const Corpus& corpus,
                  const ScenarioManifest& m, const std::string& train_key,
                  TrainLog* log_out) {
    const TokenizedSplit ts =
        m.train_path.empty() ? tokenized_split(corpus, m.train_ids, cfg.encoder)
                             : split_from_external(m.train_path, cfg.encoder);

    EncoderConfig ecfg = cfg.encoder;
    MamlConfig mcfg = cfg.maml;
    SplitMix64 mix(fnv1a64(train_key.data(), train_key.size()));
    ecfg.init_seed = mix.next();
    mcfg.seed = mix.next();

    TrainResult tr;
    if (cfg.no_meta) {
        tr = train_conventional(ts.split, ts.seqs, ecfg, mcfg, cfg.episode);
    } else if (cfg.objective == "infonce") {
        tr = train_maml_infonce(ts.split, ts.seqs, ecfg, mcfg, cfg.episode,
                                cfg.contrastive);
    } else {
        tr = train_maml(ts.split, ts.seqs, ecfg, mcfg, cfg.episode);
    }
    if (log_out != nullptr) *log_out = std::move(tr.log);
    return std::move(tr.params);
}

}  // namespace

TrainResult train_manifest(const ExperimentConfig& cfg, const Corpus& corpus,
                           const ScenarioManifest& m) {
    TrainResult tr;
    tr.params = train_cell(cfg, corpus, m, train_key_for(cfg, m, m.seed), &tr.log);
    return tr;
}

namespace {

std::string csv_escape(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    RunResult result;
    result.config_path = (fs::path(out_dir) / "config.json").string();
    {
        std::ofstream out(result.config_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + result.config_path);
        out << experiment_config_json(cfg);
    }

    const Corpus corpus = load_configured_corpus(cfg);

    std::map<std::string, Params> trained_cache;
    for (uint64_t seed : cfg.seeds) {
        const std::vector<ScenarioManifest> manifests =
            make_manifests(cfg, corpus, seed);
        for (const ScenarioManifest& m : manifests) {
            CellResult cell;
            cell.scenario = scenario_number(m.scenario);
            cell.group_id = m.group_id;
            cell.k = m.k;
            cell.seed = seed;
            try {
                validate_manifest(m, corpus);

                const std::string train_key = train_key_for(cfg, m, seed);
                if (!trained_cache.count(train_key)) {
                    TrainLog log;
                    Params params = train_cell(cfg, corpus, m, train_key, &log);
                    const std::string log_path =
                        (fs::path(out_dir) /
                         ("trainlog_" +
                          hex64(fnv1a64(train_key.data(), train_key.size())) +
                          ".csv"))
                            .string();
                    std::ofstream log_out(log_path, std::ios::binary);
                    if (!log_out) throw IoError("cannot write " + log_path);
                    log_out << train_log_csv(log);
                    trained_cache.emplace(train_key, std::move(params));
                }
                const Params& trained = trained_cache.at(train_key);

                // fine-tune on the manifest's support set
                const CellSeeds seeds = cell_seeds(m);
                const Corpus support_corpus = restrict_to_ids(
                    corpus, {m.support_ids.begin(), m.support_ids.end()});
                const std::vector<LabeledPair> support =
                    support_pairs(support_corpus, cfg.encoder, seeds.support);
                const size_t steps = cfg.finetune_steps > 0 ? cfg.finetune_steps
                                                            : cfg.maml.inner_steps;
                const double lr =
                    cfg.finetune_lr > 0.0 ? cfg.finetune_lr : cfg.maml.alpha;
                const Params adapted = finetune(trained, support, steps, lr);

                const Corpus test_corpus = restrict_to_ids(
                    corpus, {m.test_ids.begin(), m.test_ids.end()});
                const EvalOutcome outcome =
                    evaluate_split(cfg.task, test_corpus, adapted,
                                   cfg.eval_pair_count, cfg.retrieval_r,
                                   seeds.eval);

                cell.report_path = (fs::path(out_dir) / report_filename(m)).string();
                std::ofstream rep(cell.report_path, std::ios::binary);
                if (!rep) throw IoError("cannot write " + cell.report_path);
                rep << report_json(cfg, m, outcome);

                cell.ok = true;
                cell.metric_name = outcome.metric_name;
                cell.metric_value = outcome.value;
                cell.metric = outcome.metric;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
                result.any_failed = true;
            }
            result.cells.push_back(std::move(cell));
        }
    }

    std::sort(result.cells.begin(), result.cells.end(),
              [](const CellResult& a, const CellResult& b) {
                  return std::tie(a.scenario, a.group_id, a.k, a.seed) <
                         std::tie(b.scenario, b.group_id, b.k, b.seed);
              });

    result.aggregate_csv = (fs::path(out_dir) / "aggregate.csv").string();
    std::ofstream csv(result.aggregate_csv, std::ios::binary);
    if (!csv) throw IoError("cannot write " + result.aggregate_csv);
    csv << "scenario,group_id,K,seed,task,train_lang,eval_lang,metric,value,"
           "status,detail\n";
    char buf[64];
    for (const CellResult& c : result.cells) {
        csv << c.scenario << ',' << c.group_id << ',' << c.k << ',' << c.seed
            << ',' << cfg.task << ',' << csv_escape(cfg.train_lang.str()) << ','
            << csv_escape(cfg.eval_lang.str()) << ',';
        if (c.ok) {
            std::snprintf(buf, sizeof buf, "%.17g", c.metric_value);
            csv << c.metric_name << ',' << buf << ",ok,"
                << csv_escape(c.report_path) << '\n';
        } else {
            csv << ",,failed," << csv_escape(c.error) << '\n';
        }
    }
    if (!csv) throw IoError("write failed: " + result.aggregate_csv);
    return result;
}

AggregateSummary summarize_aggregate(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw MissingFile("cannot open aggregate: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(csv_path + ": empty file");

    std::map<int, std::pair<double, size_t>> sums;  // K -> (sum, count)
    std::map<int, std::pair<double, size_t>> fallback;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (fields.size() < 10) {
            const size_t comma = line.find(',', start);
            if (comma == std::string::npos) break;
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        fields.push_back(line.substr(start));
        if (fields.size() < 11)
            throw ParseError(csv_path + ": malformed row: " + line);
        if (fields[9] != "ok") continue;
        const int k = std::stoi(fields[2]);
        const double value = std::stod(fields[8]);
        auto& slot = fields[7] == "f1" ? sums[k] : fallback[k];
        slot.first += value;
        slot.second += 1;
    }
    const auto& table = sums.empty() ? fallback : sums;
    if (table.empty()) throw EmptyInput(csv_path + ": no successful cells");

    AggregateSummary summary;
    bool first = true;
    double best = 0.0;
    for (const auto& [k, slot] : table) {
        const double mean = slot.first / static_cast<double>(slot.second);
        summary.mean_by_shot[k] = mean;
        if (first || mean > best) {
            best = mean;
            summary.best_shot = k;
            first = false;
        }
    }
    return summary;
}

}  // namespace metaclone
