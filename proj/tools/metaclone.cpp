#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metaclone/corpus.hpp"
#include "metaclone/dataset.hpp"
#include "metaclone/errors.hpp"
#include "metaclone/experiment.hpp"
#include "metaclone/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace metaclone;

namespace {

ExperimentConfig configured(const std::string& path,
                            const std::optional<uint64_t>& seed, bool no_meta,
                            const std::string& objective) {
    ExperimentConfig cfg = load_experiment_config(path);
    if (seed) cfg.seeds = {*seed};
    if (no_meta) cfg.no_meta = true;
    if (!objective.empty()) cfg.objective = objective;
    return cfg;
}

std::string stats_json(const CorpusStats& st) {
    ordered_json j;
    j["problems"] = st.problem_count;
    j["submissions"] = st.submission_count;
    ordered_json langs;
    for (const auto& [lang, count] : st.per_language) langs[lang.str()] = count;
    j["per_language"] = langs;
    j["min_per_problem"] = st.min_per_problem;
    j["median_per_problem"] = st.median_per_problem;
    return j.dump(2);
}

std::string manifest_filename(const ScenarioManifest& m) {
    char name[128];
    std::snprintf(name, sizeof name, "manifest_s%d_g%d_k%d_seed%llu.json",
                  static_cast<int>(m.scenario), m.group_id, m.k,
                  static_cast<unsigned long long>(m.seed));
    return name;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"few-shot code clone detection over a CodeNet-style corpus"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ---- extract ----
    auto* extract = app.add_subcommand(
        "extract", "validate a corpus tree and optionally write a JSONL store");
    std::string ex_root, ex_metadata, ex_out;
    bool ex_stats = false;
    extract->add_option("--root", ex_root, "corpus root directory")->required();
    extract->add_option("--metadata", ex_metadata,
                        "metadata CSV (default: <root>/metadata.csv)");
    extract->add_option("--out", ex_out, "write the normalized store here");
    extract->add_flag("--stats", ex_stats, "print corpus statistics as JSON");
    extract->callback([&] {
        const std::string meta = ex_metadata.empty()
                                     ? (fs::path(ex_root) / "metadata.csv").string()
                                     : ex_metadata;
        const Corpus corpus = load_corpus(ex_root, meta);
        const CorpusStats st = corpus_stats(corpus);
        if (ex_stats) {
            std::cout << stats_json(st) << '\n';
        } else {
            std::cout << "problems=" << st.problem_count
                      << " submissions=" << st.submission_count
                      << " languages=" << st.per_language.size() << '\n';
        }
        if (!ex_out.empty()) {
            save_corpus_store(corpus, ex_out);
            std::cout << "store=" << ex_out << '\n';
        }
    });

    // ---- build ----
    auto* build = app.add_subcommand("build", "materialize a JSONL dataset");
    std::string b_kind, b_config, b_out, b_lang;
    std::optional<uint64_t> b_seed;
    size_t b_count = 1000;
    build->add_option("kind", b_kind, "pairs | retrieval")
        ->required()
        ->check(CLI::IsMember({"pairs", "retrieval"}));
    build->add_option("--config", b_config, "experiment config JSON")->required();
    build->add_option("--out", b_out, "output JSONL path")->required();
    build->add_option("--lang", b_lang, "language filter (default: train_lang)");
    build->add_option("--count", b_count, "total pair records (pairs only)");
    build->add_option("--seed", b_seed, "pair sampling seed");
    build->callback([&] {
        const ExperimentConfig cfg = configured(b_config, b_seed, false, "");
        const Corpus corpus = load_configured_corpus(cfg);
        const Language lang =
            b_lang.empty() ? cfg.train_lang : Language::parse(b_lang);
        const Corpus filtered = filter_language(corpus, lang);
        size_t n = 0;
        if (b_kind == "pairs") {
            const auto records =
                build_binary_pairs(filtered, b_count, cfg.seeds.front());
            write_jsonl(records, b_out);
            n = records.size();
        } else {
            const auto records = build_retrieval(filtered);
            write_jsonl(records, b_out);
            n = records.size();
        }
        std::cout << "wrote " << n << " records to " << b_out << '\n';
    });

    // ---- split ----
    auto* split = app.add_subcommand(
        "split", "generate scenario manifests for one seed");
    std::string s_config, s_out;
    std::optional<uint64_t> s_seed;
    split->add_option("--config", s_config, "experiment config JSON")->required();
    split->add_option("--out", s_out, "output directory")->required();
    split->add_option("--seed", s_seed, "split seed (default: first config seed)");
    split->callback([&] {
        const ExperimentConfig cfg = configured(s_config, s_seed, false, "");
        const Corpus corpus = load_configured_corpus(cfg);
        ensure_dir(s_out);
        for (const ScenarioManifest& m :
             make_manifests(cfg, corpus, cfg.seeds.front())) {
            validate_manifest(m, corpus);
            const std::string path =
                (fs::path(s_out) / manifest_filename(m)).string();
            write_manifest(m, path);
            std::cout << path << '\n';
        }
    });

    // ---- train ----
    auto* train = app.add_subcommand(
        "train", "train the encoder on the config's train split");
    std::string t_config, t_out, t_objective;
    std::optional<uint64_t> t_seed;
    bool t_no_meta = false;
    train->add_option("--config", t_config, "experiment config JSON")->required();
    train->add_option("--out", t_out, "output directory")->required();
    train->add_option("--seed", t_seed, "seed (default: first config seed)");
    train->add_flag("--no-meta", t_no_meta,
                    "conventional training instead of meta-training");
    train->add_option("--objective", t_objective, "meta objective")
        ->check(CLI::IsMember({"ce", "infonce"}));
    train->callback([&] {
        const ExperimentConfig cfg =
            configured(t_config, t_seed, t_no_meta, t_objective);
        const Corpus corpus = load_configured_corpus(cfg);
        const auto manifests = make_manifests(cfg, corpus, cfg.seeds.front());
        const TrainResult tr = train_manifest(cfg, corpus, manifests.front());
        ensure_dir(t_out);
        const std::string params_path = (fs::path(t_out) / "params.bin").string();
        save_params(tr.params, params_path);
        const std::string log_path = (fs::path(t_out) / "trainlog.csv").string();
        write_text(log_path, train_log_csv(tr.log));
        std::cout << "params=" << params_path << '\n'
                  << "trainlog=" << log_path << '\n';
        if (!tr.log.steps.empty())
            std::cout << "final_outer_loss=" << tr.log.steps.back().outer_loss
                      << '\n';
    });

    // ---- finetune ----
    auto* ftune = app.add_subcommand(
        "finetune", "adapt trained params on a manifest's support set");
    std::string f_config, f_params, f_manifest, f_out;
    size_t f_steps = 0;
    double f_lr = 0.0;
    ftune->add_option("--config", f_config, "experiment config JSON")->required();
    ftune->add_option("--params", f_params, "trained params file")->required();
    ftune->add_option("--manifest", f_manifest, "manifest JSON")->required();
    ftune->add_option("--out", f_out, "output directory")->required();
    ftune->add_option("--steps", f_steps, "gradient steps (default: inner_steps)");
    ftune->add_option("--lr", f_lr, "learning rate (default: alpha)");
    ftune->callback([&] {
        const ExperimentConfig cfg = configured(f_config, std::nullopt, false, "");
        const Corpus corpus = load_configured_corpus(cfg);
        const ScenarioManifest m = read_manifest(f_manifest);
        validate_manifest(m, corpus);
        const Params start = load_params(f_params);

        const Corpus support_corpus = restrict_to_ids(
            corpus, {m.support_ids.begin(), m.support_ids.end()});
        const auto support = support_pairs(support_corpus, start.config,
                                           cell_seeds(m).support);
        const size_t steps = f_steps > 0 ? f_steps : cfg.maml.inner_steps;
        const double lr = f_lr > 0.0 ? f_lr
                          : cfg.finetune_lr > 0.0 ? cfg.finetune_lr
                                                  : cfg.maml.alpha;
        const Params adapted = finetune(start, support, steps, lr);
        ensure_dir(f_out);
        const std::string path = (fs::path(f_out) / "params.bin").string();
        save_params(adapted, path);
        std::cout << "params=" << path << " support_pairs=" << support.size()
                  << " steps=" << steps << '\n';
    });

    // ---- eval ----
    auto* eval = app.add_subcommand(
        "eval", "score params on a manifest's test set and print the report");
    std::string e_config, e_params, e_manifest, e_out;
    eval->add_option("--config", e_config, "experiment config JSON")->required();
    eval->add_option("--params", e_params, "params file")->required();
    eval->add_option("--manifest", e_manifest, "manifest JSON")->required();
    eval->add_option("--out", e_out, "also write the report JSON here");
    eval->callback([&] {
        const ExperimentConfig cfg = configured(e_config, std::nullopt, false, "");
        const Corpus corpus = load_configured_corpus(cfg);
        const ScenarioManifest m = read_manifest(e_manifest);
        validate_manifest(m, corpus);
        const Params params = load_params(e_params);

        const Corpus test_corpus =
            restrict_to_ids(corpus, {m.test_ids.begin(), m.test_ids.end()});
        const EvalOutcome outcome =
            evaluate_split(cfg.task, test_corpus, params, cfg.eval_pair_count,
                           cfg.retrieval_r, cell_seeds(m).eval);
        const std::string report = report_json(cfg, m, outcome);
        std::cout << report;
        if (!e_out.empty()) {
            ensure_dir(e_out);
            write_text((fs::path(e_out) / report_filename(m)).string(), report);
        }
    });

    // ---- run ----
    auto* run = app.add_subcommand(
        "run", "full matrix: train, fine-tune, evaluate, report every cell");
    std::string r_config, r_out, r_objective;
    std::optional<uint64_t> r_seed;
    bool r_no_meta = false;
    run->add_option("--config", r_config, "experiment config JSON")->required();
    run->add_option("--out", r_out, "output directory")->required();
    run->add_option("--seed", r_seed, "restrict to one seed");
    run->add_flag("--no-meta", r_no_meta,
                  "conventional training instead of meta-training");
    run->add_option("--objective", r_objective, "meta objective")
        ->check(CLI::IsMember({"ce", "infonce"}));
    run->callback([&] {
        const ExperimentConfig cfg =
            configured(r_config, r_seed, r_no_meta, r_objective);
        const RunResult result = run_experiment(cfg, r_out);
        for (const CellResult& c : result.cells) {
            std::cout << 's' << c.scenario << " g" << c.group_id << " k" << c.k
                      << " seed" << c.seed << ' ';
            if (c.ok)
                std::cout << c.metric_name << '=' << c.metric_value
                          << " report=" << c.report_path << '\n';
            else
                std::cout << "FAILED: " << c.error << '\n';
        }
        std::cout << "aggregate=" << result.aggregate_csv << '\n'
                  << "config=" << result.config_path << '\n';
        if (result.any_failed) {
            std::cerr << "error: some cells failed\n";
            exit_code = 3;
        }
    });

    // ---- report ----
    auto* report = app.add_subcommand(
        "report", "summarize an aggregate CSV: mean metric per shot, best X");
    std::string rp_csv;
    report->add_option("aggregate", rp_csv, "aggregate CSV path")->required();
    report->callback([&] {
        const AggregateSummary summary = summarize_aggregate(rp_csv);
        ordered_json j;
        ordered_json means;
        for (const auto& [k, mean] : summary.mean_by_shot)
            means[std::to_string(k)] = mean;
        j["mean_by_shot"] = means;
        j["best_shot"] = summary.best_shot;
        std::cout << j.dump(2) << '\n';
    });

    // ---- synth ----
    auto* synth = app.add_subcommand(
        "synth", "write a deterministic synthetic corpus for smoke tests");
    std::string sy_out;
    SyntheticSpec spec;
    synth->add_option("--out", sy_out, "corpus root to create")->required();
    synth->add_option("--problems", spec.n_problems, "problem count");
    synth->add_option("--submissions", spec.n_submissions,
                      "submissions per problem");
    synth->add_option("--languages", spec.n_languages, "language count");
    synth->add_option("--vocab", spec.vocab_per_problem,
                      "signature tokens per problem");
    synth->add_option("--noise", spec.noise_rate, "filler token rate [0,1)");
    synth->add_option("--seed", spec.seed, "generator seed");
    synth->callback([&] {
        const std::string metadata = generate_synthetic(spec, sy_out);
        std::cout << "corpus=" << sy_out << '\n'
                  << "metadata=" << metadata << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return exit_code;
}
