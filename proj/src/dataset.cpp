#include "metaclone/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "metaclone/errors.hpp"

namespace metaclone {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Flat view of a corpus used by the pair sampler: one entry per submission,
// grouped per problem, in corpus iteration order.
struct FlatCorpus {
    std::vector<const Submission*> subs;
    std::vector<size_t> class_of;          // submission -> problem ordinal
    std::vector<std::string> class_names;  // problem ordinal -> id
    std::vector<std::vector<size_t>> members;
};

FlatCorpus flatten(const Corpus& corpus) {
    FlatCorpus flat;
    for (const auto& [pid, problem] : corpus.problems) {
        const size_t cls = flat.class_names.size();
        flat.class_names.push_back(pid);
        flat.members.emplace_back();
        for (const auto& sub : problem.submissions) {
            flat.members[cls].push_back(flat.subs.size());
            flat.subs.push_back(&sub);
            flat.class_of.push_back(cls);
        }
    }
    return flat;
}

uint64_t pairs_within(uint64_t n) { return n * (n - 1) / 2; }

// Draws an ordered pair of distinct indices below n; uniform over unordered
// pairs.
std::pair<size_t, size_t> draw_distinct(Rng& rng, size_t n) {
    const size_t i = static_cast<size_t>(rng.below(n));
    size_t j = static_cast<size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    return {i, j};
}

uint64_t pair_key(size_t a, size_t b) {
    const uint64_t lo = std::min(a, b);
    const uint64_t hi = std::max(a, b);
    return (hi << 32) | lo;
}

PairRecord make_record(const FlatCorpus& flat, size_t a, size_t b, bool label) {
    PairRecord r;
    r.func1 = flat.subs[a]->source;
    r.func2 = flat.subs[b]->source;
    r.id1 = flat.subs[a]->submission_id;
    r.id2 = flat.subs[b]->submission_id;
    r.index = flat.subs[a]->problem_id;
    r.label = label;
    return r;
}

ordered_json pair_to_json(const PairRecord& r) {
    ordered_json j;
    j["func1"] = r.func1;
    j["func2"] = r.func2;
    j["id1"] = r.id1;
    j["id2"] = r.id2;
    j["index"] = r.index;
    j["label"] = r.label;
    return j;
}

json parse_line(const std::string& line, size_t line_no, const std::string& path) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
}

bool label_from_json(const json& v, size_t line_no, const std::string& path) {
    if (v.is_boolean()) return v.get<bool>();
    // CodeXGLUE-style files use 0/1
    if (v.is_number_integer()) {
        const auto n = v.get<int64_t>();
        if (n == 0 || n == 1) return n == 1;
    }
    throw ParseError(path + ": line " + std::to_string(line_no) +
                     ": label must be boolean or 0/1");
}

std::string string_or_number(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    throw json::type_error::create(302, "expected string or integer", &v);
}

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

PairAvailability count_available_pairs(const std::vector<std::string>& classes) {
    std::map<std::string, uint64_t> sizes;
    for (const auto& c : classes) ++sizes[c];
    PairAvailability avail;
    const uint64_t total = classes.size();
    for (const auto& [name, n] : sizes) avail.positives += pairs_within(n);
    avail.negatives = pairs_within(total) - avail.positives;
    return avail;
}

std::vector<IndexPair> sample_balanced_pairs(const std::vector<std::string>& classes,
                                             uint64_t per_side, Rng& rng) {
    const size_t n = classes.size();
    const auto avail = count_available_pairs(classes);
    if (per_side > avail.positives || per_side > avail.negatives)
        throw InsufficientPairs(
            "requested " + std::to_string(per_side) + " pairs per side, have " +
            std::to_string(avail.positives) + " positive / " +
            std::to_string(avail.negatives) + " negative");
    if (per_side == 0) return {};

    // class ordinals and members, in first-appearance order
    std::map<std::string, size_t> ordinal;
    std::vector<std::vector<size_t>> members;
    std::vector<size_t> class_of(n);
    for (size_t i = 0; i < n; ++i) {
        auto [it, inserted] = ordinal.emplace(classes[i], members.size());
        if (inserted) members.emplace_back();
        class_of[i] = it->second;
        members[it->second].push_back(i);
    }

    // cumulative positive-pair counts for weighted class choice
    std::vector<uint64_t> cum;
    cum.reserve(members.size());
    uint64_t running = 0;
    for (const auto& m : members) {
        running += pairs_within(m.size());
        cum.push_back(running);
    }

    std::vector<IndexPair> out;
    out.reserve(2 * per_side);
    std::unordered_set<uint64_t> seen;
    seen.reserve(4 * per_side);

    // positives: weighted class, then a distinct pair inside it
    uint64_t got = 0;
    while (got < per_side) {
        const uint64_t u = rng.below(avail.positives);
        const size_t cls = static_cast<size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const auto& m = members[cls];
        const auto [a, b] = draw_distinct(rng, m.size());
        if (!seen.insert(pair_key(m[a], m[b])).second) continue;
        out.push_back({m[a], m[b], true});
        ++got;
    }

    // negatives: rejection-sample distinct cross-class pairs
    got = 0;
    seen.clear();
    while (got < per_side) {
        const auto [a, b] = draw_distinct(rng, n);
        if (class_of[a] == class_of[b]) continue;
        if (!seen.insert(pair_key(a, b)).second) continue;
        out.push_back({a, b, false});
        ++got;
    }
    return out;
}

std::vector<IndexPair> sample_balanced_pairs_max(
    const std::vector<std::string>& classes, uint64_t cap_per_side, Rng& rng) {
    const auto avail = count_available_pairs(classes);
    const uint64_t per_side =
        std::min({cap_per_side, avail.positives, avail.negatives});
    return sample_balanced_pairs(classes, per_side, rng);
}

std::vector<PairRecord> build_binary_pairs(const Corpus& corpus,
                                           size_t target_count, uint64_t seed) {
    if (target_count % 2 != 0)
        throw InvalidArgument("target_count must be even, got " +
                              std::to_string(target_count));
    if (corpus.problem_count() < 2)
        throw InsufficientPairs("need at least 2 problems to form negative pairs");

    const FlatCorpus flat = flatten(corpus);
    std::vector<std::string> classes;
    classes.reserve(flat.subs.size());
    for (size_t cls : flat.class_of) classes.push_back(flat.class_names[cls]);

    Rng rng(seed);
    const auto pairs = sample_balanced_pairs(classes, target_count / 2, rng);

    std::vector<PairRecord> records;
    records.reserve(pairs.size());
    for (const auto& p : pairs)
        records.push_back(make_record(flat, p.first, p.second, p.label));
    rng.shuffle(records);
    return records;
}

std::vector<RetrievalRecord> build_retrieval(const Corpus& corpus) {
    if (corpus.empty()) throw EmptyCorpus("cannot build retrieval data from empty corpus");
    std::vector<RetrievalRecord> records;
    records.reserve(corpus.submission_count());
    for (const auto& [pid, problem] : corpus.problems) {
        for (const auto& sub : problem.submissions) {
            RetrievalRecord r;
            r.code = sub.source;
            r.id = sub.submission_id;
            r.label = pid;
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::vector<ScenarioManifest> split_scenario1(const Corpus& corpus,
                                              const Language& lang,
                                              const std::vector<int>& shots,
                                              uint64_t seed,
                                              const Scenario1Config& cfg) {
    const Corpus restricted = filter_language(corpus, lang);
    if (restricted.problem_count() < cfg.n_problems)
        throw InsufficientProblems("need " + std::to_string(cfg.n_problems) +
                                   " problems in " + lang.str() + ", have " +
                                   std::to_string(restricted.problem_count()));

    std::vector<const Problem*> eligible;
    for (const auto& [pid, problem] : restricted.problems)
        if (problem.submissions.size() >= cfg.submission_cap)
            eligible.push_back(&problem);
    if (eligible.size() < cfg.n_problems)
        throw InsufficientSubmissions(
            "only " + std::to_string(eligible.size()) + " problems have >= " +
            std::to_string(cfg.submission_cap) + " submissions, need " +
            std::to_string(cfg.n_problems));

    const size_t n_groups = cfg.n_problems / cfg.group_size;
    if (n_groups < 2 || cfg.n_problems % cfg.group_size != 0)
        throw InvalidArgument("n_problems must be a multiple of group_size with >= 2 groups");

    Rng rng(seed);

    // sample the working problems, then partition into groups by shuffle order
    std::vector<size_t> chosen = rng.sample_indices(eligible.size(), cfg.n_problems);
    std::vector<const Problem*> working;
    working.reserve(cfg.n_problems);
    for (size_t i : chosen) working.push_back(eligible[i]);

    // cap each problem at submission_cap ids, seeded shuffle over the sorted order
    std::map<std::string, std::vector<std::string>> capped;
    for (const Problem* p : working) {
        std::vector<std::string> ids;
        ids.reserve(p->submissions.size());
        for (const auto& sub : p->submissions) ids.push_back(sub.submission_id);
        rng.shuffle(ids);
        ids.resize(cfg.submission_cap);
        std::sort(ids.begin(), ids.end());
        capped[p->problem_id] = std::move(ids);
    }

    std::vector<std::vector<const Problem*>> groups(n_groups);
    for (size_t i = 0; i < working.size(); ++i)
        groups[i / cfg.group_size].push_back(working[i]);

    std::vector<std::string> train_ids;
    for (const Problem* p : groups[0])
        for (const auto& id : capped[p->problem_id]) train_ids.push_back(id);

    std::vector<ScenarioManifest> manifests;
    for (size_t g = 1; g < n_groups; ++g) {
        for (int k : shots) {
            ScenarioManifest m;
            m.scenario = Scenario::I;
            m.group_id = static_cast<int>(g + 1);  // groups are numbered from 1
            m.seed = seed;
            m.k = k;
            m.train_lang = lang;
            m.eval_lang = lang;
            m.train_ids = train_ids;
            for (const Problem* p : groups[g]) {
                const auto& pool = capped[p->problem_id];
                if (static_cast<size_t>(k) + 1 > pool.size())
                    throw InsufficientSubmissions("problem " + p->problem_id +
                                                  " cannot supply K=" + std::to_string(k));
                auto idx = rng.sample_indices(pool.size(), static_cast<size_t>(k));
                std::set<size_t> support_set(idx.begin(), idx.end());
                for (size_t i = 0; i < pool.size(); ++i) {
                    if (support_set.count(i))
                        m.support_ids.push_back(pool[i]);
                    else
                        m.test_ids.push_back(pool[i]);
                }
            }
            manifests.push_back(std::move(m));
        }
    }
    return manifests;
}

namespace {

// Support/test split shared by Scenarios II and III: K eval-language
// submissions per problem, rest become test. Problems that cannot supply
// K+1 eval submissions are dropped; callers may further intersect the
// problem set first.
void fill_support_test(const Corpus& eval_corpus, const Language& eval_lang,
                       int k, Rng& rng, ScenarioManifest& m,
                       const std::set<std::string>* problem_filter) {
    const Corpus restricted = filter_language(eval_corpus, eval_lang);
    size_t usable = 0;
    for (const auto& [pid, problem] : restricted.problems) {
        if (problem_filter && !problem_filter->count(pid)) continue;
        const auto& subs = problem.submissions;
        if (subs.size() < static_cast<size_t>(k) + 1) continue;
        ++usable;
        auto idx = rng.sample_indices(subs.size(), static_cast<size_t>(k));
        std::set<size_t> support_set(idx.begin(), idx.end());
        for (size_t i = 0; i < subs.size(); ++i) {
            if (support_set.count(i))
                m.support_ids.push_back(subs[i].submission_id);
            else
                m.test_ids.push_back(subs[i].submission_id);
        }
    }
    if (usable == 0)
        throw InsufficientProblems("no problem can supply K=" + std::to_string(k) +
                                   " support plus one test submission in " +
                                   eval_lang.str());
}

}  // namespace

ScenarioManifest split_scenario2(const Corpus& corpus, const Language& train_lang,
                                 const Language& eval_lang, int k, uint64_t seed) {
    if (train_lang == eval_lang)
        throw LanguageOverlap("train and eval language are both " + train_lang.str());
    const Corpus train_side = filter_language(corpus, train_lang);
    const Corpus eval_side = filter_language(corpus, eval_lang);

    // identical problem sets on both sides
    std::set<std::string> shared;
    for (const auto& [pid, problem] : train_side.problems)
        if (eval_side.problems.count(pid)) shared.insert(pid);
    if (shared.empty())
        throw InsufficientProblems("no problem has submissions in both " +
                                   train_lang.str() + " and " + eval_lang.str());

    ScenarioManifest m;
    m.scenario = Scenario::II;
    m.group_id = 0;
    m.seed = seed;
    m.k = k;
    m.train_lang = train_lang;
    m.eval_lang = eval_lang;

    Rng rng(seed);
    fill_support_test(corpus, eval_lang, k, rng, m, &shared);

    // restrict the problem filter to what actually survived the K+1 check
    std::set<std::string> survived;
    {
        const Corpus ev = filter_language(corpus, eval_lang);
        std::set<std::string> support(m.support_ids.begin(), m.support_ids.end());
        for (const auto& [pid, problem] : ev.problems)
            for (const auto& sub : problem.submissions)
                if (support.count(sub.submission_id)) survived.insert(pid);
    }
    for (const auto& [pid, problem] : train_side.problems) {
        if (!survived.count(pid)) continue;
        for (const auto& sub : problem.submissions)
            m.train_ids.push_back(sub.submission_id);
    }
    return m;
}

ScenarioManifest split_scenario3(const std::string& train_dataset_path,
                                 const Corpus& eval_corpus,
                                 const Language& eval_lang, int k, uint64_t seed) {
    // validate the external train set; either schema is acceptable
    const auto lines = lines_of(train_dataset_path);
    size_t parsed = 0;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw MalformedDataset(train_dataset_path + ": line " +
                                   std::to_string(i + 1) + ": " + e.what());
        }
        const bool pair_like = j.contains("func1");
        const bool retrieval_like = j.contains("code");
        if (pair_like) {
            for (const char* key : {"func2", "id1", "id2", "label"})
                if (!j.contains(key))
                    throw MalformedDataset(train_dataset_path + ": line " +
                                           std::to_string(i + 1) +
                                           ": pair record missing `" + key + "`");
        } else if (retrieval_like) {
            for (const char* key : {"id", "label"})
                if (!j.contains(key))
                    throw MalformedDataset(train_dataset_path + ": line " +
                                           std::to_string(i + 1) +
                                           ": retrieval record missing `" + key + "`");
        } else {
            throw MalformedDataset(train_dataset_path + ": line " +
                                   std::to_string(i + 1) +
                                   ": neither pair nor retrieval schema");
        }
        ++parsed;
    }
    if (parsed == 0) throw MalformedDataset(train_dataset_path + ": no records");

    ScenarioManifest m;
    m.scenario = Scenario::III;
    m.group_id = 0;
    m.seed = seed;
    m.k = k;
    m.eval_lang = eval_lang;
    m.train_path = train_dataset_path;

    Rng rng(seed);
    fill_support_test(eval_corpus, eval_lang, k, rng, m, nullptr);
    return m;
}

void validate_manifest(const ScenarioManifest& m, const Corpus& corpus) {
    std::map<std::string, std::string> problem_of;
    for (const auto& [pid, problem] : corpus.problems)
        for (const auto& sub : problem.submissions)
            problem_of[sub.submission_id] = pid;

    auto problems_of = [&](const std::vector<std::string>& ids) {
        std::set<std::string> out;
        for (const auto& id : ids) {
            auto it = problem_of.find(id);
            if (it == problem_of.end())
                throw InvalidArgument("manifest references unknown submission: " + id);
            out.insert(it->second);
        }
        return out;
    };

    const std::set<std::string> support(m.support_ids.begin(), m.support_ids.end());
    for (const auto& id : m.test_ids)
        if (support.count(id))
            throw OverlapError("submission in both support and test: " + id);

    const auto support_problems = problems_of(m.support_ids);
    const auto test_problems = problems_of(m.test_ids);
    if (m.scenario == Scenario::I) {
        const auto train_problems = problems_of(m.train_ids);
        for (const auto& pid : test_problems)
            if (train_problems.count(pid))
                throw OverlapError("problem in both train and test: " + pid);
        for (const auto& pid : support_problems)
            if (train_problems.count(pid))
                throw OverlapError("problem in both train and support: " + pid);
    }
}

void write_manifest(const ScenarioManifest& m, const std::string& path) {
    ordered_json j;
    j["scenario"] = static_cast<int>(m.scenario);
    j["group_id"] = m.group_id;
    j["seed"] = m.seed;
    j["k"] = m.k;
    j["train_lang"] = m.train_lang.str();
    j["eval_lang"] = m.eval_lang.str();
    if (!m.train_path.empty()) j["train_path"] = m.train_path;
    j["train"] = m.train_ids;
    j["support"] = m.support_ids;
    j["test"] = m.test_ids;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

ScenarioManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    ScenarioManifest m;
    try {
        m.scenario = static_cast<Scenario>(j.at("scenario").get<int>());
        m.group_id = j.at("group_id").get<int>();
        m.seed = j.at("seed").get<uint64_t>();
        m.k = j.at("k").get<int>();
        m.train_lang = Language::parse(j.at("train_lang").get<std::string>());
        m.eval_lang = Language::parse(j.at("eval_lang").get<std::string>());
        if (j.contains("train_path")) m.train_path = j["train_path"].get<std::string>();
        m.train_ids = j.at("train").get<std::vector<std::string>>();
        m.support_ids = j.at("support").get<std::vector<std::string>>();
        m.test_ids = j.at("test").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return m;
}

void write_jsonl(const std::vector<PairRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    for (const auto& r : records) out << pair_to_json(r).dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_jsonl(const std::vector<RetrievalRecord>& records,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    for (const auto& r : records) {
        ordered_json j;
        j["code"] = r.code;
        j["id"] = r.id;
        j["label"] = r.label;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<PairRecord> read_pair_jsonl(const std::string& path) {
    std::vector<PairRecord> out;
    const auto lines = lines_of(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const json j = parse_line(lines[i], i + 1, path);
        PairRecord r;
        try {
            r.func1 = j.at("func1").get<std::string>();
            r.func2 = j.at("func2").get<std::string>();
            r.id1 = string_or_number(j.at("id1"));
            r.id2 = string_or_number(j.at("id2"));
            r.index = j.contains("index") ? string_or_number(j["index"]) : "";
            r.label = label_from_json(j.at("label"), i + 1, path);
        } catch (const json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(i + 1) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RetrievalRecord> read_retrieval_jsonl(const std::string& path) {
    std::vector<RetrievalRecord> out;
    const auto lines = lines_of(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const json j = parse_line(lines[i], i + 1, path);
        RetrievalRecord r;
        try {
            r.code = j.at("code").get<std::string>();
            r.id = string_or_number(j.at("id"));
            r.label = string_or_number(j.at("label"));
        } catch (const json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(i + 1) + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace metaclone
