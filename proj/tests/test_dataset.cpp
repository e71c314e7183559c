#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "metaclone/corpus.hpp"
#include "metaclone/dataset.hpp"
#include "metaclone/episode.hpp"
#include "metaclone/errors.hpp"
#include "metaclone/synthetic.hpp"
#include "support.hpp"

using namespace metaclone;
using testsupport::TempDir;
using testsupport::TreeRow;

namespace {

Corpus grid_corpus(size_t n_problems, size_t n_subs,
                   const std::string& language = "C++") {
    TempDir dir("grid");
    write_corpus_tree(dir, testsupport::grid_rows(n_problems, n_subs, language));
    return load_corpus(dir.str(), dir.str("metadata.csv"));
}

std::map<std::string, std::string> problem_of_map(const Corpus& corpus) {
    std::map<std::string, std::string> out;
    for (const auto& [pid, problem] : corpus.problems)
        for (const Submission& sub : problem.submissions)
            out[sub.submission_id] = pid;
    return out;
}

}  // namespace

// ---------------------------------------------------------------- pair math

TEST_CASE("count_available_pairs matches the combinatorial count") {
    // 3 classes of sizes 4, 3, 2: positives = 6+3+1, negatives = C(9,2)-10
    std::vector<std::string> classes;
    for (int i = 0; i < 4; ++i) classes.push_back("a");
    for (int i = 0; i < 3; ++i) classes.push_back("b");
    for (int i = 0; i < 2; ++i) classes.push_back("c");
    const PairAvailability avail = count_available_pairs(classes);
    CHECK(avail.positives == 10);
    CHECK(avail.negatives == 36 - 10);
}

TEST_CASE("sample_balanced_pairs is balanced, sound, and duplicate-free") {
    std::vector<std::string> classes;
    for (int p = 0; p < 4; ++p)
        for (int s = 0; s < 5; ++s) classes.push_back("cls" + std::to_string(p));

    Rng rng(21);
    const auto pairs = sample_balanced_pairs(classes, 30, rng);
    REQUIRE(pairs.size() == 60);

    size_t positives = 0;
    std::set<std::pair<size_t, size_t>> seen_pos, seen_neg;
    for (const IndexPair& p : pairs) {
        CHECK(p.first != p.second);
        CHECK(p.first < classes.size());
        CHECK(p.second < classes.size());
        CHECK(p.label == (classes[p.first] == classes[p.second]));
        auto key = std::minmax(p.first, p.second);
        if (p.label) {
            CHECK(seen_pos.insert(key).second);
            ++positives;
        } else {
            CHECK(seen_neg.insert(key).second);
        }
    }
    CHECK(positives == 30);
}

TEST_CASE("sample_balanced_pairs can exhaust availability exactly") {
    // 2 classes x 3 items: 6 positives, 9 negatives
    std::vector<std::string> classes = {"a", "a", "a", "b", "b", "b"};
    Rng rng(4);
    const auto pairs = sample_balanced_pairs(classes, 6, rng);
    CHECK(pairs.size() == 12);
    Rng rng2(4);
    CHECK_THROWS_AS(sample_balanced_pairs(classes, 7, rng2), InsufficientPairs);
}

TEST_CASE("sample_balanced_pairs_max clamps to the scarce side") {
    std::vector<std::string> classes = {"a", "a", "b"};  // 1 positive, 2 negatives
    Rng rng(8);
    const auto pairs = sample_balanced_pairs_max(classes, 100, rng);
    CHECK(pairs.size() == 2);  // one per side

    Rng rng2(8);
    CHECK(sample_balanced_pairs_max(classes, 0, rng2).empty());
}

// ---------------------------------------------------------------- binary pairs

TEST_CASE("build_binary_pairs balances and respects invariants") {
    const Corpus corpus = grid_corpus(3, 4);
    const auto records = build_binary_pairs(corpus, 12, 17);
    REQUIRE(records.size() == 12);

    const auto problem_of = problem_of_map(corpus);
    size_t positives = 0;
    for (const PairRecord& r : records) {
        CHECK(r.id1 != r.id2);
        CHECK(r.label == (problem_of.at(r.id1) == problem_of.at(r.id2)));
        CHECK(r.index == problem_of.at(r.id1));
        CHECK(!r.func1.empty());
        CHECK(!r.func2.empty());
        if (r.label) ++positives;
    }
    CHECK(positives == 6);
}

TEST_CASE("build_binary_pairs rejects impossible requests") {
    // 2 problems x 2 submissions: only 2 positive pairs exist
    const Corpus small = grid_corpus(2, 2);
    CHECK_THROWS_AS(build_binary_pairs(small, 10, 1), InsufficientPairs);
    CHECK_THROWS_AS(build_binary_pairs(small, 5, 1), InvalidArgument);  // odd

    const Corpus single = grid_corpus(1, 5);
    CHECK_THROWS_AS(build_binary_pairs(single, 4, 1), InsufficientPairs);
}

TEST_CASE("build_binary_pairs is deterministic per seed and writes stable JSONL") {
    const Corpus corpus = grid_corpus(4, 5);
    const auto a = build_binary_pairs(corpus, 20, 33);
    const auto b = build_binary_pairs(corpus, 20, 33);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id1 == b[i].id1);
        CHECK(a[i].id2 == b[i].id2);
        CHECK(a[i].label == b[i].label);
    }

    TempDir dir("jsonl");
    write_jsonl(a, dir.str("a.jsonl"));
    write_jsonl(b, dir.str("b.jsonl"));
    CHECK(testsupport::read_file(dir.str("a.jsonl")) ==
          testsupport::read_file(dir.str("b.jsonl")));

    // another seed reorders
    const auto c = build_binary_pairs(corpus, 20, 34);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].id1 != c[i].id1 || a[i].id2 != c[i].id2) any_diff = true;
    CHECK(any_diff);
}

// ---------------------------------------------------------------- retrieval

TEST_CASE("build_retrieval emits one record per submission in order") {
    const Corpus corpus = grid_corpus(2, 3);
    const auto records = build_retrieval(corpus);
    REQUIRE(records.size() == 6);

    std::set<std::string> labels;
    for (const RetrievalRecord& r : records) labels.insert(r.label);
    CHECK(labels.size() == 2);

    // lexicographic (problem, submission) order
    std::vector<std::pair<std::string, std::string>> keys;
    for (const RetrievalRecord& r : records) keys.emplace_back(r.label, r.id);
    CHECK(std::is_sorted(keys.begin(), keys.end()));

    const auto single = build_retrieval(grid_corpus(1, 4));
    for (const RetrievalRecord& r : single) CHECK(r.label == single[0].label);
}

// ---------------------------------------------------------------- jsonl io

TEST_CASE("pair JSONL round-trips and uses the exact key set") {
    const Corpus corpus = grid_corpus(3, 3);
    const auto records = build_binary_pairs(corpus, 10, 5);
    TempDir dir("roundtrip");
    write_jsonl(records, dir.str("pairs.jsonl"));

    const std::string text = testsupport::read_file(dir.str("pairs.jsonl"));
    const std::string first = text.substr(0, text.find('\n'));
    for (const char* key : {"\"func1\"", "\"func2\"", "\"id1\"", "\"id2\"",
                            "\"index\"", "\"label\""})
        CHECK(first.find(key) != std::string::npos);

    const auto back = read_pair_jsonl(dir.str("pairs.jsonl"));
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < back.size(); ++i) CHECK(back[i] == records[i]);
}

TEST_CASE("retrieval JSONL round-trips") {
    const Corpus corpus = grid_corpus(2, 4);
    const auto records = build_retrieval(corpus);
    TempDir dir("retr");
    write_jsonl(records, dir.str("r.jsonl"));
    const auto back = read_retrieval_jsonl(dir.str("r.jsonl"));
    REQUIRE(back.size() == records.size());
    for (size_t i = 0; i < back.size(); ++i) CHECK(back[i] == records[i]);
}

TEST_CASE("jsonl reader reports the failing line and accepts 0/1 labels") {
    TempDir dir("badjsonl");
    testsupport::write_file(
        dir.path() / "bad.jsonl",
        R"({"func1":"a","func2":"b","id1":"1","id2":"2","index":"p","label":true})"
        "\n{broken\n");
    CHECK_THROWS_WITH_AS(read_pair_jsonl(dir.str("bad.jsonl")),
                         doctest::Contains("line 2"), ParseError);

    testsupport::write_file(
        dir.path() / "numeric.jsonl",
        R"({"func1":"a","func2":"b","id1":7,"id2":8,"index":3,"label":1})"
        "\n"
        R"({"func1":"c","func2":"d","id1":"x","id2":"y","index":"p","label":0})"
        "\n");
    const auto records = read_pair_jsonl(dir.str("numeric.jsonl"));
    REQUIRE(records.size() == 2);
    CHECK(records[0].label == true);
    CHECK(records[0].id1 == "7");
    CHECK(records[1].label == false);

    testsupport::write_file(dir.path() / "badlabel.jsonl",
                            R"({"func1":"a","func2":"b","id1":"1","id2":"2","label":"yes"})"
                            "\n");
    CHECK_THROWS_WITH_AS(read_pair_jsonl(dir.str("badlabel.jsonl")),
                         doctest::Contains("line 1"), ParseError);
}

TEST_CASE("trailing garbage on a line is a ParseError naming line 1") {
    TempDir dir("garbage");
    testsupport::write_file(dir.path() / "g.jsonl",
                            R"({"code":"x","id":"1","label":"p"} trailing)"
                            "\n");
    CHECK_THROWS_WITH_AS(read_retrieval_jsonl(dir.str("g.jsonl")),
                         doctest::Contains("line 1"), ParseError);
}

// ---------------------------------------------------------------- scenario 1

namespace {

SyntheticSpec scenario1_spec() {
    SyntheticSpec spec;
    spec.n_problems = 16;  // > 14 so sampling has slack
    spec.n_submissions = 24;
    spec.vocab_per_problem = 8;
    spec.noise_rate = 0.2;
    spec.seed = 3;
    return spec;
}

const Scenario1Config kSmallScenario1{14, 2, 20};

}  // namespace

TEST_CASE("split_scenario1 emits 6 x |shots| manifests with disjoint groups") {
    const Corpus corpus = synthetic_corpus(scenario1_spec());
    const auto manifests =
        split_scenario1(corpus, Language::cpp(), {5, 10, 15}, 11, kSmallScenario1);
    REQUIRE(manifests.size() == 18);

    const auto problem_of = problem_of_map(corpus);
    const std::vector<std::string>& train_ids = manifests[0].train_ids;
    CHECK(train_ids.size() == 2 * 20);  // group of 2 problems, capped at 20

    std::set<std::string> train_problems;
    for (const auto& id : train_ids) train_problems.insert(problem_of.at(id));
    CHECK(train_problems.size() == 2);

    std::set<int> group_ids;
    std::map<int, std::set<std::string>> group_problems;
    for (const ScenarioManifest& m : manifests) {
        CHECK(m.scenario == Scenario::I);
        CHECK(m.seed == 11);
        CHECK(m.train_ids == train_ids);  // one shared train split
        group_ids.insert(m.group_id);
        validate_manifest(m, corpus);

        std::set<std::string> cell_problems;
        for (const auto& id : m.support_ids) cell_problems.insert(problem_of.at(id));
        for (const auto& id : m.test_ids) cell_problems.insert(problem_of.at(id));
        CHECK(cell_problems.size() == 2);
        for (const auto& pid : cell_problems) CHECK(train_problems.count(pid) == 0);

        auto& acc = group_problems[m.group_id];
        if (acc.empty())
            acc = cell_problems;
        else
            CHECK(acc == cell_problems);  // same group, same problems across shots

        // exactly K support ids per problem
        std::map<std::string, int> per_problem;
        for (const auto& id : m.support_ids) ++per_problem[problem_of.at(id)];
        for (const auto& [pid, count] : per_problem) CHECK(count == m.k);
        CHECK(m.support_ids.size() + m.test_ids.size() == 2 * 20);
    }
    CHECK(group_ids == std::set<int>{2, 3, 4, 5, 6, 7});

    // eval groups pairwise disjoint
    for (auto ita = group_problems.begin(); ita != group_problems.end(); ++ita)
        for (auto itb = std::next(ita); itb != group_problems.end(); ++itb)
            for (const auto& pid : ita->second) CHECK(itb->second.count(pid) == 0);
}

TEST_CASE("split_scenario1 shots=[10] gives 6 manifests all K=10") {
    const Corpus corpus = synthetic_corpus(scenario1_spec());
    const auto manifests =
        split_scenario1(corpus, Language::cpp(), {10}, 2, kSmallScenario1);
    REQUIRE(manifests.size() == 6);
    for (const ScenarioManifest& m : manifests) CHECK(m.k == 10);
}

TEST_CASE("split_scenario1 insufficiency errors") {
    SyntheticSpec spec = scenario1_spec();
    spec.n_problems = 10;  // fewer than the 14 required
    CHECK_THROWS_AS(split_scenario1(synthetic_corpus(spec), Language::cpp(), {5},
                                    1, kSmallScenario1),
                    InsufficientProblems);

    SyntheticSpec thin = scenario1_spec();
    thin.n_submissions = 12;  // below the 20-submission cap
    CHECK_THROWS_AS(split_scenario1(synthetic_corpus(thin), Language::cpp(), {5},
                                    1, kSmallScenario1),
                    InsufficientSubmissions);

    // default protocol needs 105 problems
    CHECK_THROWS_AS(
        split_scenario1(synthetic_corpus(scenario1_spec()), Language::cpp(), {5}, 1),
        InsufficientProblems);
}

TEST_CASE("split_scenario1 is deterministic per seed") {
    const Corpus corpus = synthetic_corpus(scenario1_spec());
    const auto a =
        split_scenario1(corpus, Language::cpp(), {5, 10}, 42, kSmallScenario1);
    const auto b =
        split_scenario1(corpus, Language::cpp(), {5, 10}, 42, kSmallScenario1);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].train_ids == b[i].train_ids);
        CHECK(a[i].support_ids == b[i].support_ids);
        CHECK(a[i].test_ids == b[i].test_ids);
    }
    const auto c =
        split_scenario1(corpus, Language::cpp(), {5, 10}, 43, kSmallScenario1);
    CHECK(a[0].support_ids != c[0].support_ids);
}

// ---------------------------------------------------------------- scenario 2

namespace {

Corpus two_language_corpus() {
    SyntheticSpec spec;
    spec.n_problems = 6;
    spec.n_submissions = 12;
    spec.n_languages = 2;  // cpp and java, round-robin
    spec.seed = 19;
    return synthetic_corpus(spec);
}

}  // namespace

TEST_CASE("split_scenario2 separates languages and splits support/test") {
    const Corpus corpus = two_language_corpus();
    const ScenarioManifest m =
        split_scenario2(corpus, Language::java(), Language::cpp(), 3, 7);
    CHECK(m.scenario == Scenario::II);
    CHECK(m.train_lang == Language::java());
    CHECK(m.eval_lang == Language::cpp());
    validate_manifest(m, corpus);

    const auto problem_of = problem_of_map(corpus);
    std::map<std::string, Language> lang_of;
    for (const auto& [pid, problem] : corpus.problems)
        for (const Submission& sub : problem.submissions)
            lang_of.emplace(sub.submission_id, sub.language);

    for (const auto& id : m.train_ids) CHECK(lang_of.at(id) == Language::java());
    for (const auto& id : m.support_ids) CHECK(lang_of.at(id) == Language::cpp());
    for (const auto& id : m.test_ids) CHECK(lang_of.at(id) == Language::cpp());

    // same problem set on both sides
    std::set<std::string> train_problems, eval_problems;
    for (const auto& id : m.train_ids) train_problems.insert(problem_of.at(id));
    for (const auto& id : m.support_ids) eval_problems.insert(problem_of.at(id));
    for (const auto& id : m.test_ids) eval_problems.insert(problem_of.at(id));
    CHECK(train_problems == eval_problems);

    // K support per problem
    std::map<std::string, int> per_problem;
    for (const auto& id : m.support_ids) ++per_problem[problem_of.at(id)];
    for (const auto& [pid, count] : per_problem) CHECK(count == 3);
}

TEST_CASE("split_scenario2 rejects equal languages and is seed-stable") {
    const Corpus corpus = two_language_corpus();
    CHECK_THROWS_AS(
        split_scenario2(corpus, Language::cpp(), Language::cpp(), 5, 1),
        LanguageOverlap);

    const auto a = split_scenario2(corpus, Language::java(), Language::cpp(), 2, 5);
    const auto b = split_scenario2(corpus, Language::java(), Language::cpp(), 2, 5);
    CHECK(a.support_ids == b.support_ids);
    CHECK(a.test_ids == b.test_ids);

    CHECK_THROWS_AS(
        split_scenario2(corpus, Language::parse("Haskell"), Language::cpp(), 2, 5),
        UnknownLanguage);
}

// ---------------------------------------------------------------- scenario 3

TEST_CASE("split_scenario3 accepts pair and retrieval train files") {
    const Corpus corpus = grid_corpus(4, 6, "Ruby");
    TempDir dir("ext");

    SUBCASE("pair schema") {
        const Corpus ext = grid_corpus(3, 3);
        write_jsonl(build_binary_pairs(ext, 8, 2), dir.str("train.jsonl"));
        const ScenarioManifest m = split_scenario3(
            dir.str("train.jsonl"), corpus, Language::ruby(), 2, 9);
        CHECK(m.scenario == Scenario::III);
        CHECK(m.train_path == dir.str("train.jsonl"));
        CHECK(m.train_ids.empty());
        validate_manifest(m, corpus);
        CHECK(m.support_ids.size() == 4 * 2);
        CHECK(m.test_ids.size() == 4 * 4);
    }
    SUBCASE("retrieval schema") {
        const Corpus ext = grid_corpus(3, 3);
        write_jsonl(build_retrieval(ext), dir.str("retr.jsonl"));
        const ScenarioManifest m = split_scenario3(
            dir.str("retr.jsonl"), corpus, Language::ruby(), 2, 9);
        CHECK(m.train_path == dir.str("retr.jsonl"));
        CHECK(m.support_ids.size() == 8);
    }
    SUBCASE("missing func2 is malformed") {
        testsupport::write_file(dir.path() / "broken.jsonl",
                                R"({"func1":"a","id1":"1","id2":"2","label":true})"
                                "\n");
        CHECK_THROWS_WITH_AS(split_scenario3(dir.str("broken.jsonl"), corpus,
                                             Language::ruby(), 2, 9),
                             doctest::Contains("func2"), MalformedDataset);
    }
    SUBCASE("unknown schema is malformed") {
        testsupport::write_file(dir.path() / "odd.jsonl", R"({"foo":"bar"})" "\n");
        CHECK_THROWS_AS(split_scenario3(dir.str("odd.jsonl"), corpus,
                                        Language::ruby(), 2, 9),
                        MalformedDataset);
    }
}

// ---------------------------------------------------------------- manifests

TEST_CASE("manifest round-trips through JSON") {
    const Corpus corpus = synthetic_corpus(scenario1_spec());
    const auto manifests =
        split_scenario1(corpus, Language::cpp(), {5}, 13, kSmallScenario1);
    TempDir dir("manifest");
    write_manifest(manifests[0], dir.str("m.json"));
    const ScenarioManifest back = read_manifest(dir.str("m.json"));
    CHECK(back.scenario == manifests[0].scenario);
    CHECK(back.group_id == manifests[0].group_id);
    CHECK(back.seed == manifests[0].seed);
    CHECK(back.k == manifests[0].k);
    CHECK(back.train_lang == manifests[0].train_lang);
    CHECK(back.train_ids == manifests[0].train_ids);
    CHECK(back.support_ids == manifests[0].support_ids);
    CHECK(back.test_ids == manifests[0].test_ids);
}

TEST_CASE("validate_manifest flags overlaps and unknown ids") {
    const Corpus corpus = synthetic_corpus(scenario1_spec());
    auto manifests =
        split_scenario1(corpus, Language::cpp(), {5}, 23, kSmallScenario1);
    ScenarioManifest m = manifests[0];

    SUBCASE("support/test overlap") {
        m.support_ids.push_back(m.test_ids.front());
        CHECK_THROWS_AS(validate_manifest(m, corpus), OverlapError);
    }
    SUBCASE("train/test problem overlap in scenario I") {
        m.test_ids.push_back(m.train_ids.front());
        CHECK_THROWS_AS(validate_manifest(m, corpus), OverlapError);
    }
    SUBCASE("unknown id") {
        m.support_ids.push_back("does_not_exist");
        CHECK_THROWS_AS(validate_manifest(m, corpus), InvalidArgument);
    }
}

// ---------------------------------------------------------------- episodes

namespace {

Split make_split(size_t n_classes, size_t per_class) {
    Split split;
    for (size_t c = 0; c < n_classes; ++c)
        for (size_t i = 0; i < per_class; ++i)
            split.push_back({"s" + std::to_string(c * per_class + i),
                             "cls" + std::to_string(c)});
    return split;
}

}  // namespace

TEST_CASE("sample_episode: 5 classes x 20, C=2, K=5 gives 10 support, 30 query") {
    const Split split = make_split(5, 20);
    Rng rng(1);
    const Episode ep = sample_episode(split, 2, 5, rng, Episode::kNoQueryCap);
    CHECK(ep.classes.size() == 2);
    CHECK(ep.support.size() == 10);
    CHECK(ep.query.size() == 30);

    // support/query disjoint, exactly K per class, query classes within classes
    std::set<size_t> support_set(ep.support.begin(), ep.support.end());
    for (size_t idx : ep.query) CHECK(support_set.count(idx) == 0);

    const std::set<std::string> classes(ep.classes.begin(), ep.classes.end());
    std::map<std::string, int> support_per_class;
    for (size_t idx : ep.support) ++support_per_class[split[idx].problem_id];
    for (const auto& [cls, count] : support_per_class) {
        CHECK(count == 5);
        CHECK(classes.count(cls) == 1);
    }
    for (size_t idx : ep.query) CHECK(classes.count(split[idx].problem_id) == 1);
}

TEST_CASE("sample_episode error cases") {
    Rng rng(2);
    CHECK_THROWS_AS(sample_episode(make_split(5, 20), 6, 5, rng),
                    NotEnoughClasses);
    // classes with exactly K items cannot contribute a query sample
    CHECK_THROWS_AS(sample_episode(make_split(3, 5), 3, 5, rng),
                    NotEnoughClasses);
    CHECK_THROWS_AS(sample_episode(make_split(3, 5), 1, 2, rng),
                    NotEnoughClasses);
    CHECK_THROWS_AS(sample_episode(make_split(3, 5), 2, 0, rng),
                    NotEnoughSamples);
}

TEST_CASE("sample_episode caps the query side deterministically") {
    const Split split = make_split(4, 40);
    Rng rng(5);
    const Episode ep = sample_episode(split, 2, 4, rng, 32);
    CHECK(ep.query.size() == 32);  // 2 x 36 remaining, capped
    CHECK(std::is_sorted(ep.query.begin(), ep.query.end()));

    Rng rng2(5);
    const Episode ep2 = sample_episode(split, 2, 4, rng2, 32);
    CHECK(ep.support == ep2.support);
    CHECK(ep.query == ep2.query);
}

TEST_CASE("episode class selection is uniform over 10,000 draws") {
    const Split split = make_split(8, 6);
    Rng rng(123);
    std::map<std::string, int> hits;
    const int episodes = 10000;
    for (int i = 0; i < episodes; ++i) {
        const Episode ep = sample_episode(split, 2, 3, rng);
        for (const std::string& cls : ep.classes) ++hits[cls];
    }
    const double p = 2.0 / 8.0;
    const double expected = episodes * p;
    const double sigma = std::sqrt(episodes * p * (1 - p));
    REQUIRE(hits.size() == 8);
    for (const auto& [cls, count] : hits)
        CHECK(std::abs(count - expected) < 3.0 * sigma);
}

TEST_CASE("pairs_from_episode balances at min availability with sound labels") {
    // C=2, K=2: support has 1 positive per class (2 total) and 4 cross pairs
    const Split split = make_split(2, 8);
    Rng rng(9);
    const Episode ep = sample_episode(split, 2, 2, rng, Episode::kNoQueryCap);
    const EpisodePairs pairs = pairs_from_episode(split, ep, rng);

    CHECK(pairs.support.size() == 4);
    const std::set<size_t> support_set(ep.support.begin(), ep.support.end());
    size_t positives = 0;
    for (const IndexPair& p : pairs.support) {
        CHECK(support_set.count(p.first) == 1);
        CHECK(support_set.count(p.second) == 1);
        CHECK(p.label ==
              (split[p.first].problem_id == split[p.second].problem_id));
        if (p.label) ++positives;
    }
    CHECK(positives == 2);

    const std::set<size_t> query_set(ep.query.begin(), ep.query.end());
    positives = 0;
    for (const IndexPair& p : pairs.query) {
        CHECK(query_set.count(p.first) == 1);
        CHECK(query_set.count(p.second) == 1);
        CHECK(p.label ==
              (split[p.first].problem_id == split[p.second].problem_id));
        if (p.label) ++positives;
    }
    CHECK(positives * 2 == pairs.query.size());
}

TEST_CASE("pairs_from_episode rejects degenerate episodes") {
    const Split split = make_split(1, 6);
    Episode ep;
    ep.classes = {"cls0"};
    for (size_t i = 0; i < 3; ++i) ep.support.push_back(i);
    for (size_t i = 3; i < 6; ++i) ep.query.push_back(i);
    Rng rng(3);
    CHECK_THROWS_AS(pairs_from_episode(split, ep, rng), DegenerateEpisode);
}

TEST_CASE("episode invariants hold across 10,000 sampled episodes") {
    const Split split = make_split(7, 9);
    Rng rng(123);
    size_t violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const Episode ep = sample_episode(split, 3, 2, rng, 16);
        std::set<size_t> support_set(ep.support.begin(), ep.support.end());
        if (support_set.size() != ep.support.size()) ++violations;
        if (ep.support.size() != 3 * 2) ++violations;
        for (size_t idx : ep.query)
            if (support_set.count(idx)) ++violations;
        const std::set<std::string> classes(ep.classes.begin(), ep.classes.end());
        if (classes.size() != 3) ++violations;
        for (size_t idx : ep.support)
            if (!classes.count(split[idx].problem_id)) ++violations;
        for (size_t idx : ep.query)
            if (!classes.count(split[idx].problem_id)) ++violations;
    }
    CHECK(violations == 0);
}
