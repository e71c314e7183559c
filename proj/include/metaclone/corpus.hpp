#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "metaclone/language.hpp"

namespace metaclone {

enum class Status { Accepted, Rejected };

struct Submission {
    std::string submission_id;
    std::string problem_id;
    Language language;
    Status status = Status::Accepted;
    std::string source;  // UTF-8, invalid bytes replaced on load
};

struct Problem {
    std::string problem_id;
    std::vector<Submission> submissions;  // sorted by submission_id
};

// Immutable after construction. Problems iterate lexicographically by id,
// submissions by submission_id, so two loads of the same tree are
// structurally identical.
struct Corpus {
    std::map<std::string, Problem> problems;
    std::set<Language> languages_present;

    size_t problem_count() const { return problems.size(); }
    size_t submission_count() const;
    bool empty() const { return problems.empty(); }
};

struct CorpusStats {
    size_t problem_count = 0;
    size_t submission_count = 0;
    std::map<Language, size_t> per_language;
    size_t min_per_problem = 0;
    double median_per_problem = 0.0;
};

// Loads root/<problem_id>/<filename> per the metadata CSV
// (submission_id,problem_id,language,status,filename). Rows with any status
// other than "Accepted" are dropped. Invalid UTF-8 bytes in sources are
// replaced with U+FFFD.
Corpus load_corpus(const std::string& root, const std::string& metadata_csv);

Corpus filter_language(const Corpus& corpus, const Language& lang);

// Keeps only the submissions whose ids appear in `ids`; drops emptied problems.
Corpus restrict_to_ids(const Corpus& corpus, const std::set<std::string>& ids);

CorpusStats corpus_stats(const Corpus& corpus);

// Normalized JSONL snapshot of a corpus (one submission per line); the
// `extract` command writes this and later commands can load it instead of
// re-reading the tree.
void save_corpus_store(const Corpus& corpus, const std::string& path);
Corpus load_corpus_store(const std::string& path);

// Replaces ill-formed UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(const std::string& bytes);

}  // namespace metaclone
