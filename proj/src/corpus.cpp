#include "metaclone/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metaclone/errors.hpp"

namespace fs = std::filesystem;

namespace metaclone {

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingFile("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

void insert_submission(Corpus& corpus, Submission sub) {
    auto& problem = corpus.problems[sub.problem_id];
    problem.problem_id = sub.problem_id;
    corpus.languages_present.insert(sub.language);
    problem.submissions.push_back(std::move(sub));
}

void finalize(Corpus& corpus) {
    for (auto& [id, problem] : corpus.problems) {
        std::sort(problem.submissions.begin(), problem.submissions.end(),
                  [](const Submission& a, const Submission& b) {
                      return a.submission_id < b.submission_id;
                  });
    }
}

}  // namespace

size_t Corpus::submission_count() const {
    size_t n = 0;
    for (const auto& [id, p] : problems) n += p.submissions.size();
    return n;
}

std::string sanitize_utf8(const std::string& bytes) {
    static const std::string replacement = "\xEF\xBF\xBD";  // U+FFFD
    std::string out;
    out.reserve(bytes.size());
    size_t i = 0;
    const size_t n = bytes.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(bytes[i]);
        size_t len;
        if (c < 0x80) len = 1;
        else if ((c >> 5) == 0x6) len = 2;
        else if ((c >> 4) == 0xE) len = 3;
        else if ((c >> 3) == 0x1E) len = 4;
        else {
            out += replacement;
            ++i;
            continue;
        }
        if (i + len > n) {
            out += replacement;
            ++i;
            continue;
        }
        bool ok = true;
        for (size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(bytes[i + k]) >> 6) != 0x2) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out.append(bytes, i, len);
            i += len;
        } else {
            out += replacement;
            ++i;
        }
    }
    return out;
}

Corpus load_corpus(const std::string& root, const std::string& metadata_csv) {
    std::ifstream meta(metadata_csv);
    if (!meta) throw MissingFile("cannot open metadata: " + metadata_csv);

    std::string line;
    if (!std::getline(meta, line))
        throw MalformedMetadata("metadata is empty: " + metadata_csv);
    {
        auto header = split_csv_row(line);
        const std::vector<std::string> expected = {
            "submission_id", "problem_id", "language", "status", "filename"};
        if (header != std::vector<std::string>(expected))
            throw MalformedMetadata("bad metadata header: " + line);
    }

    Corpus corpus;
    std::set<std::string> seen_ids;
    size_t row_no = 1;
    while (std::getline(meta, line)) {
        ++row_no;
        if (line.empty()) continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 5)
            throw MalformedMetadata("metadata row " + std::to_string(row_no) +
                                    " has " + std::to_string(fields.size()) +
                                    " fields, want 5");
        const std::string& sid = fields[0];
        const std::string& pid = fields[1];
        const Status status = fields[3] == "Accepted" ? Status::Accepted : Status::Rejected;
        if (status == Status::Rejected) continue;

        if (!seen_ids.insert(sid).second)
            throw MalformedMetadata("duplicate submission_id: " + sid);

        const fs::path path = fs::path(root) / pid / fields[4];
        if (!fs::exists(path))
            throw MissingFile("metadata row " + std::to_string(row_no) +
                              " references missing file: " + path.string());

        Submission sub;
        sub.submission_id = sid;
        sub.problem_id = pid;
        sub.language = Language::parse(fields[2]);
        sub.status = Status::Accepted;
        sub.source = sanitize_utf8(read_file(path));
        if (sub.source.empty())
            throw MalformedMetadata("accepted submission has empty source: " +
                                    path.string());
        insert_submission(corpus, std::move(sub));
    }
    if (corpus.empty()) throw EmptyCorpus("no accepted submissions in " + metadata_csv);
    finalize(corpus);
    return corpus;
}

Corpus filter_language(const Corpus& corpus, const Language& lang) {
    if (!corpus.languages_present.count(lang))
        throw UnknownLanguage("language not present in corpus: " + lang.str());
    Corpus out;
    for (const auto& [pid, problem] : corpus.problems) {
        Problem kept;
        kept.problem_id = pid;
        for (const auto& sub : problem.submissions)
            if (sub.language == lang) kept.submissions.push_back(sub);
        if (!kept.submissions.empty()) {
            out.problems.emplace(pid, std::move(kept));
        }
    }
    out.languages_present.insert(lang);
    return out;
}

Corpus restrict_to_ids(const Corpus& corpus, const std::set<std::string>& ids) {
    Corpus out;
    for (const auto& [pid, problem] : corpus.problems) {
        Problem kept;
        kept.problem_id = pid;
        for (const auto& sub : problem.submissions) {
            if (ids.count(sub.submission_id)) {
                out.languages_present.insert(sub.language);
                kept.submissions.push_back(sub);
            }
        }
        if (!kept.submissions.empty()) out.problems.emplace(pid, std::move(kept));
    }
    return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    stats.problem_count = corpus.problem_count();
    std::vector<size_t> sizes;
    for (const auto& [pid, problem] : corpus.problems) {
        sizes.push_back(problem.submissions.size());
        for (const auto& sub : problem.submissions) {
            ++stats.per_language[sub.language];
            ++stats.submission_count;
        }
    }
    if (!sizes.empty()) {
        std::sort(sizes.begin(), sizes.end());
        stats.min_per_problem = sizes.front();
        const size_t m = sizes.size();
        stats.median_per_problem =
            (m % 2 == 1) ? static_cast<double>(sizes[m / 2])
                         : 0.5 * static_cast<double>(sizes[m / 2 - 1] + sizes[m / 2]);
    }
    return stats;
}

void save_corpus_store(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus store: " + path);
    for (const auto& [pid, problem] : corpus.problems) {
        for (const auto& sub : problem.submissions) {
            nlohmann::ordered_json j;
            j["submission_id"] = sub.submission_id;
            j["problem_id"] = sub.problem_id;
            j["language"] = sub.language.str();
            j["source"] = sub.source;
            out << j.dump() << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

Corpus load_corpus_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open corpus store: " + path);
    Corpus corpus;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus store line " + std::to_string(line_no) + ": " +
                             e.what());
        }
        Submission sub;
        try {
            sub.submission_id = j.at("submission_id").get<std::string>();
            sub.problem_id = j.at("problem_id").get<std::string>();
            sub.language = Language::parse(j.at("language").get<std::string>());
            sub.source = j.at("source").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus store line " + std::to_string(line_no) + ": " +
                             e.what());
        }
        insert_submission(corpus, std::move(sub));
    }
    if (corpus.empty()) throw EmptyCorpus("corpus store is empty: " + path);
    finalize(corpus);
    return corpus;
}

}  // namespace metaclone
