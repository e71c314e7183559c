#include "metaclone/synthetic.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "metaclone/errors.hpp"
#include "metaclone/rng.hpp"

namespace fs = std::filesystem;

namespace metaclone {

namespace {

constexpr size_t kFillerVocab = 64;
constexpr size_t kMinTokens = 80;
constexpr size_t kMaxTokens = 160;
constexpr size_t kTokensPerLine = 8;

void check_spec(const SyntheticSpec& spec) {
    if (spec.n_problems < 2)
        throw InvalidArgument("synthetic corpus needs at least 2 problems");
    if (spec.n_submissions < 1)
        throw InvalidArgument("synthetic corpus needs at least 1 submission per problem");
    if (spec.n_languages < 1)
        throw InvalidArgument("synthetic corpus needs at least 1 language");
    if (spec.vocab_per_problem < 1)
        throw InvalidArgument("signature vocabulary must be non-empty");
    if (spec.noise_rate < 0.0 || spec.noise_rate >= 1.0)
        throw InvalidArgument("noise_rate must lie in [0, 1)");
}

std::string lang_tag(const Language& lang) {
    switch (lang.kind) {
        case Lang::Java: return "java";
        case Lang::Cpp: return "cpp";
        case Lang::Ruby: return "ruby";
        case Lang::Other: break;
    }
    std::string tag;
    for (char c : lang.other)
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) tag += c;
        else if (c >= 'A' && c <= 'Z') tag += static_cast<char>(c - 'A' + 'a');
    return tag.empty() ? "x" : tag;
}

std::string extension(const Language& lang) {
    switch (lang.kind) {
        case Lang::Java: return ".java";
        case Lang::Cpp: return ".cpp";
        case Lang::Ruby: return ".rb";
        case Lang::Other: return ".txt";
    }
    return ".txt";
}

}  // namespace

std::vector<Language> synthetic_languages(size_t n) {
    const Language canon[3] = {Language::cpp(), Language::java(), Language::ruby()};
    std::vector<Language> langs;
    for (size_t i = 0; i < n; ++i) {
        if (i < 3) langs.push_back(canon[i]);
        else langs.push_back(Language::parse("Synth" + std::to_string(i + 1)));
    }
    return langs;
}

Corpus synthetic_corpus(const SyntheticSpec& spec) {
    check_spec(spec);
    const std::vector<Language> langs = synthetic_languages(spec.n_languages);
    Rng rng(spec.seed);
    Corpus corpus;
    char buf[64];
    size_t next_submission = 0;

    for (size_t p = 0; p < spec.n_problems; ++p) {
        std::snprintf(buf, sizeof buf, "p%05zu", p);
        const std::string problem_id(buf);
        Problem problem;
        problem.problem_id = problem_id;

        for (size_t s = 0; s < spec.n_submissions; ++s) {
            Submission sub;
            std::snprintf(buf, sizeof buf, "s%08zu", next_submission++);
            sub.submission_id = buf;
            sub.problem_id = problem_id;
            sub.language = langs[s % langs.size()];
            sub.status = Status::Accepted;
            corpus.languages_present.insert(sub.language);

            const std::string tag = lang_tag(sub.language);
            const size_t length = kMinTokens + static_cast<size_t>(rng.below(kMaxTokens - kMinTokens + 1));
            std::string source;
            source.reserve(length * 16);
            for (size_t t = 0; t < length; ++t) {
                if (rng.unit() < spec.noise_rate) {
                    std::snprintf(buf, sizeof buf, "fill_%s_%zu", tag.c_str(),
                                  static_cast<size_t>(rng.below(kFillerVocab)));
                } else {
                    std::snprintf(buf, sizeof buf, "sig_%s_k%zu", problem_id.c_str(),
                                  static_cast<size_t>(rng.below(spec.vocab_per_problem)));
                }
                source += buf;
                source += (t + 1) % kTokensPerLine == 0 ? '\n' : ' ';
            }
            if (source.empty() || source.back() != '\n') source += '\n';
            sub.source = std::move(source);
            problem.submissions.push_back(std::move(sub));
        }
        corpus.problems.emplace(problem_id, std::move(problem));
    }
    return corpus;
}

std::string generate_synthetic(const SyntheticSpec& spec, const std::string& root) {
    const Corpus corpus = synthetic_corpus(spec);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + root + ": " + ec.message());

    const fs::path metadata_path = fs::path(root) / "metadata.csv";
    std::ofstream meta(metadata_path, std::ios::binary);
    if (!meta) throw IoError("cannot write " + metadata_path.string());
    meta << "submission_id,problem_id,language,status,filename\n";

    for (const auto& [problem_id, problem] : corpus.problems) {
        const fs::path dir = fs::path(root) / problem_id;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        for (const Submission& sub : problem.submissions) {
            const std::string filename = sub.submission_id + extension(sub.language);
            std::ofstream out(dir / filename, std::ios::binary);
            if (!out) throw IoError("cannot write " + (dir / filename).string());
            out << sub.source;
            if (!out) throw IoError("write failed: " + (dir / filename).string());
            meta << sub.submission_id << ',' << sub.problem_id << ','
                 << sub.language.str() << ",Accepted," << filename << '\n';
        }
    }
    if (!meta) throw IoError("write failed: " + metadata_path.string());
    return metadata_path.string();
}

}  // namespace metaclone
