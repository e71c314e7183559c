#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "metaclone/corpus.hpp"

namespace testsupport {

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("metaclone_" + tag + "_" + std::to_string(::getpid()) +
                        "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One metadata row plus its source file.
struct TreeRow {
    std::string submission_id;
    std::string problem_id;
    std::string language;
    std::string status;
    std::string source;
};

// Writes a corpus tree (root/<pid>/<sid>.txt + metadata.csv), returns root.
inline std::string write_corpus_tree(const TempDir& dir,
                                     const std::vector<TreeRow>& rows) {
    std::string csv = "submission_id,problem_id,language,status,filename\n";
    for (const TreeRow& r : rows) {
        const std::string filename = r.submission_id + ".txt";
        write_file(dir.path() / r.problem_id / filename, r.source);
        csv += r.submission_id + "," + r.problem_id + "," + r.language + "," +
               r.status + "," + filename + "\n";
    }
    write_file(dir.path() / "metadata.csv", csv);
    return dir.str();
}

// n_problems x n_subs tree of Accepted C++ rows with distinctive sources.
inline std::vector<TreeRow> grid_rows(size_t n_problems, size_t n_subs,
                                      const std::string& language = "C++") {
    std::vector<TreeRow> rows;
    for (size_t p = 0; p < n_problems; ++p) {
        for (size_t s = 0; s < n_subs; ++s) {
            const std::string pid = "p" + std::to_string(100 + p);
            const std::string sid = "s" + std::to_string(1000 + p * n_subs + s);
            rows.push_back({sid, pid, language, "Accepted",
                            "word_" + pid + " token_" + sid + " shared"});
        }
    }
    return rows;
}

}  // namespace testsupport
