#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace metaclone {

// Language-agnostic lexer. Maximal [A-Za-z0-9_] runs become word tokens,
// string/char literals collapse to "<str>", //, /* */ and # comments are
// stripped, and any other non-space character is a single token (one per
// UTF-8 code point).
std::vector<std::string> tokenize(const std::string& source);

// FNV-1a 64-bit hash of the token bytes, reduced mod vocab_size.
// vocab_size must be a power of two.
uint32_t hash_token(const std::string& token, uint32_t vocab_size);

struct TokenSeq {
    std::vector<uint32_t> ids;

    size_t length() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
};

// tokenize + hash + truncate to max_len. Empty sources produce an empty
// sequence; callers that must embed something substitute a sentinel.
TokenSeq sequence_from_source(const std::string& source, uint32_t vocab_size,
                              size_t max_len);

}  // namespace metaclone
