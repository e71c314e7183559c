#include "metaclone/tokenizer.hpp"

#include "metaclone/rng.hpp"

namespace metaclone {

namespace {

bool is_word(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_';
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Consumes a quoted literal starting at i (source[i] is the quote). Ends at
// the matching unescaped quote or at end of line, whichever comes first.
size_t skip_literal(const std::string& s, size_t i) {
    const char quote = s[i];
    ++i;
    while (i < s.size() && s[i] != '\n') {
        if (s[i] == '\\' && i + 1 < s.size()) {
            i += 2;
            continue;
        }
        if (s[i] == quote) return i + 1;
        ++i;
    }
    return i;
}

size_t utf8_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // stray byte, emit alone
}

}  // namespace

std::vector<std::string> tokenize(const std::string& source) {
    std::vector<std::string> tokens;
    size_t i = 0;
    const size_t n = source.size();
    while (i < n) {
        const char c = source[i];
        if (c == '/' && i + 1 < n && source[i + 1] == '/') {
            while (i < n && source[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && source[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) ++i;
            i = (i + 1 < n) ? i + 2 : n;
            continue;
        }
        if (c == '#') {
            while (i < n && source[i] != '\n') ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            i = skip_literal(source, i);
            tokens.emplace_back("<str>");
            continue;
        }
        if (is_word(c)) {
            size_t j = i + 1;
            while (j < n && is_word(source[j])) ++j;
            tokens.emplace_back(source.substr(i, j - i));
            i = j;
            continue;
        }
        if (is_space(c)) {
            ++i;
            continue;
        }
        const size_t len = std::min(utf8_len(static_cast<unsigned char>(c)), n - i);
        tokens.emplace_back(source.substr(i, len));
        i += len;
    }
    return tokens;
}

uint32_t hash_token(const std::string& token, uint32_t vocab_size) {
    return static_cast<uint32_t>(fnv1a64(token.data(), token.size()) %
                                 static_cast<uint64_t>(vocab_size));
}

TokenSeq sequence_from_source(const std::string& source, uint32_t vocab_size,
                              size_t max_len) {
    TokenSeq seq;
    const auto tokens = tokenize(source);
    seq.ids.reserve(std::min(tokens.size(), max_len));
    for (const auto& t : tokens) {
        if (seq.ids.size() >= max_len) break;
        seq.ids.push_back(hash_token(t, vocab_size));
    }
    return seq;
}

}  // namespace metaclone
