#pragma once

#include <compare>
#include <string>

namespace metaclone {

enum class Lang { Java, Cpp, Ruby, Other };

// Language tag. The corpus format names languages as free strings; the three
// first-class ones get enum values, anything else is carried verbatim.
struct Language {
    Lang kind = Lang::Other;
    std::string other;  // set only when kind == Other

    static Language java() { return {Lang::Java, {}}; }
    static Language cpp() { return {Lang::Cpp, {}}; }
    static Language ruby() { return {Lang::Ruby, {}}; }

    static Language parse(const std::string& name) {
        if (name == "Java" || name == "java") return java();
        if (name == "C++" || name == "Cpp" || name == "cpp") return cpp();
        if (name == "Ruby" || name == "ruby") return ruby();
        return {Lang::Other, name};
    }

    std::string str() const {
        switch (kind) {
            case Lang::Java: return "Java";
            case Lang::Cpp: return "C++";
            case Lang::Ruby: return "Ruby";
            case Lang::Other: return other;
        }
        return other;
    }

    friend auto operator<=>(const Language&, const Language&) = default;
};

}  // namespace metaclone
