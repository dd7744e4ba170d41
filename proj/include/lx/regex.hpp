#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lx {

// Validator regexes: literals, escapes, `.`, classes with ranges and
// negation, grouping, alternation, and the `? * + {m} {m,} {m,n}` quantifiers.
struct RegexNode {
    enum class Kind { Empty, Chars, Any, Concat, Alt, Repeat };
    Kind kind = Kind::Empty;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;  // Chars
    bool negated = false;                                         // Chars
    std::vector<RegexNode> children;
    int min = 0;
    int max = -1;  // -1 = unbounded
};

class Regex {
public:
    static std::optional<Regex> parse(const std::string& source, std::string* error = nullptr);

    // Anchored match over the whole string (Unicode code points).
    bool full_match(const std::string& s) const;
    // SMT-LIB2 regular expression term.
    std::string to_smt() const;

    const std::string& source() const { return source_; }
    const RegexNode& root() const { return root_; }

private:
    std::string source_;
    RegexNode root_;
};

std::string smt_string_literal(const std::string& utf8);

}  // namespace lx
