#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cqf {

/// Classifies failures so callers (CLI exit codes, HTTP statuses) can map them
/// without parsing message text.
enum class ErrorKind {
    syntax,         ///< malformed input text
    unknown,        ///< reference to an id that does not exist
    type_mismatch,  ///< head/tail typing violation
    invalid,        ///< value violates a structural invariant
    out_of_range,   ///< index outside a listing
    illegal_move,   ///< navigation move not offered at this node
    no_path,        ///< two points cannot be connected
    collision,      ///< identifier collision in a derived mapping
    unsupported,    ///< construct has no lowering
    state,          ///< operation not possible in the current session state
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure with a 1-based source position.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error(ErrorKind::syntax, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// String-backed identifier distinguished by tag type.
template <typename Tag>
class Id {
public:
    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {}
    explicit Id(const char* value) : value_(value) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend bool operator==(const Id&, const Id&) = default;
    friend auto operator<=>(const Id&, const Id&) = default;

private:
    std::string value_;
};

struct ObjectTypeTag {};
struct FactTypeTag {};
using ObjectTypeId = Id<ObjectTypeTag>;
using FactTypeId = Id<FactTypeTag>;

/// A violated invariant, reported as data rather than thrown.
struct Violation {
    std::string message;
    friend bool operator==(const Violation&, const Violation&) = default;
};

namespace text {

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string capitalize_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

inline std::string_view trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

/// Splits an identifier such as "NrOfVotes" or "nr_of_votes" into words
/// ("Nr Of Votes", "nr of votes"). Digit runs stay attached to the preceding word.
inline std::string words_of_identifier(std::string_view id) {
    std::string out;
    for (std::size_t i = 0; i < id.size(); ++i) {
        const char c = id[i];
        if (c == '_' || c == '-') {
            if (!out.empty() && out.back() != ' ') out.push_back(' ');
            continue;
        }
        const bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
        if (upper && i > 0) {
            const char prev = id[i - 1];
            const bool prev_lower = std::islower(static_cast<unsigned char>(prev)) != 0 || std::isdigit(static_cast<unsigned char>(prev)) != 0;
            const bool next_lower = i + 1 < id.size() && std::islower(static_cast<unsigned char>(id[i + 1])) != 0;
            const bool prev_upper = std::isupper(static_cast<unsigned char>(prev)) != 0;
            if ((prev_lower || (prev_upper && next_lower)) && !out.empty() && out.back() != ' ') out.push_back(' ');
        }
        out.push_back(c);
    }
    return std::string(trim(out));
}

inline std::optional<long long> parse_integer(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    long long value = 0;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const std::string tmp(s);
        const double v = std::stod(tmp, &used);
        if (used != tmp.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Orders "FT2" before "FT10": digit runs compare numerically, everything else bytewise.
inline int natural_compare(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ei = i, ej = j;
            while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
            while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
            std::string_view ra = a.substr(i, ei - i), rb = b.substr(j, ej - j);
            while (ra.size() > 1 && ra.front() == '0') ra.remove_prefix(1);
            while (rb.size() > 1 && rb.front() == '0') rb.remove_prefix(1);
            if (ra.size() != rb.size()) return ra.size() < rb.size() ? -1 : 1;
            if (const int c = ra.compare(rb); c != 0) return c < 0 ? -1 : 1;
            i = ei;
            j = ej;
            continue;
        }
        if (a[i] != b[j]) return static_cast<unsigned char>(a[i]) < static_cast<unsigned char>(b[j]) ? -1 : 1;
        ++i;
        ++j;
    }
    if (i == a.size() && j == b.size()) return a.compare(b) < 0 ? -1 : (a.compare(b) > 0 ? 1 : 0);
    return i == a.size() ? -1 : 1;
}

}  // namespace text
}  // namespace cqf

template <typename Tag>
struct std::hash<cqf::Id<Tag>> {
    std::size_t operator()(const cqf::Id<Tag>& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
