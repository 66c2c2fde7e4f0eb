#pragma once

// Minimal TOML reader covering the subset used by the shipped configs:
// [table] and [[array-of-tables]] headers, key = value with strings,
// integers, floats, booleans, and flat arrays. Parsed into nlohmann::json
// so the JSON and TOML config paths share one loader.

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace aoisim::toml {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Drops a trailing comment that is not inside a string literal.
inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::vector<std::string> split_path(const std::string& dotted, int line_no) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : dotted) {
        if (c == '.') {
            if (cur.empty())
                throw ParseError("toml: empty path segment at line " + std::to_string(line_no));
            parts.push_back(strip(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (strip(cur).empty())
        throw ParseError("toml: empty path segment at line " + std::to_string(line_no));
    parts.push_back(strip(cur));
    return parts;
}

inline nlohmann::json parse_scalar(const std::string& raw, int line_no) {
    const std::string text = strip(raw);
    if (text.empty()) throw ParseError("toml: missing value at line " + std::to_string(line_no));
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"')
            throw ParseError("toml: unterminated string at line " + std::to_string(line_no));
        std::string out;
        for (std::size_t i = 1; i + 1 < text.size(); ++i) {
            if (text[i] == '\\' && i + 2 < text.size()) {
                ++i;
                switch (text[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default:
                        throw ParseError("toml: unsupported escape at line " +
                                         std::to_string(line_no));
                }
            } else {
                out += text[i];
            }
        }
        return out;
    }
    if (text == "true") return true;
    if (text == "false") return false;
    // Number: integer when it survives a strict integer parse.
    try {
        std::size_t used = 0;
        if (text.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(text, &used);
            if (used == text.size()) return v;
        }
        const double d = std::stod(text, &used);
        if (used == text.size()) return d;
    } catch (const std::exception&) {
        // fall through
    }
    throw ParseError("toml: cannot parse value '" + text + "' at line " +
                     std::to_string(line_no));
}

inline nlohmann::json parse_value(const std::string& raw, int line_no) {
    const std::string text = strip(raw);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']')
            throw ParseError("toml: unterminated array at line " + std::to_string(line_no));
        nlohmann::json arr = nlohmann::json::array();
        std::string body = text.substr(1, text.size() - 2);
        std::string cur;
        bool in_string = false;
        int depth = 0;
        for (char c : body) {
            if (c == '"') in_string = !in_string;
            if (!in_string && c == '[') ++depth;
            if (!in_string && c == ']') --depth;
            if (c == ',' && !in_string && depth == 0) {
                if (!strip(cur).empty()) arr.push_back(parse_value(cur, line_no));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) arr.push_back(parse_value(cur, line_no));
        return arr;
    }
    return parse_scalar(text, line_no);
}

inline nlohmann::json* descend(nlohmann::json& root, const std::vector<std::string>& path) {
    nlohmann::json* node = &root;
    for (const auto& key : path) {
        if (node->is_array()) node = &node->back();
        node = &(*node)[key];
        if (node->is_array() && !node->empty()) {
            // array-of-tables: subsequent keys land in the latest element
        }
    }
    if (node->is_array()) node = &node->back();
    return node;
}

}  // namespace detail

inline nlohmann::json parse(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* current = &root;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = detail::strip(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            const bool array_table = line.size() > 1 && line[1] == '[';
            const std::size_t close = line.find(array_table ? "]]" : "]");
            if (close == std::string::npos)
                throw ParseError("toml: unterminated table header at line " +
                                 std::to_string(line_no));
            const auto path = detail::split_path(
                line.substr(array_table ? 2 : 1, close - (array_table ? 2 : 1)), line_no);
            nlohmann::json* node = &root;
            for (std::size_t i = 0; i < path.size(); ++i) {
                if (node->is_array()) node = &node->back();
                nlohmann::json& child = (*node)[path[i]];
                if (i + 1 == path.size() && array_table) {
                    if (!child.is_array()) child = nlohmann::json::array();
                    child.push_back(nlohmann::json::object());
                    node = &child.back();
                } else {
                    if (child.is_null()) child = nlohmann::json::object();
                    node = &child;
                    if (node->is_array()) node = &node->back();
                }
            }
            current = node;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("toml: expected key = value at line " + std::to_string(line_no));
        const auto path = detail::split_path(line.substr(0, eq), line_no);
        nlohmann::json* node = current;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            node = &(*node)[path[i]];
            if (node->is_array()) node = &node->back();
        }
        (*node)[path.back()] = detail::parse_value(line.substr(eq + 1), line_no);
    }
    return root;
}

}  // namespace aoisim::toml
