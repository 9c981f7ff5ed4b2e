#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ckr {

using Token = std::string;
using TokenSeq = std::vector<Token>;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad content in otherwise parseable data (cycles, dangling references, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Whitespace tokenization with case folding. Input is assumed pre-segmented.
inline TokenSeq tokenize(const std::string& text) {
    TokenSeq out;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) out.push_back(to_lower(std::move(tok)));
    return out;
}

inline std::string join(const TokenSeq& toks, char sep = ' ') {
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out += sep;
        out += toks[i];
    }
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Splits a TSV line into fields. No escaping; tabs never occur inside fields.
inline std::vector<std::string> split_tsv(const std::string& line) {
    return split(line, '\t');
}

inline std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Reads a text file line by line, skipping blank lines and '#' comments.
// Calls fn(line_number, line).
template <typename Fn>
void for_each_data_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = strip(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        fn(lineno, line);
    }
}

}  // namespace ckr
