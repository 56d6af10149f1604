#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "strata/ctmc.hpp"
#include "strata/error.hpp"

namespace strata {

/// Twelve significant digits, "inf" for infinity.
inline std::string format_g12(double x) {
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

struct Line {
    std::size_t number;
    std::string text;
};

// Non-blank lines with '#' comments removed.
inline std::vector<Line> content_lines(std::istream& in) {
    std::vector<Line> out;
    std::string raw;
    for (std::size_t n = 1; std::getline(in, raw); ++n) {
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.erase(hash);
        if (raw.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        out.push_back({n, raw});
    }
    return out;
}

inline bool parse_index(const std::string& tok, std::size_t& out) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        return false;
    try {
        out = std::stoull(tok);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

inline std::vector<std::string> tokens(const std::string& text) {
    std::istringstream ss(text);
    std::vector<std::string> out;
    for (std::string t; ss >> t;)
        out.push_back(t);
    return out;
}

inline bool valid_proposition(const std::string& p) {
    if (p.empty() || !(std::isalpha(static_cast<unsigned char>(p[0])) || p[0] == '_'))
        return false;
    for (char ch : p)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'))
            return false;
    return true;
}

} // namespace detail

struct TraData {
    std::optional<std::size_t> num_states; // absent for an empty file
    std::vector<Transition> transitions;
};

/// "STATES n", "TRANSITIONS m", then m lines "src dst rate".
inline TraData parse_tra(std::istream& in, const std::string& name = "<tra>") {
    const auto lines = detail::content_lines(in);
    TraData out;
    if (lines.empty())
        return out;
    auto header = [&](std::size_t i, const char* key) {
        if (i >= lines.size())
            throw FormatError(name, 0, std::string("missing ") + key + " header");
        const auto t = detail::tokens(lines[i].text);
        std::size_t v = 0;
        if (t.size() != 2 || t[0] != key || !detail::parse_index(t[1], v))
            throw FormatError(name, lines[i].number, std::string("expected '") + key + " <count>'");
        return v;
    };
    const std::size_t n = header(0, "STATES");
    const std::size_t m = header(1, "TRANSITIONS");
    out.num_states = n;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto& line = lines[i];
        const auto t = detail::tokens(line.text);
        std::size_t src = 0;
        std::size_t dst = 0;
        if (t.size() != 3 || !detail::parse_index(t[0], src) || !detail::parse_index(t[1], dst))
            throw FormatError(name, line.number, "expected 'src dst rate'");
        double rate = 0.0;
        try {
            std::size_t used = 0;
            rate = std::stod(t[2], &used);
            if (used != t[2].size())
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw FormatError(name, line.number, "malformed rate '" + t[2] + "'");
        }
        if (!std::isfinite(rate) || rate < 0.0)
            throw FormatError(name, line.number, "rate must be finite and nonnegative");
        if (src >= n || dst >= n)
            throw FormatError(name, line.number, "state index outside 0.." + std::to_string(n ? n - 1 : 0));
        if (!seen.emplace(src, dst).second)
            throw FormatError(name, line.number,
                              "duplicate transition " + std::to_string(src) + " -> " + std::to_string(dst));
        out.transitions.push_back({static_cast<State>(src), static_cast<State>(dst), rate});
    }
    if (out.transitions.size() != m)
        throw FormatError(name, 0,
                          "header announces " + std::to_string(m) + " transitions, found " +
                              std::to_string(out.transitions.size()));
    return out;
}

/// Lines "idx: p1 p2 ...". Returns (state, proposition) pairs in file order.
inline std::vector<std::pair<std::size_t, std::string>> parse_lab(std::istream& in, std::optional<std::size_t> n,
                                                                  const std::string& name = "<lab>") {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (const auto& line : detail::content_lines(in)) {
        const auto colon = line.text.find(':');
        if (colon == std::string::npos)
            throw FormatError(name, line.number, "expected 'idx: prop ...'");
        const auto head = detail::tokens(line.text.substr(0, colon));
        std::size_t idx = 0;
        if (head.size() != 1 || !detail::parse_index(head[0], idx))
            throw FormatError(name, line.number, "malformed state index");
        if (n && idx >= *n)
            throw FormatError(name, line.number, "label for state " + std::to_string(idx) + " outside 0.." +
                                                     std::to_string(*n ? *n - 1 : 0));
        for (const auto& p : detail::tokens(line.text.substr(colon + 1))) {
            if (!detail::valid_proposition(p))
                throw FormatError(name, line.number, "invalid proposition name '" + p + "'");
            out.emplace_back(idx, p);
        }
        if (detail::tokens(line.text.substr(colon + 1)).empty())
            out.emplace_back(idx, std::string());
    }
    return out;
}

/// Builds a chain from .tra and .lab streams. An empty transition file yields an
/// all-absorbing chain sized by the largest labeled index.
inline Ctmc read_model(std::istream& tra, std::istream& lab, const std::string& tra_name = "<tra>",
                       const std::string& lab_name = "<lab>") {
    auto t = parse_tra(tra, tra_name);
    const auto l = parse_lab(lab, t.num_states, lab_name);
    std::size_t n = 0;
    if (t.num_states) {
        n = *t.num_states;
    } else {
        for (const auto& [idx, p] : l)
            n = std::max(n, idx + 1);
    }
    if (n == 0)
        throw FormatError(tra_name, 0, "model has no states");
    Labeling labels(n);
    for (const auto& [idx, p] : l)
        if (!p.empty())
            labels.add(static_cast<State>(idx), p);
    return Ctmc(n, std::move(t.transitions), std::move(labels));
}

inline Ctmc load_model(const std::string& tra_path, const std::string& lab_path) {
    std::ifstream tra(tra_path);
    if (!tra)
        throw IoError("cannot open " + tra_path);
    std::ifstream lab(lab_path);
    if (!lab)
        throw IoError("cannot open " + lab_path);
    return read_model(tra, lab, tra_path, lab_path);
}

inline void write_tra(std::ostream& out, const Ctmc& c) {
    out << "STATES " << c.num_states() << "\n";
    out << "TRANSITIONS " << c.num_transitions() << "\n";
    for (State s = 0; s < c.num_states(); ++s)
        for (const auto& e : c.row(s))
            out << s << " " << e.target << " " << format_g12(e.value) << "\n";
}

/// One line per state that carries labels, names sorted so that a reloaded file
/// writes back identically.
inline void write_lab(std::ostream& out, const Ctmc& c) {
    const auto& l = c.labels();
    for (State s = 0; s < c.num_states(); ++s) {
        auto names = l.names_of(s);
        std::sort(names.begin(), names.end());
        if (names.empty())
            continue;
        out << s << ":";
        for (const auto& p : names)
            out << " " << p;
        out << "\n";
    }
}

} // namespace strata
