#pragma once

#include <cctype>
#include <cmath>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "strata/csl.hpp"
#include "strata/error.hpp"

namespace strata {

namespace detail {

// Recursive descent over
//   state  := or
//   or     := and ("|" and)*
//   and    := unary ("&" unary)*
//   unary  := "!" unary | "true" | "false" | IDENT | "P" cmp NUM "(" path ")" | "(" state ")"
//   path   := state ("U" interval state)+ | ("F" | "<>") interval state | state
//   interval := ("[" | "(") NUM "," (NUM | "inf") ("]" | ")")
// U, F and P act as keywords only where the following token makes them one.
class Parser {
  public:
    explicit Parser(std::string_view text) : text_(text) {}

    StateFormula state_formula() {
        auto f = disjunction();
        expect_end();
        return f;
    }

    PathFormula path_formula() {
        skip_space();
        // A path may be wrapped in parentheses as a whole.
        const std::size_t save = pos_;
        if (peek() == '(') {
            ++pos_;
            try {
                auto p = path();
                expect(')');
                skip_space();
                if (pos_ == text_.size())
                    return p;
            } catch (const ParseError&) {
            }
            pos_ = save;
        }
        auto p = path();
        expect_end();
        return p;
    }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }
    [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const { throw ParseError(at, msg); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    char peek_after(std::size_t offset) const {
        std::size_t p = pos_ + offset;
        while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p])))
            ++p;
        return p < text_.size() ? text_[p] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            fail(std::string("expected '") + c + "'" + found());
    }

    std::string found() {
        skip_space();
        if (pos_ >= text_.size())
            return " but reached end of input";
        return std::string(" but found '") + text_[pos_] + "'";
    }

    void expect_end() {
        skip_space();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    // Identifier at the current position without consuming it.
    std::string_view peek_ident() {
        skip_space();
        std::size_t end = pos_;
        if (end < text_.size() && ident_start(text_[end])) {
            while (end < text_.size() && ident_char(text_[end]))
                ++end;
        }
        return text_.substr(pos_, end - pos_);
    }

    bool at_keyword(std::string_view word) {
        const auto id = peek_ident();
        if (id != word)
            return false;
        const char next = peek_after(word.size());
        if (word == "P")
            return next == '<' || next == '>';
        return next == '[' || next == '(';
    }

    bool at_until() { return at_keyword("U"); }

    bool at_eventually() {
        if (at_keyword("F"))
            return true;
        skip_space();
        return text_.substr(pos_, 2) == "<>";
    }

    double number() {
        skip_space();
        const std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' || text_[end] == 'e' ||
                text_[end] == 'E' ||
                ((text_[end] == '-' || text_[end] == '+') && end > start &&
                 (text_[end - 1] == 'e' || text_[end - 1] == 'E'))))
            ++end;
        if (end == start || (!std::isdigit(static_cast<unsigned char>(text_[start])) && text_[start] != '.'))
            fail("expected a number" + found());
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
        if (ec != std::errc() || ptr != text_.data() + end)
            fail_at(start, "malformed number '" + std::string(text_.substr(start, end - start)) + "'");
        pos_ = end;
        return value;
    }

    Comparator comparator() {
        skip_space();
        if (text_.substr(pos_, 2) == "<=") {
            pos_ += 2;
            return Comparator::LessEqual;
        }
        if (text_.substr(pos_, 2) == ">=") {
            pos_ += 2;
            return Comparator::GreaterEqual;
        }
        if (accept('<'))
            return Comparator::Less;
        if (accept('>'))
            return Comparator::Greater;
        fail("expected a comparator" + found());
    }

    Interval interval() {
        skip_space();
        const std::size_t start = pos_;
        bool lo_closed;
        if (accept('['))
            lo_closed = true;
        else if (accept('('))
            lo_closed = false;
        else
            fail("expected an interval" + found());
        const double lo = number();
        expect(',');
        double hi;
        if (peek_ident() == "inf") {
            pos_ += 3;
            hi = kInfinity;
        } else {
            hi = number();
        }
        bool hi_closed;
        if (accept(']'))
            hi_closed = true;
        else if (accept(')'))
            hi_closed = false;
        else
            fail("expected ']' or ')'" + found());
        if (hi < lo)
            fail_at(start, "empty interval: lower bound exceeds upper bound");
        if (std::isinf(hi) && hi_closed)
            fail_at(start, "an infinite upper bound must be open");
        try {
            return Interval::make(lo, hi, lo_closed, hi_closed);
        } catch (const ParameterError& e) {
            fail_at(start, e.what());
        }
    }

    StateFormula disjunction() {
        auto f = conjunction();
        while (accept('|'))
            f = StateFormula::disjunction(std::move(f), conjunction());
        return f;
    }

    StateFormula conjunction() {
        auto f = unary();
        while (accept('&'))
            f = StateFormula::conjunction(std::move(f), unary());
        return f;
    }

    StateFormula unary() {
        const char c = peek();
        if (c == '!') {
            ++pos_;
            return StateFormula::negation(unary());
        }
        if (c == '(') {
            ++pos_;
            auto f = disjunction();
            expect(')');
            return f;
        }
        if (at_keyword("P")) {
            ++pos_;
            const auto cmp = comparator();
            skip_space();
            const std::size_t at = pos_;
            const double p = number();
            if (!(p >= 0.0 && p <= 1.0))
                fail_at(at, "probability bound must lie in [0,1]");
            expect('(');
            auto phi = path();
            expect(')');
            return StateFormula::probability(cmp, p, std::move(phi));
        }
        const auto id = peek_ident();
        if (id.empty())
            fail("expected a state formula" + found());
        if (at_until() || at_eventually())
            fail("temporal operator outside a probability operator");
        pos_ += id.size();
        if (id == "true")
            return StateFormula::truth();
        if (id == "false")
            return StateFormula::negation(StateFormula::truth());
        return StateFormula::atom(std::string(id));
    }

    PathFormula path() {
        if (at_eventually()) {
            pos_ += text_.substr(pos_, 2) == "<>" ? 2 : 1;
            auto iv = interval();
            auto target = disjunction();
            return PathFormula({StateFormula::truth(), std::move(target)}, {iv});
        }
        std::vector<StateFormula> ops{disjunction()};
        std::vector<Interval> ivs;
        while (at_until()) {
            ++pos_;
            ivs.push_back(interval());
            ops.push_back(disjunction());
        }
        if (ivs.empty()) {
            // A bare state formula holds on a path iff it holds at time 0.
            ops.push_back(ops.front());
            ivs.push_back(Interval{});
        }
        return PathFormula(std::move(ops), std::move(ivs));
    }
};

} // namespace detail

/// Parses a CSL state formula.
inline StateFormula parse(std::string_view text) { return detail::Parser(text).state_formula(); }

/// Parses a path formula such as "f1 U[0,2) f2 U[1,3] f3", optionally in parentheses.
/// A probability formula "P~p (path)" is accepted too and yields its path.
inline PathFormula parse_path(std::string_view text) {
    try {
        const auto f = parse(text);
        if (f.kind() == StateFormula::Kind::Prob)
            return f.path();
    } catch (const ParseError&) {
    }
    return detail::Parser(text).path_formula();
}

} // namespace strata
