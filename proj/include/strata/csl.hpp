#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strata/error.hpp"

namespace strata {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Time interval on the nonnegative reals. `hi` may be +inf (then always open).
/// An Interval value may be empty; `Interval::make` rejects empty ones.
struct Interval {
    double lo = 0.0;
    double hi = kInfinity;
    bool lo_closed = true;
    bool hi_closed = false;

    /// Validating constructor: nonnegative finite `lo`, nonempty result.
    static Interval make(double lo, double hi, bool lo_closed = true, bool hi_closed = false) {
        if (!std::isfinite(lo) || lo < 0.0)
            throw ParameterError("interval lower bound must be finite and nonnegative");
        if (std::isnan(hi))
            throw ParameterError("interval upper bound is NaN");
        Interval i{lo, hi, lo_closed, hi_closed && std::isfinite(hi)};
        if (i.empty())
            throw ParameterError("empty interval " + i.str());
        return i;
    }

    /// Left-closed, right-open [lo, hi).
    static Interval closed_open(double lo, double hi) { return make(lo, hi, true, false); }

    bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
    bool is_point() const { return lo == hi && lo_closed && hi_closed; }
    bool is_closed_open() const { return lo_closed && !hi_closed; }
    bool bounded() const { return std::isfinite(hi); }

    bool contains(double t) const {
        const bool above = lo_closed ? t >= lo : t > lo;
        const bool below = hi_closed ? t <= hi : t < hi;
        return above && below;
    }

    std::string str() const;

    friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Comparator { Less, LessEqual, GreaterEqual, Greater };

inline const char* symbol(Comparator c) {
    switch (c) {
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::GreaterEqual: return ">=";
    case Comparator::Greater: return ">";
    }
    return "?";
}

inline bool is_lower_bound(Comparator c) { return c == Comparator::GreaterEqual || c == Comparator::Greater; }

inline bool compare(double value, Comparator c, double bound) {
    switch (c) {
    case Comparator::Less: return value < bound;
    case Comparator::LessEqual: return value <= bound;
    case Comparator::GreaterEqual: return value >= bound;
    case Comparator::Greater: return value > bound;
    }
    return false;
}

struct PathFormula;

/// CSL state formula. Cheap to copy: nodes are immutable and shared.
class StateFormula {
  public:
    enum class Kind { True, Atom, Not, And, Prob };

    static StateFormula truth();
    static StateFormula atom(std::string name);
    static StateFormula negation(StateFormula sub);
    static StateFormula conjunction(StateFormula lhs, StateFormula rhs);
    static StateFormula disjunction(StateFormula lhs, StateFormula rhs);
    static StateFormula probability(Comparator cmp, double bound, PathFormula path);

    Kind kind() const;
    bool is_atomic() const { return kind() == Kind::True || kind() == Kind::Atom; }

    const std::string& name() const;
    const StateFormula& child() const;
    const StateFormula& lhs() const;
    const StateFormula& rhs() const;
    Comparator comparator() const;
    double bound() const;
    const PathFormula& path() const;

    std::string str() const;

    friend bool operator==(const StateFormula& a, const StateFormula& b);

  private:
    struct Node;
    explicit StateFormula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    const Node& node() const;

    std::shared_ptr<const Node> node_;
};

/// Multiple-until path formula Phi_1 U^{I_1} Phi_2 ... Phi_k with k >= 2.
struct PathFormula {
    std::vector<StateFormula> operands;
    std::vector<Interval> intervals;

    PathFormula() = default;
    PathFormula(std::vector<StateFormula> ops, std::vector<Interval> ivs)
        : operands(std::move(ops)), intervals(std::move(ivs)) {
        if (operands.size() < 2)
            throw ParameterError("until chain needs at least two operands");
        if (intervals.size() + 1 != operands.size())
            throw ParameterError("until chain with " + std::to_string(operands.size()) + " operands needs " +
                                 std::to_string(operands.size() - 1) + " intervals");
    }

    std::size_t k() const { return operands.size(); }

    bool atomic_operands() const {
        for (const auto& op : operands)
            if (!op.is_atomic())
                return false;
        return true;
    }

    std::string str() const;

    friend bool operator==(const PathFormula& a, const PathFormula& b) {
        return a.operands == b.operands && a.intervals == b.intervals;
    }
};

struct StateFormula::Node {
    Kind kind = Kind::True;
    std::string name;
    std::vector<StateFormula> children;
    Comparator cmp = Comparator::GreaterEqual;
    double bound = 0.0;
    std::optional<PathFormula> path;
};

inline const StateFormula::Node& StateFormula::node() const { return *node_; }

inline StateFormula StateFormula::truth() {
    static const auto node = std::make_shared<const Node>();
    return StateFormula(node);
}

inline StateFormula StateFormula::atom(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Atom;
    n->name = std::move(name);
    return StateFormula(std::move(n));
}

inline StateFormula StateFormula::negation(StateFormula sub) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Not;
    n->children.push_back(std::move(sub));
    return StateFormula(std::move(n));
}

inline StateFormula StateFormula::conjunction(StateFormula lhs, StateFormula rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::And;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return StateFormula(std::move(n));
}

inline StateFormula StateFormula::disjunction(StateFormula lhs, StateFormula rhs) {
    return negation(conjunction(negation(std::move(lhs)), negation(std::move(rhs))));
}

inline StateFormula StateFormula::probability(Comparator cmp, double bound, PathFormula path) {
    if (!(bound >= 0.0 && bound <= 1.0))
        throw ParameterError("probability bound must lie in [0,1]");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Prob;
    n->cmp = cmp;
    n->bound = bound;
    n->path = std::move(path);
    return StateFormula(std::move(n));
}

inline StateFormula::Kind StateFormula::kind() const { return node().kind; }

inline const std::string& StateFormula::name() const {
    if (kind() != Kind::Atom)
        throw ContractError("name() on a non-atomic formula");
    return node().name;
}

inline const StateFormula& StateFormula::child() const {
    if (kind() != Kind::Not)
        throw ContractError("child() on a non-negation");
    return node().children[0];
}

inline const StateFormula& StateFormula::lhs() const {
    if (kind() != Kind::And)
        throw ContractError("lhs() on a non-conjunction");
    return node().children[0];
}

inline const StateFormula& StateFormula::rhs() const {
    if (kind() != Kind::And)
        throw ContractError("rhs() on a non-conjunction");
    return node().children[1];
}

inline Comparator StateFormula::comparator() const {
    if (kind() != Kind::Prob)
        throw ContractError("comparator() on a non-probabilistic formula");
    return node().cmp;
}

inline double StateFormula::bound() const {
    if (kind() != Kind::Prob)
        throw ContractError("bound() on a non-probabilistic formula");
    return node().bound;
}

inline const PathFormula& StateFormula::path() const {
    if (kind() != Kind::Prob)
        throw ContractError("path() on a non-probabilistic formula");
    return *node().path;
}

inline bool operator==(const StateFormula& a, const StateFormula& b) {
    if (a.node_ == b.node_)
        return true;
    if (a.kind() != b.kind())
        return false;
    switch (a.kind()) {
    case StateFormula::Kind::True: return true;
    case StateFormula::Kind::Atom: return a.name() == b.name();
    case StateFormula::Kind::Not: return a.child() == b.child();
    case StateFormula::Kind::And: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    case StateFormula::Kind::Prob:
        return a.comparator() == b.comparator() && a.bound() == b.bound() && a.path() == b.path();
    }
    return false;
}

namespace detail {

inline std::string format_number(double x) {
    if (std::isinf(x))
        return "inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return ec == std::errc() ? std::string(buf.data(), end) : std::to_string(x);
}

} // namespace detail

inline std::string Interval::str() const {
    return std::string(lo_closed ? "[" : "(") + detail::format_number(lo) + "," + detail::format_number(hi) +
           (hi_closed ? "]" : ")");
}

inline std::string PathFormula::str() const {
    std::string out;
    for (std::size_t i = 0; i < operands.size(); ++i) {
        if (i > 0)
            out += " U" + intervals[i - 1].str() + " ";
        const bool wrap = !operands[i].is_atomic() && operands[i].kind() != StateFormula::Kind::Not &&
                          operands[i].kind() != StateFormula::Kind::Prob;
        out += wrap ? "(" + operands[i].str() + ")" : operands[i].str();
    }
    return out;
}

inline std::string StateFormula::str() const {
    switch (kind()) {
    case Kind::True: return "true";
    case Kind::Atom: return name();
    case Kind::Not: {
        const auto inner = child().str();
        return child().kind() == Kind::And ? "!(" + inner + ")" : "!" + inner;
    }
    case Kind::And: {
        auto side = [](const StateFormula& f) { return f.str(); };
        return side(lhs()) + " & " + (rhs().kind() == Kind::And ? "(" + rhs().str() + ")" : side(rhs()));
    }
    case Kind::Prob:
        return "P" + std::string(symbol(comparator())) + detail::format_number(bound()) + " (" + path().str() + ")";
    }
    return "?";
}

/// I ⊖ x = { t - x | t in I, t >= x }. Requires x < sup I, or x = sup I with I right-closed.
inline Interval interval_minus(const Interval& i, double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw ParameterError("shift must be finite and nonnegative");
    if (!(x < i.hi || (x == i.hi && i.hi_closed)))
        throw ParameterError("cannot shift " + i.str() + " by " + detail::format_number(x));
    Interval out;
    if (x > i.lo) {
        out.lo = 0.0;
        out.lo_closed = true;
    } else {
        out.lo = i.lo - x;
        out.lo_closed = i.lo_closed;
    }
    out.hi = std::isfinite(i.hi) ? i.hi - x : kInfinity;
    out.hi_closed = i.hi_closed && std::isfinite(i.hi);
    return out;
}

/// Shifts every interval of the chain.
inline PathFormula formula_minus(const PathFormula& phi, double x) {
    PathFormula out = phi;
    for (auto& iv : out.intervals)
        iv = interval_minus(iv, x);
    return out;
}

/// Suffix chain starting at operand j (1-based, 1 <= j <= k-1).
inline PathFormula suffix_formula(const PathFormula& phi, std::size_t j) {
    if (j < 1 || j + 1 > phi.k())
        throw IndexError("suffix index " + std::to_string(j) + " outside 1.." + std::to_string(phi.k() - 1));
    return PathFormula({phi.operands.begin() + static_cast<std::ptrdiff_t>(j - 1), phi.operands.end()},
                       {phi.intervals.begin() + static_cast<std::ptrdiff_t>(j - 1), phi.intervals.end()});
}

/// Makes lower bounds nondecreasing and upper bounds nondecreasing by intersecting
/// every interval with the bounds implied by t_1 <= ... <= t_{k-1}. Returns nullopt
/// when some interval becomes empty (the formula is unsatisfiable).
inline std::optional<PathFormula> well_form(const PathFormula& phi) {
    PathFormula out = phi;
    auto& iv = out.intervals;
    const std::size_t n = iv.size();
    double lo = 0.0;
    bool lo_open = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (phi.intervals[i].lo > lo) {
            lo = phi.intervals[i].lo;
            lo_open = !phi.intervals[i].lo_closed;
        } else if (phi.intervals[i].lo == lo) {
            lo_open = lo_open || !phi.intervals[i].lo_closed;
        }
        iv[i].lo = lo;
        iv[i].lo_closed = !lo_open;
    }
    double hi = kInfinity;
    bool hi_closed = false;
    for (std::size_t i = n; i-- > 0;) {
        if (phi.intervals[i].hi < hi) {
            hi = phi.intervals[i].hi;
            hi_closed = phi.intervals[i].hi_closed;
        } else if (phi.intervals[i].hi == hi) {
            hi_closed = hi_closed && phi.intervals[i].hi_closed;
        }
        iv[i].hi = hi;
        iv[i].hi_closed = hi_closed && std::isfinite(hi);
    }
    for (const auto& i : iv)
        if (i.empty())
            return std::nullopt;
    return out;
}

/// Operand range first..last (1-based) for an open lower bound at 0: last is the first
/// interval with infimum 0 that excludes 0, first follows the leading [0,0] intervals,
/// whose phases are passed at time 0. A path can only satisfy the chain if its first
/// state satisfies one of Phi_first..Phi_last; with that guard every interval may be
/// taken left-closed.
struct ZeroGuard {
    std::size_t first = 1;
    std::size_t last = 1;
};

inline std::optional<ZeroGuard> open_zero_guard(const std::vector<Interval>& intervals) {
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].lo == 0.0 && !intervals[i].lo_closed) {
            std::size_t first = 1;
            while (first <= i && intervals[first - 1].is_point() && intervals[first - 1].lo == 0.0)
                ++first;
            return ZeroGuard{first, i + 1};
        }
    return std::nullopt;
}

/// Values c where a right-closed bound of some I_i meets a left-closed bound of a later
/// I_l. There a path can pass through several phases at the instant c, so the
/// closedness of the endpoints matters.
inline std::vector<double> touching_values(const std::vector<Interval>& iv) {
    std::vector<double> out;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (!iv[i].hi_closed)
            continue;
        for (std::size_t l = i + 1; l < iv.size(); ++l)
            if (iv[l].lo == iv[i].hi && iv[l].lo_closed) {
                out.push_back(iv[i].hi);
                break;
            }
    }
    return out;
}

/// Rewrites endpoints whose closedness does not change the probability. A path can
/// pass phases i..l at one instant c only if I_i..I_l meet in exactly {c}, which needs
/// a right-closed end c of I_i and a left-closed end c of I_l. So a right-closed end
/// becomes open unless it is a touching value, and an open positive left end becomes
/// closed unless an earlier interval still ends closed there. Open left ends at 0 are
/// left alone (see open_zero_guard); point intervals stay as they are.
inline std::vector<Interval> normalize_endpoints(const std::vector<Interval>& iv) {
    std::vector<Interval> out = iv;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& r = out[i];
        if (r.is_point() || !r.hi_closed)
            continue;
        bool touches = false;
        for (std::size_t l = i + 1; l < iv.size(); ++l)
            touches = touches || (iv[l].lo == r.hi && iv[l].lo_closed);
        r.hi_closed = touches;
    }
    for (std::size_t l = 0; l < out.size(); ++l) {
        auto& r = out[l];
        if (r.is_point() || r.lo_closed || r.lo == 0.0)
            continue;
        bool met = false;
        for (std::size_t i = 0; i < l; ++i)
            met = met || (out[i].hi == r.lo && out[i].hi_closed);
        r.lo_closed = !met;
    }
    return out;
}

inline StateFormula close_intervals(const StateFormula& f);

namespace detail {

inline StateFormula any_of(const std::vector<StateFormula>& ops, const ZeroGuard& g) {
    StateFormula f = ops[g.first - 1];
    for (std::size_t i = g.first; i < g.last; ++i)
        f = StateFormula::disjunction(f, ops[i]);
    return f;
}

} // namespace detail

/// Rewrites until intervals to [inf I, sup I) where that preserves the probability.
/// An open left endpoint at 0 moves into a state-level guard: P>=p(...) becomes
/// P>=p(closed) & (Phi_i|...|Phi_m) and P<=p(...) becomes P<=p(closed) | !(Phi_i|...|Phi_m).
/// Other endpoints follow normalize_endpoints, so a right-closed bound that touches a
/// later left-closed bound stays as it is.
inline StateFormula close_intervals(const StateFormula& f) {
    using K = StateFormula::Kind;
    switch (f.kind()) {
    case K::True:
    case K::Atom: return f;
    case K::Not: return StateFormula::negation(close_intervals(f.child()));
    case K::And: return StateFormula::conjunction(close_intervals(f.lhs()), close_intervals(f.rhs()));
    case K::Prob: {
        const auto& phi = f.path();
        std::vector<StateFormula> ops;
        for (const auto& op : phi.operands)
            ops.push_back(close_intervals(op));
        const auto guard = open_zero_guard(phi.intervals);
        auto ivs = normalize_endpoints(phi.intervals);
        for (auto& i : ivs)
            if (i.lo == 0.0)
                i.lo_closed = true;
        auto closed = StateFormula::probability(f.comparator(), f.bound(), PathFormula(ops, std::move(ivs)));
        if (!guard)
            return closed;
        const auto g = detail::any_of(ops, *guard);
        if (is_lower_bound(f.comparator()))
            return StateFormula::conjunction(closed, g);
        return StateFormula::disjunction(closed, StateFormula::negation(g));
    }
    }
    return f;
}

/// well_form on every path formula followed by close_intervals. Unsatisfiable chains
/// have probability 0, so P~p over them collapses to a constant.
inline StateFormula normalize(const StateFormula& f) {
    using K = StateFormula::Kind;
    switch (f.kind()) {
    case K::True:
    case K::Atom: return f;
    case K::Not: return StateFormula::negation(normalize(f.child()));
    case K::And: return StateFormula::conjunction(normalize(f.lhs()), normalize(f.rhs()));
    case K::Prob: {
        const auto wf = well_form(f.path());
        if (!wf) {
            const bool holds = compare(0.0, f.comparator(), f.bound());
            return holds ? StateFormula::truth() : StateFormula::negation(StateFormula::truth());
        }
        std::vector<StateFormula> ops;
        for (const auto& op : wf->operands)
            ops.push_back(normalize(op));
        return close_intervals(
            StateFormula::probability(f.comparator(), f.bound(), PathFormula(std::move(ops), wf->intervals)));
    }
    }
    return f;
}

} // namespace strata
