#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "strata/csl.hpp"
#include "strata/ctmc.hpp"
#include "strata/error.hpp"
#include "strata/product.hpp"
#include "strata/until.hpp"

namespace strata {

enum class VerdictPolicy {
    Strict,     // an unresolved comparison is an error
    ClosedWorld // an unresolved comparison counts as not satisfied
};

struct CheckOptions {
    double epsilon = 1e-6;
    double margin = 0.0;
    VerdictPolicy policy = VerdictPolicy::Strict;
};

struct StateProbability {
    double probability = 0.0;
    double error = 0.0;
};

struct IndeterminateVerdicts {
    std::string formula;
    std::vector<State> states;
};

struct CheckResult {
    StateSet sat;
    /// Per-state probabilities of the outermost probabilistic subformula, if any.
    std::optional<std::vector<StateProbability>> probs;
    std::string probs_formula;
    std::size_t product_states = 0;
    std::size_t product_transitions = 0;
    /// Comparisons the error bound could not settle (only filled under ClosedWorld).
    std::vector<IndeterminateVerdicts> indeterminate;

    bool holds(State s) const { return sat.at(s); }

    std::vector<State> states() const {
        std::vector<State> out;
        for (State s = 0; s < sat.size(); ++s)
            if (sat[s])
                out.push_back(s);
        return out;
    }
};

class IndeterminateError : public Error {
  public:
    IndeterminateError(std::string formula, std::vector<State> states)
        : Error(message(formula, states)), formula_(std::move(formula)), states_(std::move(states)) {}

    const std::string& formula() const noexcept { return formula_; }
    const std::vector<State>& states() const noexcept { return states_; }

  private:
    static std::string message(const std::string& formula, const std::vector<State>& states) {
        std::string m = "cannot decide " + formula + " within the error bound in state";
        m += states.size() == 1 ? "" : "s";
        for (std::size_t i = 0; i < states.size(); ++i)
            m += (i ? ", " : " ") + std::to_string(states[i]);
        return m;
    }

    std::string formula_;
    std::vector<State> states_;
};

enum class Verdict { Satisfied, Violated, Indeterminate };

/// Compares the interval [v - e - margin, v + e + margin] against the bound.
inline Verdict decide(double v, double e, Comparator cmp, double p, double margin = 0.0) {
    const double lo = v - e - margin;
    const double hi = v + e + margin;
    bool yes = false;
    bool no = false;
    switch (cmp) {
    case Comparator::GreaterEqual:
        yes = lo >= p;
        no = hi < p;
        break;
    case Comparator::Greater:
        yes = lo > p;
        no = hi <= p;
        break;
    case Comparator::LessEqual:
        yes = hi <= p;
        no = lo > p;
        break;
    case Comparator::Less:
        yes = hi < p;
        no = lo >= p;
        break;
    }
    return yes ? Verdict::Satisfied : no ? Verdict::Violated : Verdict::Indeterminate;
}

namespace detail {

class Checker {
  public:
    Checker(const Ctmc& c, const CheckOptions& opt, CheckResult& result) : c_(c), opt_(opt), result_(result) {}

    void mark_outermost(const StateFormula& f) { outermost_ = find_first_prob(f); }

    StateSet sat(const StateFormula& f) {
        using K = StateFormula::Kind;
        const std::size_t n = c_.num_states();
        switch (f.kind()) {
        case K::True: return StateSet(n, true);
        case K::Atom: return c_.labels().states_with(f.name());
        case K::Not: {
            auto s = sat(f.child());
            s.flip();
            return s;
        }
        case K::And: {
            auto l = sat(f.lhs());
            const auto r = sat(f.rhs());
            for (State s = 0; s < n; ++s)
                l[s] = l[s] && r[s];
            return l;
        }
        case K::Prob: return prob(f);
        }
        return StateSet(n, false);
    }

  private:
    static const PathFormula* find_first_prob(const StateFormula& f) {
        using K = StateFormula::Kind;
        switch (f.kind()) {
        case K::True:
        case K::Atom: return nullptr;
        case K::Not: return find_first_prob(f.child());
        case K::And: {
            if (auto p = find_first_prob(f.lhs()))
                return p;
            return find_first_prob(f.rhs());
        }
        case K::Prob: return &f.path();
        }
        return nullptr;
    }

    StateSet prob(const StateFormula& f) {
        const std::size_t n = c_.num_states();
        const auto& phi = f.path();
        std::vector<StateSet> sets;
        for (const auto& op : phi.operands)
            sets.push_back(sat(op));
        const auto letters = letters_from_sets(sets, n);
        PathProbability size;
        const auto values = until_values(c_, letters, phi.k(), phi.intervals, StateSet(n, true), opt_.epsilon, &size);

        StateSet out(n, false);
        std::vector<State> unresolved;
        for (State s = 0; s < n; ++s) {
            const auto v = decide(values.value[s], values.error[s], f.comparator(), f.bound(), opt_.margin);
            if (v == Verdict::Satisfied)
                out[s] = true;
            else if (v == Verdict::Indeterminate)
                unresolved.push_back(s);
        }
        if (!unresolved.empty()) {
            if (opt_.policy == VerdictPolicy::Strict)
                throw IndeterminateError(f.str(), unresolved);
            result_.indeterminate.push_back({f.str(), unresolved});
        }
        if (&phi == outermost_) {
            std::vector<StateProbability> probs(n);
            for (State s = 0; s < n; ++s)
                probs[s] = {values.value[s], values.error[s]};
            result_.probs = std::move(probs);
            result_.probs_formula = f.str();
            result_.product_states = size.product_states;
            result_.product_transitions = size.product_transitions;
        }
        return out;
    }

    const Ctmc& c_;
    const CheckOptions& opt_;
    CheckResult& result_;
    const PathFormula* outermost_ = nullptr;
};

} // namespace detail

/// Satisfaction set of a CSL state formula. Path formulas are normalized first: each
/// until chain is made well formed and its intervals taken as [a,b), with the open
/// lower bound at 0 turned into a state guard. Each probability bound is compared with
/// a per-state error below epsilon.
inline CheckResult check(const Ctmc& c, const StateFormula& formula, const CheckOptions& opt = {}) {
    detail::check_epsilon(opt.epsilon);
    if (!(opt.margin >= 0.0))
        throw ParameterError("decision margin must be nonnegative");
    const auto normalized = normalize(formula);
    CheckResult result;
    detail::Checker checker(c, opt, result);
    checker.mark_outermost(normalized);
    result.sat = checker.sat(normalized);
    return result;
}

/// Probability of a path formula with arbitrary state-formula operands, from every
/// state; operands are checked first.
inline Evaluation path_probabilities(const Ctmc& c, const PathFormula& phi, const CheckOptions& opt = {},
                                     PathProbability* product = nullptr) {
    const std::size_t n = c.num_states();
    std::vector<StateSet> sets;
    for (const auto& op : phi.operands)
        sets.push_back(check(c, op, opt).sat);
    const auto letters = letters_from_sets(sets, n);
    return until_values(c, letters, phi.k(), phi.intervals, StateSet(n, true), opt.epsilon, product);
}

} // namespace strata
