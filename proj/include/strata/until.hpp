#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "strata/automaton.hpp"
#include "strata/csl.hpp"
#include "strata/ctmc.hpp"
#include "strata/error.hpp"
#include "strata/product.hpp"
#include "strata/transient.hpp"

namespace strata {

struct PathProbability {
    double probability = 0.0;
    double error = 0.0;
    std::size_t product_states = 0;
    std::size_t product_transitions = 0;
};

namespace detail {

inline std::vector<Interval> shift_all(std::span<const Interval> iv, double x) {
    std::vector<Interval> out;
    out.reserve(iv.size());
    for (const auto& i : iv)
        out.push_back(interval_minus(i, x));
    return out;
}

inline StateSet states_where(std::span<const Letter> letters, Letter mask, bool present) {
    StateSet out(letters.size());
    for (std::size_t s = 0; s < letters.size(); ++s)
        out[s] = ((letters[s] & mask) != 0) == present;
    return out;
}

struct UntilEvaluator {
    double stage_epsilon;
    std::size_t stage_limit;

    // Values of the chain f_1 U^{I_1} ... f_k from every state; only states in
    // `needed` are guaranteed meaningful. Intervals are well formed; endpoint
    // closedness is only consulted at touching bounds and at open lower ends at 0.
    Evaluation run(const Ctmc& c, std::span<const Letter> letters, std::size_t k, std::span<const Interval> iv,
                   const StateSet& needed, std::size_t stages) const {
        if (stages > stage_limit)
            throw InternalError("until recursion exceeded " + std::to_string(stage_limit) + " stages");
        if (!is_stratified(c, letters, k))
            return via_product(c, letters, k, iv, needed, stages);

        const std::size_t n = c.num_states();
        // An open lower bound at 0 becomes a guard on the first state (see open_zero_guard).
        if (const auto m = open_zero_guard({iv.begin(), iv.end()})) {
            std::vector<Interval> closed(iv.begin(), iv.end());
            for (auto& i : closed)
                if (i.lo == 0.0)
                    i.lo_closed = true;
            const Letter guard = letter_range(m->first, m->last);
            StateSet todo = needed;
            for (State s = 0; s < n; ++s)
                todo[s] = todo[s] && (letters[s] & guard);
            auto r = run(c, letters, k, closed, todo, stages);
            for (State s = 0; s < n; ++s)
                if (!(letters[s] & guard)) {
                    r.value[s] = 0.0;
                    r.error[s] = 0.0;
                }
            return r;
        }
        auto a = [&](std::size_t i) { return iv[i - 1].lo; };
        auto b = [&](std::size_t i) { return iv[i - 1].hi; };

        if (a(1) > 0.0) {
            const Letter f1 = letter_bit(1);
            return stage(c, letters, k, iv, f1, f1, a(1), stages);
        }
        std::size_t j = 2;
        while (j < k && a(j) == 0.0)
            ++j;
        if (j < k && a(j) < b(1)) {
            const Letter upto = letter_range(1, j);
            return stage(c, letters, k, iv, upto, upto, a(j), stages);
        }

        // b_1 <= a_j, with a_k taken as infinite.
        std::size_t jp = 2;
        while (jp < j && b(jp) == b(1))
            ++jp;
        const Letter fk = letter_bit(k);
        StateSet absorb = states_where(letters, letter_range(1, j), false);
        if (j == k)
            for (State s = 0; s < n; ++s)
                if (letters[s] & fk)
                    absorb[s] = true;
        const Ctmc held = make_absorbing(c, absorb);

        if (std::isinf(b(1))) {
            if (j != k || jp != k)
                throw InternalError("unbounded first interval in a chain that is not well formed");
            return reach_probabilities(held, states_where(letters, fk, true));
        }

        std::vector<double> w(n, 0.0);
        std::vector<double> werr(n, 0.0);
        StateSet mask = states_where(letters, letter_range(jp, j), true);
        if (j < k && a(j) == b(1) && iv[j - 1].lo_closed) {
            // Touching bound: a path still in a phase q in r..min(j'-1, j) whose
            // interval closes at b_1 may pass at that instant into a phase p in
            // max(j+1, j')..l, all intervals in between containing b_1. With point
            // intervals among I_j..I_{j'-1} this is the only way to continue.
            std::size_t r = jp;
            while (r > 1 && iv[r - 2].hi_closed)
                --r;
            std::size_t last = j;
            while (last < k && iv[last - 1].lo == b(1) && iv[last - 1].lo_closed)
                ++last;
            const Letter before = letter_range(r, std::min(jp - 1, j));
            const Letter after = letter_range(std::max(j + 1, jp), last);
            if (r < jp)
                for (State s = 0; s < n; ++s)
                    if ((letters[s] & before) && (letters[s] & after))
                        mask[s] = true;
        }
        if (j == k)
            for (State s = 0; s < n; ++s)
                if (letters[s] & fk) {
                    mask[s] = false;
                    w[s] = 1.0;
                }
        if (jp < k) {
            const Ctmc restrat = make_absorbing(c, states_where(letters, letter_range(jp, k - 1), false));
            std::vector<Letter> shifted(n);
            for (State s = 0; s < n; ++s)
                shifted[s] = letters[s] >> (jp - 1);
            const auto rest = shift_all(iv.subspan(jp - 1), b(1));
            const auto next = run(restrat, shifted, k - jp + 1, rest, mask, stages + 1);
            for (State s = 0; s < n; ++s)
                if (mask[s]) {
                    w[s] = next.value[s];
                    werr[s] = next.error[s];
                }
        }
        return backward_transient(held, w, werr, b(1), stage_epsilon);
    }

    // Transient to time x on the chain with states outside `hold` absorbing, masked by
    // `keep`, followed by the same chain shifted by x.
    Evaluation stage(const Ctmc& c, std::span<const Letter> letters, std::size_t k, std::span<const Interval> iv,
                     Letter hold, Letter keep, double x, std::size_t stages) const {
        const std::size_t n = c.num_states();
        const StateSet mask = states_where(letters, keep, true);
        const auto shifted = shift_all(iv, x);
        const auto next = run(c, letters, k, shifted, mask, stages + 1);
        std::vector<double> w(n, 0.0);
        std::vector<double> werr(n, 0.0);
        for (State s = 0; s < n; ++s)
            if (mask[s]) {
                w[s] = next.value[s];
                werr[s] = next.error[s];
            }
        const Ctmc held = make_absorbing(c, states_where(letters, hold, false));
        return backward_transient(held, w, werr, x, stage_epsilon);
    }

    // The chain at hand is not stratified for this suffix: evaluate on its product.
    Evaluation via_product(const Ctmc& c, std::span<const Letter> letters, std::size_t k,
                           std::span<const Interval> iv, const StateSet& needed, std::size_t stages) const {
        std::vector<State> starts;
        for (State s = 0; s < c.num_states(); ++s)
            if (needed[s])
                starts.push_back(s);
        const std::size_t n = c.num_states();
        Evaluation out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
        if (starts.empty())
            return out;
        const auto p = build_product(c, letters, k, starts);
        if (!is_stratified(p.chain, p.letters, k))
            throw InternalError("product is not stratified");
        StateSet entry_set(p.num_states(), false);
        for (State e : p.entry)
            entry_set[e] = true;
        const auto ev = run(p.chain, p.letters, k, iv, entry_set, stages);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            out.value[starts[i]] = ev.value[p.entry[i]];
            out.error[starts[i]] = ev.error[p.entry[i]];
        }
        return out;
    }
};

inline std::size_t stage_bound(std::size_t k) { return 2 * k - 1; }

inline void require_closed_open(std::span<const Interval> iv) {
    for (const auto& i : iv)
        if (!i.is_closed_open())
            throw ContractError("interval " + i.str() + " is not of the form [a,b)");
}

} // namespace detail

/// Values of f_1 U^{I_1} ... f_k from each state of a chain, where the letters give the
/// f_i per state. Any intervals are accepted: the chain is made well formed, open lower
/// bounds at 0 become a guard on the state at time 0, and other endpoints go through
/// normalize_endpoints. Only states in `needed` get values; the rest are 0. Total
/// error <= epsilon.
/// When `product` is given it receives the size of the product that was evaluated.
inline Evaluation until_values(const Ctmc& c, std::span<const Letter> letters, std::size_t k,
                               std::span<const Interval> intervals, const StateSet& needed, double epsilon,
                               PathProbability* product = nullptr) {
    check_chain_length(k);
    detail::check_epsilon(epsilon);
    if (intervals.size() + 1 != k)
        throw ParameterError("chain of length " + std::to_string(k) + " needs " + std::to_string(k - 1) +
                             " intervals");
    const std::size_t n = c.num_states();
    if (letters.size() != n || needed.size() != n)
        throw IndexError("vector size mismatch");
    Evaluation out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

    std::vector<StateFormula> ops(k, StateFormula::truth());
    const auto wf = well_form(PathFormula(ops, {intervals.begin(), intervals.end()}));
    if (!wf)
        return out;
    const auto iv = normalize_endpoints(wf->intervals);
    const StateSet& todo = needed;

    std::vector<State> starts;
    for (State s = 0; s < n; ++s)
        if (todo[s])
            starts.push_back(s);
    if (starts.empty())
        return out;
    const auto p = build_product(c, letters, k, starts);
    if (product) {
        product->product_states = p.num_states();
        product->product_transitions = p.chain.num_transitions();
    }
    StateSet entry_set(p.num_states(), false);
    for (State e : p.entry)
        entry_set[e] = true;
    const detail::UntilEvaluator ev{epsilon / static_cast<double>(detail::stage_bound(k)), detail::stage_bound(k)};
    const auto r = ev.run(p.chain, p.letters, k, iv, entry_set, 1);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        out.value[starts[i]] = std::clamp(r.value[p.entry[i]], 0.0, 1.0);
        out.error[starts[i]] = r.error[p.entry[i]];
    }
    return out;
}

/// Pr_alpha(phi) on a chain that is already stratified for phi, with [a,b) intervals.
inline PathProbability prob_until(const Ctmc& c, const Distribution& alpha, const PathFormula& phi,
                                  double epsilon) {
    detail::check_epsilon(epsilon);
    detail::validate_initial(alpha, c.num_states());
    const auto letters = letters_of(c, phi);
    detail::require_closed_open(phi.intervals);
    const auto strat = is_stratified(c, letters, phi.k());
    if (!strat)
        throw ContractError("chain is not stratified for the formula: transition " +
                            std::to_string(strat.witness->from) + " -> " + std::to_string(strat.witness->to));
    PathProbability out;
    out.product_states = c.num_states();
    out.product_transitions = c.num_transitions();
    const auto wf = well_form(phi);
    if (!wf)
        return out;
    StateSet needed(c.num_states(), false);
    for (State s = 0; s < c.num_states(); ++s)
        needed[s] = alpha[s] > 0.0;
    const std::size_t k = phi.k();
    const detail::UntilEvaluator ev{epsilon / static_cast<double>(detail::stage_bound(k)), detail::stage_bound(k)};
    const auto r = ev.run(c, letters, k, wf->intervals, needed, 1);
    for (State s = 0; s < c.num_states(); ++s)
        if (needed[s]) {
            out.probability += alpha[s] * std::clamp(r.value[s], 0.0, 1.0);
            out.error += alpha[s] * r.error[s];
        }
    out.probability = std::clamp(out.probability, 0.0, 1.0);
    return out;
}

/// Pr_alpha(phi) on an arbitrary chain through its product with the formula automaton.
/// Operands must be atomic; intervals are normalized as in until_values.
inline PathProbability prob_path(const Ctmc& c, const Distribution& alpha, const PathFormula& phi,
                                 double epsilon) {
    detail::validate_initial(alpha, c.num_states());
    const auto letters = letters_of(c, phi);
    StateSet needed(c.num_states(), false);
    std::vector<State> starts;
    for (State s = 0; s < c.num_states(); ++s)
        if (alpha[s] > 0.0) {
            needed[s] = true;
            starts.push_back(s);
        }
    PathProbability out;
    const auto r = until_values(c, letters, phi.k(), phi.intervals, needed, epsilon, &out);
    for (State s : starts) {
        out.probability += alpha[s] * r.value[s];
        out.error += alpha[s] * r.error[s];
    }
    out.probability = std::clamp(out.probability, 0.0, 1.0);
    return out;
}

inline PathProbability prob_path(const Ctmc& c, State s, const PathFormula& phi, double epsilon) {
    if (s >= c.num_states())
        throw IndexError("state " + std::to_string(s) + " out of range");
    return prob_path(c, point_mass(c.num_states(), s), phi, epsilon);
}

} // namespace strata
