#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strata/automaton.hpp"
#include "strata/csl.hpp"
#include "strata/ctmc.hpp"
#include "strata/error.hpp"

namespace strata {

/// Smallest i with f_i in the letter, if any.
inline std::optional<std::size_t> f_min(Letter letter) {
    if (letter == 0)
        return std::nullopt;
    return static_cast<std::size_t>(std::countr_zero(letter)) + 1;
}

/// Per-state letters of a chain whose operands are atomic (true or a proposition).
inline std::vector<Letter> letters_of(const Ctmc& c, const PathFormula& phi) {
    check_chain_length(phi.k());
    std::vector<Letter> out(c.num_states(), 0);
    for (std::size_t i = 0; i < phi.k(); ++i) {
        const auto& op = phi.operands[i];
        if (op.kind() == StateFormula::Kind::True) {
            for (auto& l : out)
                l |= letter_bit(i + 1);
        } else if (op.kind() == StateFormula::Kind::Atom) {
            const auto id = c.labels().find(op.name());
            if (!id)
                continue;
            for (State s = 0; s < c.num_states(); ++s)
                for (auto x : c.labels().ids_of(s))
                    if (x == *id)
                        out[s] |= letter_bit(i + 1);
        } else {
            throw ContractError("operand " + std::to_string(i + 1) + " (" + op.str() + ") is not atomic");
        }
    }
    return out;
}

/// Letters from explicit satisfaction sets, one per operand.
inline std::vector<Letter> letters_from_sets(std::span<const StateSet> sets, std::size_t num_states) {
    check_chain_length(sets.size());
    std::vector<Letter> out(num_states, 0);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].size() != num_states)
            throw IndexError("satisfaction set size mismatch");
        for (State s = 0; s < num_states; ++s)
            if (sets[i][s])
                out[s] |= letter_bit(i + 1);
    }
    return out;
}

/// One offending transition; for a non-absorbing bad or good state it is any of
/// its outgoing transitions.
struct StratificationWitness {
    State from;
    State to;
    friend bool operator==(const StratificationWitness&, const StratificationWitness&) = default;
};

struct StratificationResult {
    bool stratified = true;
    std::optional<StratificationWitness> witness;
    explicit operator bool() const { return stratified; }
};

/// States are scanned in index order; for each state the absorption condition is
/// checked before its outgoing transitions.
inline StratificationResult is_stratified(const Ctmc& c, std::span<const Letter> letters, std::size_t k) {
    if (letters.size() != c.num_states())
        throw IndexError("letter vector size mismatch");
    for (State s = 0; s < c.num_states(); ++s) {
        const auto fm = f_min(letters[s]);
        for (const auto& e : c.row(s)) {
            if (!fm || *fm >= k)
                return {false, StratificationWitness{s, e.target}};
            const auto ft = f_min(letters[e.target]);
            if (ft && *ft < *fm)
                return {false, StratificationWitness{s, e.target}};
        }
    }
    return {};
}

inline StratificationResult is_stratified(const Ctmc& c, const PathFormula& phi) {
    return is_stratified(c, letters_of(c, phi), phi.k());
}

/// Reachable part of the product of a chain with the formula automaton.
struct ProductCtmc {
    Ctmc chain;
    std::vector<State> origin;      // product state -> original state
    std::vector<AutState> tag;      // product state -> automaton state
    std::vector<Letter> letters;    // L' restricted to f_1..f_k
    std::vector<State> entry;       // i-th start state -> its product state
    std::size_t k = 0;

    std::size_t num_states() const { return chain.num_states(); }

    /// Phase index of a product state, none for the sink.
    std::optional<std::size_t> stratum(State p) const {
        if (tag.at(p).is_bottom())
            return std::nullopt;
        return tag[p].index();
    }

    /// Product state of (s, q), if reachable.
    std::optional<State> find(State s, AutState q) const {
        for (State p = 0; p < origin.size(); ++p)
            if (origin[p] == s && tag[p] == q)
                return p;
        return std::nullopt;
    }
};

namespace detail {

struct ProductBuilder {
    const Ctmc& c;
    std::span<const Letter> letters;
    std::size_t k;

    std::vector<State> index; // (s, q) -> product state, s * (k + 1) + q.tag
    std::vector<State> origin;
    std::vector<AutState> tag;

    State intern(State s, AutState q) {
        State& slot = index[static_cast<std::size_t>(s) * (k + 1) + q.tag];
        if (slot == kNoState) {
            slot = static_cast<State>(origin.size());
            origin.push_back(s);
            tag.push_back(q);
        }
        return slot;
    }
};

} // namespace detail

/// Builds the product from each start state s, entering at (s, delta(q_1, L(s))).
/// Pair (s, q_i) moves along every transition s -> s' to (s', delta(q_i, L(s'))) as long
/// as s satisfies one of f_i..f_{k-1}; the sink and q_k are absorbing. When
/// `named_labels` is set the product carries L(s) minus the names of f_1..f_{i-1}.
inline ProductCtmc build_product(const Ctmc& c, std::span<const Letter> letters, std::size_t k,
                                 std::span<const State> starts, const PathFormula* named_labels = nullptr,
                                 std::optional<Distribution> alpha = std::nullopt) {
    check_chain_length(k);
    if (letters.size() != c.num_states())
        throw IndexError("letter vector size mismatch");
    detail::ProductBuilder b{c, letters, k, {}, {}, {}};
    b.index.assign(c.num_states() * (k + 1), kNoState);
    ProductCtmc out;
    out.k = k;
    for (State s : starts) {
        if (s >= c.num_states())
            throw IndexError("start state " + std::to_string(s) + " out of range");
        out.entry.push_back(b.intern(s, initial_state(letters[s], k)));
    }
    std::vector<Transition> rates;
    rates.reserve(c.num_transitions());
    for (State p = 0; p < b.origin.size(); ++p) {
        const State s = b.origin[p];
        const AutState q = b.tag[p];
        if (q.is_bottom() || q.index() >= k)
            continue;
        if ((letters[s] & letter_range(q.index(), k - 1)) == 0)
            continue;
        for (const auto& e : c.row(s)) {
            const AutState next = delta(q, letters[e.target], k);
            const State target = b.intern(e.target, next);
            rates.push_back({p, target, e.value});
        }
    }
    const std::size_t n = b.origin.size();
    out.letters.resize(n);
    for (State p = 0; p < n; ++p)
        out.letters[p] = b.tag[p].is_bottom() ? 0 : letters[b.origin[p]] & letter_range(b.tag[p].index(), k);

    Labeling labels(n);
    if (named_labels) {
        const auto& src = c.labels();
        for (const auto& name : src.propositions())
            labels.intern(name);
        for (State p = 0; p < n; ++p) {
            if (b.tag[p].is_bottom())
                continue;
            for (const auto id : src.ids_of(b.origin[p])) {
                const auto& name = src.name(id);
                bool dropped = false;
                for (std::size_t i = 0; i + 1 < b.tag[p].index(); ++i) {
                    const auto& op = named_labels->operands[i];
                    if (op.kind() == StateFormula::Kind::Atom && op.name() == name)
                        dropped = true;
                }
                if (!dropped)
                    labels.add(p, name);
            }
        }
    }

    std::optional<Distribution> initial;
    if (alpha) {
        initial = Distribution(n, 0.0);
        for (std::size_t i = 0; i < starts.size(); ++i)
            (*initial)[out.entry[i]] += (*alpha)[starts[i]];
    } else if (starts.size() == 1) {
        initial = point_mass(n, out.entry[0]);
    }
    out.chain = Ctmc(n, std::move(rates), std::move(labels), std::move(initial));
    out.origin = std::move(b.origin);
    out.tag = std::move(b.tag);
    return out;
}

/// Product from a single state; operands must be atomic.
inline ProductCtmc build_product(const Ctmc& c, const PathFormula& phi, State start) {
    const auto letters = letters_of(c, phi);
    const State starts[] = {start};
    return build_product(c, letters, phi.k(), starts, &phi);
}

/// Product from every state in the support of alpha, with the lifted initial distribution.
inline ProductCtmc build_product(const Ctmc& c, const PathFormula& phi, const Distribution& alpha) {
    detail::validate_initial(alpha, c.num_states());
    const auto letters = letters_of(c, phi);
    std::vector<State> starts;
    for (State s = 0; s < c.num_states(); ++s)
        if (alpha[s] > 0.0)
            starts.push_back(s);
    return build_product(c, letters, phi.k(), starts, &phi, alpha);
}

/// Display name of a product state such as "s3q3" or "s3bot", using the
/// original state's index.
inline std::string product_state_name(const ProductCtmc& p, State x) {
    return "s" + std::to_string(p.origin.at(x)) + p.tag.at(x).str();
}

} // namespace strata
