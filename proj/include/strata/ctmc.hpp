#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strata/error.hpp"

namespace strata {

using State = std::uint32_t;
inline constexpr State kNoState = std::numeric_limits<State>::max();

/// Membership flags indexed by state.
using StateSet = std::vector<bool>;

/// Dense probability vector indexed by state.
using Distribution = std::vector<double>;

inline constexpr double kDistributionTolerance = 1e-12;

inline Distribution point_mass(std::size_t num_states, State s) {
    if (s >= num_states)
        throw IndexError("state " + std::to_string(s) + " out of range");
    Distribution d(num_states, 0.0);
    d[s] = 1.0;
    return d;
}

inline double total_mass(std::span<const double> v) {
    double sum = 0.0, c = 0.0;
    for (double x : v) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

/// Atomic-proposition labeling. Proposition names are interned; each state stores
/// its proposition ids in insertion order so that dumps are reproducible.
class Labeling {
  public:
    Labeling() = default;
    explicit Labeling(std::size_t num_states) : per_state_(num_states) {}

    std::size_t num_states() const { return per_state_.size(); }

    std::uint32_t intern(std::string_view name) {
        auto it = ids_.find(std::string(name));
        if (it != ids_.end())
            return it->second;
        const auto id = static_cast<std::uint32_t>(names_.size());
        names_.emplace_back(name);
        ids_.emplace(names_.back(), id);
        return id;
    }

    std::optional<std::uint32_t> find(std::string_view name) const {
        auto it = ids_.find(std::string(name));
        if (it == ids_.end())
            return std::nullopt;
        return it->second;
    }

    void add(State s, std::string_view name) {
        check(s);
        const auto id = intern(name);
        auto& ids = per_state_[s];
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            ids.push_back(id);
    }

    bool has(State s, std::string_view name) const {
        check(s);
        const auto id = find(name);
        if (!id)
            return false;
        const auto& ids = per_state_[s];
        return std::find(ids.begin(), ids.end(), *id) != ids.end();
    }

    std::span<const std::uint32_t> ids_of(State s) const {
        check(s);
        return per_state_[s];
    }

    std::vector<std::string> names_of(State s) const {
        std::vector<std::string> out;
        for (auto id : ids_of(s))
            out.push_back(names_[id]);
        return out;
    }

    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    const std::vector<std::string>& propositions() const { return names_; }

    StateSet states_with(std::string_view name) const {
        StateSet out(num_states(), false);
        const auto id = find(name);
        if (!id)
            return out;
        for (std::size_t s = 0; s < per_state_.size(); ++s)
            out[s] = std::find(per_state_[s].begin(), per_state_[s].end(), *id) != per_state_[s].end();
        return out;
    }

    /// Labeling of the sub-chain whose state i is `new_to_old[i]`.
    Labeling restricted(std::span<const State> new_to_old) const {
        Labeling out(new_to_old.size());
        for (std::size_t i = 0; i < new_to_old.size(); ++i)
            for (auto id : ids_of(new_to_old[i]))
                out.add(static_cast<State>(i), names_[id]);
        return out;
    }

    friend bool operator==(const Labeling& a, const Labeling& b) {
        if (a.num_states() != b.num_states())
            return false;
        for (State s = 0; s < a.num_states(); ++s)
            if (a.names_of(s) != b.names_of(s))
                return false;
        return true;
    }

  private:
    void check(State s) const {
        if (s >= per_state_.size())
            throw IndexError("state " + std::to_string(s) + " out of range for labeling");
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::vector<std::vector<std::uint32_t>> per_state_;
};

struct Transition {
    State source;
    State target;
    double value;

    friend bool operator==(const Transition&, const Transition&) = default;
};

namespace detail {

/// Compressed-row sparse matrix with a fixed row count; entries sorted by column.
class SparseRows {
  public:
    struct Entry {
        State target;
        double value;
    };

    SparseRows() : row_start_(1, 0) {}

    SparseRows(std::size_t num_rows, std::vector<Transition> entries, const char* what)
        : num_rows_(num_rows), row_start_(num_rows + 1, 0) {
        for (const auto& t : entries) {
            if (t.source >= num_rows || t.target >= num_rows)
                throw IndexError(std::string(what) + " entry (" + std::to_string(t.source) + "," +
                                 std::to_string(t.target) + ") references a state outside 0.." +
                                 std::to_string(num_rows ? num_rows - 1 : 0));
            if (!std::isfinite(t.value) || t.value < 0.0)
                throw ModelError(std::string(what) + " entry (" + std::to_string(t.source) + "," +
                                 std::to_string(t.target) + ") must be finite and nonnegative");
        }
        std::sort(entries.begin(), entries.end(), [](const Transition& a, const Transition& b) {
            return a.source != b.source ? a.source < b.source : a.target < b.target;
        });
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].source == entries[i - 1].source && entries[i].target == entries[i - 1].target)
                throw ModelError("duplicate " + std::string(what) + " entry (" +
                                 std::to_string(entries[i].source) + "," + std::to_string(entries[i].target) + ")");
        entries_.reserve(entries.size());
        for (const auto& t : entries) {
            if (t.value == 0.0)
                continue;
            entries_.push_back({t.target, t.value});
            ++row_start_[t.source + 1];
        }
        for (std::size_t s = 0; s < num_rows; ++s)
            row_start_[s + 1] += row_start_[s];
    }

    std::size_t num_rows() const { return num_rows_; }
    std::size_t num_entries() const { return entries_.size(); }

    std::span<const Entry> row(State s) const {
        return {entries_.data() + row_start_[s], entries_.data() + row_start_[s + 1]};
    }

    double value(State s, State t) const {
        const auto r = row(s);
        auto it = std::lower_bound(r.begin(), r.end(), t, [](const Entry& e, State x) { return e.target < x; });
        return it != r.end() && it->target == t ? it->value : 0.0;
    }

    std::vector<Transition> triplets() const {
        std::vector<Transition> out;
        out.reserve(entries_.size());
        for (State s = 0; s < num_rows_; ++s)
            for (const auto& e : row(s))
                out.push_back({s, e.target, e.value});
        return out;
    }

  private:
    std::size_t num_rows_ = 0;
    std::vector<std::size_t> row_start_;
    std::vector<Entry> entries_;
};

inline void validate_initial(const Distribution& d, std::size_t n) {
    if (d.size() != n)
        throw ModelError("initial distribution has " + std::to_string(d.size()) + " entries, expected " +
                         std::to_string(n));
    for (double p : d)
        if (!(p >= 0.0 && p <= 1.0))
            throw ModelError("initial distribution entry outside [0,1]");
    if (std::abs(total_mass(d) - 1.0) > kDistributionTolerance)
        throw ModelError("initial distribution does not sum to 1");
}

} // namespace detail

/// Finite labeled continuous-time Markov chain with a sparse rate matrix.
/// Immutable once constructed.
class Ctmc {
  public:
    using Entry = detail::SparseRows::Entry;

    Ctmc() = default;

    /// Throws IndexError for out-of-range indices and ModelError for negative or
    /// non-finite rates, duplicate (source,target) pairs and malformed initial
    /// distributions. Zero-rate entries are dropped.
    Ctmc(std::size_t num_states, std::vector<Transition> rates, Labeling labels = {},
         std::optional<Distribution> initial = std::nullopt)
        : rates_(num_states, std::move(rates), "rate"),
          labels_(labels.num_states() == 0 ? Labeling(num_states) : std::move(labels)),
          initial_(std::move(initial)) {
        if (labels_.num_states() != num_states)
            throw ModelError("labeling covers " + std::to_string(labels_.num_states()) + " states, chain has " +
                             std::to_string(num_states));
        if (initial_)
            detail::validate_initial(*initial_, num_states);
        exit_.resize(num_states, 0.0);
        for (State s = 0; s < num_states; ++s)
            for (const auto& e : rates_.row(s))
                exit_[s] += e.value;
    }

    std::size_t num_states() const { return rates_.num_rows(); }
    std::size_t num_transitions() const { return rates_.num_entries(); }

    std::span<const Entry> row(State s) const {
        check(s);
        return rates_.row(s);
    }

    double rate(State s, State t) const {
        check(s);
        check(t);
        return rates_.value(s, t);
    }

    double exit_rate(State s) const {
        check(s);
        return exit_[s];
    }

    bool is_absorbing(State s) const { return exit_rate(s) == 0.0; }

    const Labeling& labels() const { return labels_; }
    const std::optional<Distribution>& initial() const { return initial_; }

    std::vector<Transition> transitions() const { return rates_.triplets(); }

    /// Same structure, different labeling.
    Ctmc relabeled(Labeling labels) const {
        return Ctmc(num_states(), transitions(), std::move(labels), initial_);
    }

  private:
    void check(State s) const {
        if (s >= num_states())
            throw IndexError("state " + std::to_string(s) + " out of range (chain has " +
                             std::to_string(num_states()) + " states)");
    }

    detail::SparseRows rates_;
    std::vector<double> exit_;
    Labeling labels_;
    std::optional<Distribution> initial_;
};

/// Finite labeled discrete-time Markov chain; every row sums to 0 or 1.
class Dtmc {
  public:
    using Entry = detail::SparseRows::Entry;

    Dtmc() = default;

    Dtmc(std::size_t num_states, std::vector<Transition> probs, Labeling labels = {})
        : probs_(num_states, std::move(probs), "probability"),
          labels_(labels.num_states() == 0 ? Labeling(num_states) : std::move(labels)) {
        for (State s = 0; s < num_states; ++s) {
            double sum = 0.0;
            for (const auto& e : probs_.row(s)) {
                if (e.value > 1.0 + kDistributionTolerance)
                    throw ModelError("probability above 1 in row " + std::to_string(s));
                sum += e.value;
            }
            if (sum != 0.0 && std::abs(sum - 1.0) > kDistributionTolerance)
                throw ModelError("row " + std::to_string(s) + " of DTMC sums to " + std::to_string(sum));
        }
    }

    std::size_t num_states() const { return probs_.num_rows(); }
    std::size_t num_transitions() const { return probs_.num_entries(); }

    std::span<const Entry> row(State s) const {
        if (s >= num_states())
            throw IndexError("state " + std::to_string(s) + " out of range");
        return probs_.row(s);
    }

    double prob(State s, State t) const {
        if (s >= num_states() || t >= num_states())
            throw IndexError("state out of range");
        return probs_.value(s, t);
    }

    double row_sum(State s) const {
        double sum = 0.0;
        for (const auto& e : row(s))
            sum += e.value;
        return sum;
    }

    const Labeling& labels() const { return labels_; }

  private:
    detail::SparseRows probs_;
    Labeling labels_;
};

inline double exit_rate(const Ctmc& c, State s) { return c.exit_rate(s); }

/// Removes all outgoing rates of the states in `sat`; labels are kept.
inline Ctmc make_absorbing(const Ctmc& c, const StateSet& sat) {
    if (sat.size() != c.num_states())
        throw IndexError("state set has " + std::to_string(sat.size()) + " entries, chain has " +
                         std::to_string(c.num_states()));
    std::vector<Transition> kept;
    kept.reserve(c.num_transitions());
    for (State s = 0; s < c.num_states(); ++s) {
        if (sat[s])
            continue;
        for (const auto& e : c.row(s))
            kept.push_back({s, e.target, e.value});
    }
    return Ctmc(c.num_states(), std::move(kept), c.labels(), c.initial());
}

namespace detail {
inline double max_off_diagonal_exit(const Ctmc& c) {
    double lambda = 0.0;
    for (State s = 0; s < c.num_states(); ++s) {
        double out = 0.0;
        for (const auto& e : c.row(s))
            if (e.target != s)
                out += e.value;
        lambda = std::max(lambda, out);
    }
    return lambda;
}
} // namespace detail

/// max_s (E(s) - R(s,s)); falls back to 1 when every state is absorbing up to self-loops.
inline double uniformization_rate(const Ctmc& c) {
    if (c.num_states() == 0)
        throw ModelError("uniformization rate of an empty chain");
    const double lambda = detail::max_off_diagonal_exit(c);
    return lambda > 0.0 ? lambda : 1.0;
}

/// P(s,s') = R(s,s')/lambda off the diagonal, P(s,s) = 1 - sum of the rest.
inline Dtmc uniformized_dtmc(const Ctmc& c, double lambda) {
    const double required = detail::max_off_diagonal_exit(c);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ParameterError("uniformization rate must be positive and finite");
    if (lambda < required * (1.0 - 1e-12))
        throw ParameterError("uniformization rate " + std::to_string(lambda) + " below required " +
                             std::to_string(required));
    std::vector<Transition> probs;
    probs.reserve(c.num_transitions() + c.num_states());
    for (State s = 0; s < c.num_states(); ++s) {
        double off = 0.0;
        for (const auto& e : c.row(s)) {
            if (e.target == s)
                continue;
            const double p = e.value / lambda;
            off += p;
            probs.push_back({s, e.target, p});
        }
        probs.push_back({s, s, std::max(0.0, 1.0 - off)});
    }
    return Dtmc(c.num_states(), std::move(probs), c.labels());
}

/// Jump chain R(s,s')/E(s); absorbing states get all-zero rows.
inline Dtmc embedded_dtmc(const Ctmc& c) {
    std::vector<Transition> probs;
    probs.reserve(c.num_transitions());
    for (State s = 0; s < c.num_states(); ++s) {
        const double e = c.exit_rate(s);
        if (e == 0.0)
            continue;
        for (const auto& entry : c.row(s))
            probs.push_back({s, entry.target, entry.value / e});
    }
    return Dtmc(c.num_states(), std::move(probs), c.labels());
}

/// Sub-chain reachable from a start state, with the renumbering in both directions.
struct Restriction {
    Ctmc chain;
    std::vector<State> old_to_new; // kNoState for dropped states
    std::vector<State> new_to_old;
};

/// States keep their relative order, so restricting a chain in which every state is
/// reachable returns an identical chain; the start state becomes the initial state.
inline Restriction restrict_reachable(const Ctmc& c, State start) {
    if (start >= c.num_states())
        throw IndexError("state " + std::to_string(start) + " out of range");
    std::vector<bool> seen(c.num_states(), false);
    std::deque<State> work{start};
    seen[start] = true;
    while (!work.empty()) {
        const State s = work.front();
        work.pop_front();
        for (const auto& e : c.row(s))
            if (!seen[e.target]) {
                seen[e.target] = true;
                work.push_back(e.target);
            }
    }
    Restriction r;
    r.old_to_new.assign(c.num_states(), kNoState);
    for (State s = 0; s < c.num_states(); ++s)
        if (seen[s]) {
            r.old_to_new[s] = static_cast<State>(r.new_to_old.size());
            r.new_to_old.push_back(s);
        }
    std::vector<Transition> rates;
    for (State s : r.new_to_old)
        for (const auto& e : c.row(s))
            rates.push_back({r.old_to_new[s], r.old_to_new[e.target], e.value});
    r.chain = Ctmc(r.new_to_old.size(), std::move(rates), c.labels().restricted(r.new_to_old),
                   point_mass(r.new_to_old.size(), r.old_to_new[start]));
    return r;
}

} // namespace strata
