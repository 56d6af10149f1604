#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "strata/ctmc.hpp"
#include "strata/error.hpp"
#include "strata/poisson.hpp"

namespace strata {

struct TransientResult {
    Distribution dist;
    double err = 0.0;
};

/// Per-state values with per-state absolute error bounds.
struct Evaluation {
    std::vector<double> value;
    std::vector<double> error;
};

inline constexpr double kLinearSolveTolerance = 1e-12;
inline constexpr std::size_t kDenseSolveLimit = 2000;
inline constexpr int kIterativeSolveCap = 1000000;

namespace detail {

inline void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ParameterError("epsilon must lie in (0,1)");
}

inline void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw ParameterError("time must be finite and nonnegative");
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double sum_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += std::abs(a[i] - b[i]);
    return d;
}

// Sum_{n >= from} psi_n and Sum_{n >= from} psi_n (n - from), over the window.
inline std::pair<double, double> tail_moments(const PoissonWeights& pw, std::size_t from) {
    double mass = 0.0;
    double lag = 0.0;
    for (std::size_t n = std::max(from, pw.left); n <= pw.right; ++n) {
        mass += pw[n];
        lag += pw[n] * static_cast<double>(n - from);
    }
    return {mass, lag};
}

// Poisson-weighted sum of the iterates x, step(x), step(step(x)), ...
// Stops early once successive iterates differ by less than the share of the budget
// left for the remaining terms; since the step is a contraction in the given norm the
// later iterates stay within (n - i) * diff of the current one.
template <class Step, class Norm>
std::pair<std::vector<double>, double> uniformization_sum(std::vector<double> x, const PoissonWeights& pw,
                                                          double budget, Step step, Norm norm) {
    std::vector<double> acc(x.size(), 0.0);
    std::vector<double> next(x.size());
    double extra = 0.0;
    for (std::size_t i = 0;; ++i) {
        if (i >= pw.left) {
            const double w = pw[i];
            for (std::size_t s = 0; s < x.size(); ++s)
                acc[s] += w * x[s];
        }
        if (i >= pw.right)
            break;
        step(x, next);
        const double diff = norm(x, next);
        x.swap(next);
        const double remaining = static_cast<double>(pw.right - i);
        if (diff * remaining < budget) {
            const auto [mass, lag] = tail_moments(pw, i + 1);
            for (std::size_t s = 0; s < x.size(); ++s)
                acc[s] += mass * x[s];
            extra = diff * lag;
            break;
        }
    }
    return {std::move(acc), extra};
}

inline std::vector<std::vector<State>> predecessors(const Ctmc& c) {
    std::vector<std::vector<State>> pred(c.num_states());
    for (State s = 0; s < c.num_states(); ++s)
        for (const auto& e : c.row(s))
            if (e.target != s)
                pred[e.target].push_back(s);
    return pred;
}

// States that can reach `from` through states admitted by `through`.
template <class Admit>
StateSet backward_closure(const std::vector<std::vector<State>>& pred, const StateSet& from, Admit through) {
    StateSet seen = from;
    std::deque<State> work;
    for (State s = 0; s < from.size(); ++s)
        if (from[s])
            work.push_back(s);
    while (!work.empty()) {
        const State s = work.front();
        work.pop_front();
        for (State p : pred[s])
            if (!seen[p] && through(p)) {
                seen[p] = true;
                work.push_back(p);
            }
    }
    return seen;
}

} // namespace detail

/// Transient distribution pi(alpha, t) by uniformization at the self-loop adjusted rate.
/// `err` bounds the max-norm error. Half of epsilon goes to Poisson truncation, half to
/// the early stop.
inline TransientResult transient(const Ctmc& c, const Distribution& alpha, double t, double epsilon) {
    detail::check_time(t);
    detail::check_epsilon(epsilon);
    detail::validate_initial(alpha, c.num_states());
    if (t == 0.0)
        return {alpha, 0.0};
    const double lambda = uniformization_rate(c);
    const Dtmc p = uniformized_dtmc(c, lambda);
    const auto pw = poisson_weights(lambda * t, epsilon / 2.0);
    auto step = [&](const std::vector<double>& v, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (State s = 0; s < p.num_states(); ++s) {
            if (v[s] == 0.0)
                continue;
            for (const auto& e : p.row(s))
                out[e.target] += v[s] * e.value;
        }
    };
    auto [dist, extra] = detail::uniformization_sum(alpha, pw, epsilon / 2.0, step, detail::sum_abs_diff);
    for (auto& x : dist)
        x = std::clamp(x, 0.0, 1.0);
    return {std::move(dist), pw.mass_defect + extra};
}

/// x(s) = sum_{s'} pi_s(s', t) w(s') for every state s, where w has per-entry error
/// bounds werr and values in [0,1]. States that are absorbing (up to self-loops) keep
/// w exactly; states that cannot reach any state with nonzero w or werr get exactly 0.
inline Evaluation backward_transient(const Ctmc& c, std::span<const double> w, std::span<const double> werr,
                                     double t, double epsilon) {
    detail::check_time(t);
    detail::check_epsilon(epsilon);
    const std::size_t n = c.num_states();
    if (w.size() != n || werr.size() != n)
        throw IndexError("weight vector size mismatch");
    Evaluation out{{w.begin(), w.end()}, {werr.begin(), werr.end()}};
    if (t == 0.0 || n == 0)
        return out;

    StateSet relevant(n, false);
    bool any = false;
    double max_err = 0.0;
    for (State s = 0; s < n; ++s) {
        if (w[s] != 0.0 || werr[s] != 0.0) {
            relevant[s] = true;
            any = true;
        }
        max_err = std::max(max_err, werr[s]);
    }
    if (!any)
        return out;
    const auto pred = detail::predecessors(c);
    const StateSet reach = detail::backward_closure(pred, relevant, [](State) { return true; });

    const double lambda = uniformization_rate(c);
    const Dtmc p = uniformized_dtmc(c, lambda);
    const auto pw = poisson_weights(lambda * t, epsilon / 2.0);
    auto step = [&](const std::vector<double>& x, std::vector<double>& next) {
        for (State s = 0; s < n; ++s) {
            double acc = 0.0;
            for (const auto& e : p.row(s))
                acc += e.value * x[e.target];
            next[s] = acc;
        }
    };
    auto [acc, extra] = detail::uniformization_sum(out.value, pw, epsilon / 2.0, step, detail::max_abs_diff);
    const double trunc = pw.mass_defect + extra;
    for (State s = 0; s < n; ++s) {
        if (!reach[s]) {
            out.value[s] = 0.0;
            out.error[s] = 0.0;
        } else if (c.exit_rate(s) - c.rate(s, s) == 0.0) {
            // value and error stay w(s), werr(s)
        } else {
            out.value[s] = std::clamp(acc[s], 0.0, 1.0);
            out.error[s] = trunc + max_err;
        }
    }
    return out;
}

/// Probability of eventually entering `target` from every state, on the embedded jump
/// chain. States decided by graph analysis (probability 0 or 1) are exact; the rest
/// come from a linear solve and carry the solver tolerance as error.
inline Evaluation reach_probabilities(const Ctmc& c, const StateSet& target) {
    const std::size_t n = c.num_states();
    if (target.size() != n)
        throw IndexError("target set size mismatch");
    const auto pred = detail::predecessors(c);
    const StateSet can_reach = detail::backward_closure(pred, target, [](State) { return true; });
    StateSet zero(n, false);
    for (State s = 0; s < n; ++s)
        zero[s] = !can_reach[s];
    const StateSet may_fail = detail::backward_closure(pred, zero, [&](State s) { return !target[s]; });

    Evaluation out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<State> unknown;
    std::vector<std::ptrdiff_t> column(n, -1);
    for (State s = 0; s < n; ++s) {
        if (target[s] || !may_fail[s]) {
            out.value[s] = zero[s] ? 0.0 : 1.0;
        } else if (!zero[s]) {
            column[s] = static_cast<std::ptrdiff_t>(unknown.size());
            unknown.push_back(s);
        }
    }
    if (unknown.empty())
        return out;

    const auto u = static_cast<Eigen::Index>(unknown.size());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(u);
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index r = 0; r < u; ++r) {
        const State s = unknown[static_cast<std::size_t>(r)];
        const double e = c.exit_rate(s);
        entries.emplace_back(r, r, 1.0);
        for (const auto& t : c.row(s)) {
            const double pr = t.value / e;
            if (column[t.target] >= 0)
                entries.emplace_back(r, column[t.target], -pr);
            else
                b[r] += pr * out.value[t.target];
        }
    }
    Eigen::VectorXd x;
    if (unknown.size() <= kDenseSolveLimit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(u, u);
        for (const auto& t : entries)
            a(t.row(), t.col()) += t.value();
        x = a.partialPivLu().solve(b);
    } else {
        Eigen::SparseMatrix<double, Eigen::RowMajor> a(u, u);
        a.setFromTriplets(entries.begin(), entries.end());
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> solver;
        solver.setTolerance(kLinearSolveTolerance);
        solver.setMaxIterations(kIterativeSolveCap);
        solver.compute(a);
        x = solver.solve(b);
        if (solver.info() != Eigen::Success)
            throw InternalError("reachability solve did not converge");
    }
    for (Eigen::Index r = 0; r < u; ++r) {
        const State s = unknown[static_cast<std::size_t>(r)];
        if (!std::isfinite(x[r]))
            throw InternalError("reachability solve produced a non-finite value");
        out.value[s] = std::clamp(x[r], 0.0, 1.0);
        out.error[s] = kLinearSolveTolerance;
    }
    return out;
}

/// Probability under alpha of eventually entering `target`.
inline double unbounded_reach(const Ctmc& c, const Distribution& alpha, const StateSet& target) {
    detail::validate_initial(alpha, c.num_states());
    const auto r = reach_probabilities(c, target);
    double acc = 0.0;
    for (State s = 0; s < c.num_states(); ++s)
        acc += alpha[s] * r.value[s];
    return std::clamp(acc, 0.0, 1.0);
}

} // namespace strata
