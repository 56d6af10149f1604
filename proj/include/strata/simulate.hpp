#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "strata/automaton.hpp"
#include "strata/csl.hpp"
#include "strata/ctmc.hpp"
#include "strata/error.hpp"
#include "strata/product.hpp"

namespace strata {

inline constexpr const char* kRngName = "mt19937_64+splitmix64";

/// s_0 t_0 s_1 t_1 ...; the last sojourn is +inf when the path ends in an absorbing
/// state, otherwise the path is only known up to the sum of its sojourns.
struct TimedPath {
    std::vector<State> states;
    std::vector<double> sojourns;

    bool complete() const { return !sojourns.empty() && std::isinf(sojourns.back()); }

    double end_time() const {
        double t = 0.0;
        for (double x : sojourns)
            t += x;
        return t;
    }
};

/// State occupied at time t: the first s_i with t < t_0 + ... + t_i, so a jump time
/// belongs to the state entered there.
inline State state_at(const TimedPath& path, double t) {
    if (path.states.empty() || path.states.size() != path.sojourns.size())
        throw ParameterError("malformed timed path");
    if (!(t >= 0.0))
        throw ParameterError("time must be nonnegative");
    double acc = 0.0;
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        acc += path.sojourns[i];
        if (t < acc)
            return path.states[i];
    }
    throw CoverageError("time " + detail::format_number(t) + " lies beyond the sampled path");
}

namespace detail {

inline Interval intersect(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo > b.lo) {
        r.lo = a.lo;
        r.lo_closed = a.lo_closed;
    } else if (b.lo > a.lo) {
        r.lo = b.lo;
        r.lo_closed = b.lo_closed;
    } else {
        r.lo = a.lo;
        r.lo_closed = a.lo_closed && b.lo_closed;
    }
    if (a.hi < b.hi) {
        r.hi = a.hi;
        r.hi_closed = a.hi_closed;
    } else if (b.hi < a.hi) {
        r.hi = b.hi;
        r.hi_closed = b.hi_closed;
    } else {
        r.hi = a.hi;
        r.hi_closed = a.hi_closed && b.hi_closed;
    }
    return r;
}

struct Segment {
    double start;
    double end; // exclusive; +inf for a final absorbing state
    Letter letter;
};

inline std::vector<Segment> segments(const TimedPath& path, std::span<const Letter> letters) {
    std::vector<Segment> out;
    double t = 0.0;
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        const double end = t + path.sojourns[i];
        if (path.states[i] >= letters.size())
            throw IndexError("path state outside the letter table");
        out.push_back({t, end, letters[path.states[i]]});
        t = end;
    }
    return out;
}

} // namespace detail

/// Decides the existential semantics of f_1 U^{I_1} ... f_k on one path exactly. T_i,
/// the set of feasible switch times t_i, is kept as a union of intervals: t_i either
/// equals some feasible t_{i-1} or lies in (c, y] where [x,y) is a maximal run of f_i and
/// c the infimum of T_{i-1} within it. Any intervals are accepted. Beyond the end of a
/// truncated path no proposition holds.
inline bool path_satisfies(const TimedPath& path, std::span<const Letter> letters, std::size_t k,
                           std::span<const Interval> intervals) {
    check_chain_length(k);
    if (intervals.size() + 1 != k)
        throw ParameterError("interval count does not match chain length");
    if (path.states.empty() || path.states.size() != path.sojourns.size())
        throw ParameterError("malformed timed path");
    const auto segs = detail::segments(path, letters);

    std::vector<Interval> feasible{Interval{0.0, 0.0, true, true}};
    for (std::size_t i = 1; i < k; ++i) {
        const Letter fi = letter_bit(i);
        std::vector<Interval> reach = feasible;
        for (std::size_t m = 0; m < segs.size();) {
            if (!(segs[m].letter & fi)) {
                ++m;
                continue;
            }
            const double x = segs[m].start;
            std::size_t e = m;
            while (e + 1 < segs.size() && (segs[e + 1].letter & fi))
                ++e;
            const double y = segs[e].end;
            m = e + 1;
            const Interval run{x, y, true, false};
            bool found = false;
            double inf = 0.0;
            for (const auto& part : feasible) {
                const auto cut = detail::intersect(part, run);
                if (cut.empty())
                    continue;
                if (!found || cut.lo < inf)
                    inf = cut.lo;
                found = true;
            }
            if (found && inf < y)
                reach.push_back(Interval{inf, y, false, std::isfinite(y)});
        }
        feasible.clear();
        for (const auto& part : reach) {
            const auto cut = detail::intersect(part, intervals[i - 1]);
            if (!cut.empty())
                feasible.push_back(cut);
        }
        if (feasible.empty())
            return false;
    }
    const Letter fk = letter_bit(k);
    for (const auto& seg : segs) {
        if (!(seg.letter & fk))
            continue;
        const Interval occupied{seg.start, seg.end, true, false};
        for (const auto& part : feasible)
            if (!detail::intersect(part, occupied).empty())
                return true;
    }
    return false;
}

inline bool path_satisfies(const TimedPath& path, const Ctmc& c, const PathFormula& phi) {
    const auto letters = letters_of(c, phi);
    return path_satisfies(path, letters, phi.k(), phi.intervals);
}

/// Race sampling: sojourn Exp(E(s) - R(s,s)), successor s' != s with probability
/// proportional to R(s,s'). Self-loops leave the trajectory unchanged and are skipped.
/// Stops in an absorbing state or once the elapsed time exceeds the horizon.
inline TimedPath sample_path(const Ctmc& c, State start, std::mt19937_64& rng, double horizon,
                             std::size_t max_steps = 10'000'000) {
    if (start >= c.num_states())
        throw IndexError("start state out of range");
    TimedPath path;
    State s = start;
    double t = 0.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t step = 0;; ++step) {
        path.states.push_back(s);
        const double out = c.exit_rate(s) - c.rate(s, s);
        if (out <= 0.0) {
            path.sojourns.push_back(kInfinity);
            return path;
        }
        if (step >= max_steps)
            throw InternalError("path sampling exceeded " + std::to_string(max_steps) + " steps");
        const double dwell = std::exponential_distribution<double>(out)(rng);
        path.sojourns.push_back(dwell);
        t += dwell;
        if (t > horizon)
            return path;
        double pick = unit(rng) * out;
        State next = s;
        for (const auto& e : c.row(s)) {
            if (e.target == s)
                continue;
            next = e.target;
            pick -= e.value;
            if (pick < 0.0)
                break;
        }
        s = next;
    }
}

inline TimedPath sample_path(const Ctmc& c, State start, std::uint64_t seed, double horizon) {
    std::mt19937_64 rng(seed);
    return sample_path(c, start, rng, horizon);
}

/// SplitMix64 step, used to derive independent per-batch seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Worker count: hardware concurrency, capped by STRATA_CSL_THREADS when set.
inline std::size_t worker_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("STRATA_CSL_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1)
            n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0; // 95% normal approximation
    std::size_t samples = 0;
    std::size_t successes = 0;
};

struct EstimateOptions {
    bool on_product = false; // sample the product chain instead of the original
    std::size_t batch_size = 4096;
    std::size_t threads = 0; // 0: worker_threads()
};

/// Monte Carlo estimate of Pr_s(f_1 U^{I_1} ... f_k) where the letters give the f_i per
/// state. Paths are sampled until the largest finite bound has passed, or to absorption
/// when sampling the product with an unbounded final interval. Results depend only on
/// the seed.
inline Estimate estimate(const Ctmc& c, State start, std::span<const Letter> letters, std::size_t k,
                         std::span<const Interval> intervals, std::size_t n, std::uint64_t seed,
                         const EstimateOptions& opt = {}) {
    check_chain_length(k);
    if (n == 0)
        throw ParameterError("sample count must be positive");
    if (start >= c.num_states())
        throw IndexError("start state out of range");
    if (letters.size() != c.num_states())
        throw IndexError("letter vector size mismatch");
    if (intervals.size() + 1 != k)
        throw ParameterError("interval count does not match chain length");
    Estimate est;
    est.samples = n;
    const std::vector<StateFormula> ops(k, StateFormula::truth());
    const auto wf = well_form(PathFormula(ops, {intervals.begin(), intervals.end()}));
    if (!wf)
        return est;
    double horizon = 0.0;
    for (const auto& i : intervals)
        if (std::isfinite(i.hi))
            horizon = std::max(horizon, i.hi);
    if (std::isinf(wf->intervals.back().hi)) {
        if (!opt.on_product)
            throw ParameterError("an unbounded final interval requires sampling on the product");
        horizon = kInfinity;
    }

    // On the product the path is judged with the product labels, where good and bad
    // states are absorbing.
    std::optional<ProductCtmc> product;
    const Ctmc* chain = &c;
    std::span<const Letter> path_letters = letters;
    State origin_start = start;
    if (opt.on_product) {
        const State starts[] = {start};
        product = build_product(c, letters, k, starts);
        chain = &product->chain;
        path_letters = product->letters;
        origin_start = product->entry[0];
    }

    const std::size_t batch = std::max<std::size_t>(1, opt.batch_size);
    const std::size_t batches = (n + batch - 1) / batch;
    std::vector<std::uint64_t> seeds(batches);
    std::uint64_t sm = seed;
    for (auto& s : seeds)
        s = splitmix64(sm);
    std::vector<std::size_t> hits(batches, 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t b; (b = next.fetch_add(1)) < batches;) {
            std::mt19937_64 rng(seeds[b]);
            const std::size_t count = std::min(batch, n - b * batch);
            std::size_t h = 0;
            for (std::size_t i = 0; i < count; ++i) {
                const auto path = sample_path(*chain, origin_start, rng, horizon);
                if (path_satisfies(path, path_letters, k, intervals))
                    ++h;
            }
            hits[b] = h;
        }
    };
    const std::size_t threads = std::min(batches, opt.threads ? opt.threads : worker_threads());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto h : hits)
        est.successes += h;
    est.mean = static_cast<double>(est.successes) / static_cast<double>(n);
    est.half_width = 1.96 * std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
    return est;
}

/// Estimate for a path formula with atomic operands.
inline Estimate estimate(const Ctmc& c, State start, const PathFormula& phi, std::size_t n, std::uint64_t seed,
                         const EstimateOptions& opt = {}) {
    const auto letters = letters_of(c, phi);
    return estimate(c, start, letters, phi.k(), phi.intervals, n, seed, opt);
}

} // namespace strata
