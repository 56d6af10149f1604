#pragma once

// Dense matrix exponential in long double: Taylor series after scaling by a power of
// two, then repeated squaring. Used only as a reference for the sparse numerics.

#include <cmath>
#include <cstddef>
#include <vector>

#include "strata/ctmc.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<long double>>;

inline Matrix identity(std::size_t n) {
    Matrix m(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
        m[i][i] = 1.0L;
    return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size();
    Matrix c(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l) {
            if (a[i][l] == 0.0L)
                continue;
            for (std::size_t j = 0; j < n; ++j)
                c[i][j] += a[i][l] * b[l][j];
        }
    return c;
}

// Q with Q(s,s') = R(s,s') for s != s' and Q(s,s) = R(s,s) - E(s).
inline Matrix generator(const strata::Ctmc& c) {
    const std::size_t n = c.num_states();
    Matrix q(n, std::vector<long double>(n, 0.0L));
    for (strata::State s = 0; s < n; ++s) {
        for (const auto& e : c.row(s))
            q[s][e.target] += e.value;
        q[s][s] -= c.exit_rate(s);
    }
    return q;
}

inline Matrix expm(const Matrix& a, long double t) {
    const std::size_t n = a.size();
    long double norm = 0.0L;
    for (const auto& row : a) {
        long double r = 0.0L;
        for (auto x : row)
            r += std::fabs(x);
        norm = std::max(norm, r);
    }
    int squarings = 0;
    long double scale = t;
    while (norm * std::fabs(scale) > 0.125L) {
        scale /= 2.0L;
        ++squarings;
    }
    Matrix term = identity(n);
    Matrix sum = identity(n);
    for (int i = 1; i <= 30; ++i) {
        term = multiply(term, a);
        for (auto& row : term)
            for (auto& x : row)
                x *= scale / static_cast<long double>(i);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t col = 0; col < n; ++col)
                sum[r][col] += term[r][col];
    }
    for (int i = 0; i < squarings; ++i)
        sum = multiply(sum, sum);
    return sum;
}

// alpha * exp(Q t)
inline std::vector<double> transient(const strata::Ctmc& c, const std::vector<double>& alpha, double t) {
    const auto e = expm(generator(c), t);
    const std::size_t n = c.num_states();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        long double acc = 0.0L;
        for (std::size_t i = 0; i < n; ++i)
            acc += static_cast<long double>(alpha[i]) * e[i][j];
        out[j] = static_cast<double>(acc);
    }
    return out;
}

// Pr_s(f1 U[a,b) f2) for every state, b finite, from first principles: stay in f1 up
// to a, then reach f2 within b - a through f1 states.
inline std::vector<double> binary_until(const strata::Ctmc& c, const strata::StateSet& f1,
                                        const strata::StateSet& f2, double a, double b) {
    const std::size_t n = c.num_states();
    auto absorbing = [&](auto pred) {
        std::vector<strata::Transition> kept;
        for (strata::State s = 0; s < n; ++s)
            if (!pred(s))
                for (const auto& e : c.row(s))
                    kept.push_back({s, e.target, e.value});
        return strata::Ctmc(n, kept);
    };
    // Second phase: f2 reached within b - a, leaving f1 only into f2.
    const auto reach_chain = absorbing([&](strata::State s) { return f2[s] || !f1[s]; });
    const auto reach = expm(generator(reach_chain), b - a);
    std::vector<long double> second(n, 0.0L);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t x = 0; x < n; ++x)
            if (f2[x])
                second[s] += reach[s][x];
    if (a == 0.0) {
        std::vector<double> out(n);
        for (std::size_t s = 0; s < n; ++s)
            out[s] = static_cast<double>(second[s]);
        return out;
    }
    const auto hold_chain = absorbing([&](strata::State s) { return !f1[s]; });
    const auto hold = expm(generator(hold_chain), a);
    std::vector<double> out(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        long double acc = 0.0L;
        for (std::size_t x = 0; x < n; ++x)
            if (f1[x])
                acc += hold[s][x] * second[x];
        out[s] = static_cast<double>(acc);
    }
    return out;
}

} // namespace oracle
