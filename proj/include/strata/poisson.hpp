#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "strata/error.hpp"

namespace strata {

/// Truncated Poisson(lambda*t) distribution: weights[i] = psi(left + i).
struct PoissonWeights {
    std::size_t left = 0;
    std::size_t right = 0;
    std::vector<double> weights;
    double mass_defect = 0.0; // 1 - sum(weights)

    double operator[](std::size_t n) const { return n < left || n > right ? 0.0 : weights[n - left]; }
};

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

} // namespace detail

/// The window grows from the mode, always taking the larger neighbour, until it holds
/// at least 1 - epsilon of the mass. The mode weight comes from lgamma; the others by
/// the ratio recurrence away from it.
inline PoissonWeights poisson_weights(double lt, double epsilon) {
    if (!(lt >= 0.0) || !std::isfinite(lt))
        throw ParameterError("Poisson parameter must be finite and nonnegative");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ParameterError("Poisson truncation epsilon must lie in (0,1)");
    PoissonWeights pw;
    if (lt == 0.0) {
        pw.weights = {1.0};
        return pw;
    }
    const auto mode = static_cast<std::size_t>(std::floor(lt));
    const double md = static_cast<double>(mode);
    const double at_mode = std::exp(-lt + md * std::log(lt) - std::lgamma(md + 1.0));

    std::vector<double> below; // psi(mode-1), psi(mode-2), ...
    std::vector<double> above{at_mode};
    std::size_t left = mode;
    std::size_t right = mode;
    detail::KahanSum total;
    total.add(at_mode);
    double wl = left > 0 ? at_mode * md / lt : 0.0;
    double wr = at_mode * lt / (md + 1.0);
    while (total.sum < 1.0 - epsilon) {
        if (wl <= 0.0 && wr <= 0.0)
            break;
        if (wl >= wr) {
            below.push_back(wl);
            total.add(wl);
            --left;
            wl = left > 0 ? wl * static_cast<double>(left) / lt : 0.0;
        } else {
            above.push_back(wr);
            total.add(wr);
            ++right;
            wr = wr * lt / static_cast<double>(right + 1);
        }
    }
    pw.left = left;
    pw.right = right;
    pw.weights.assign(below.rbegin(), below.rend());
    pw.weights.insert(pw.weights.end(), above.begin(), above.end());

    // lgamma carries a relative error of a few ulps times log(lt); keep the sum <= 1.
    auto sum_of = [&] {
        detail::KahanSum s;
        for (double w : pw.weights)
            s.add(w);
        return s.sum;
    };
    double sum = sum_of();
    if (sum > 1.0) {
        for (auto& w : pw.weights)
            w /= sum;
        sum = sum_of();
        while (sum > 1.0) {
            for (auto& w : pw.weights)
                w *= std::nextafter(1.0, 0.0);
            sum = sum_of();
        }
    }
    pw.mass_defect = std::max(0.0, 1.0 - sum);
    return pw;
}

} // namespace strata
