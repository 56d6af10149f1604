#pragma once

// Untimed chain f_1 U (f_2 U (... U f_k)) on finite words, by enumerating every
// nondecreasing phase assignment.

#include <cstddef>
#include <optional>
#include <vector>

#include "strata/automaton.hpp"

namespace oracle {

// Smallest phase any assignment can be in at the end of the word, where every letter
// holds the proposition of its phase. Once the smallest phase at some prefix is k the
// chain is settled and the rest of the word is not read. nullopt when nothing fits.
inline std::optional<std::size_t> min_phase(const std::vector<strata::Letter>& word, std::size_t k) {
    for (std::size_t len = 1; len <= word.size(); ++len) {
        std::optional<std::size_t> best;
        std::vector<std::size_t> phase(len, 1);
        // odometer over nondecreasing sequences
        for (;;) {
            bool ok = true;
            for (std::size_t m = 0; m < len && ok; ++m)
                ok = (word[m] & strata::letter_bit(phase[m])) != 0;
            if (ok && (!best || phase.back() < *best))
                best = phase.back();
            std::size_t m = len;
            while (m > 0 && phase[m - 1] == k)
                --m;
            if (m == 0)
                break;
            ++phase[m - 1];
            for (std::size_t r = m; r < len; ++r)
                phase[r] = phase[m - 1];
        }
        if (!best)
            return std::nullopt;
        if (*best == k || len == word.size())
            return best;
    }
    return std::nullopt;
}

} // namespace oracle
