#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "strata/error.hpp"

namespace strata {

/// Bitset over the chain's propositions f_1..f_k; bit i-1 stands for f_i.
using Letter = std::uint64_t;

inline constexpr std::size_t kMaxChainLength = 64;

inline Letter letter_bit(std::size_t i) { return Letter{1} << (i - 1); }

/// Bits i..k of a letter (1-based, inclusive).
inline Letter letter_range(std::size_t i, std::size_t k) {
    if (i > k)
        return 0;
    const Letter upto = k >= 64 ? ~Letter{0} : (Letter{1} << k) - 1;
    return upto & ~(letter_bit(i) - 1);
}

/// State of the implicit automaton: phase q_1..q_k, or the rejecting sink.
struct AutState {
    std::uint32_t tag = 0; // 0 is the sink, i >= 1 is phase i

    static constexpr AutState bottom() { return AutState{0}; }
    static constexpr AutState phase(std::uint32_t i) { return AutState{i}; }

    constexpr bool is_bottom() const { return tag == 0; }
    constexpr std::uint32_t index() const { return tag; }

    std::string str() const { return is_bottom() ? std::string("bot") : "q" + std::to_string(tag); }

    friend constexpr bool operator==(AutState, AutState) = default;
};

inline void check_chain_length(std::size_t k) {
    if (k < 2 || k > kMaxChainLength)
        throw ParameterError("until chain length " + std::to_string(k) + " outside 2.." +
                             std::to_string(kMaxChainLength));
}

/// Transition function: from phase i move to the smallest j >= i with f_j in the
/// letter, or to the sink if there is none. The sink and q_k are absorbing.
inline AutState delta(AutState q, Letter letter, std::size_t k) {
    if (q.is_bottom() || q.index() >= k)
        return q;
    const Letter relevant = letter & letter_range(q.index(), k);
    if (relevant == 0)
        return AutState::bottom();
    return AutState::phase(static_cast<std::uint32_t>(std::countr_zero(relevant) + 1));
}

inline AutState initial_state(Letter letter, std::size_t k) { return delta(AutState::phase(1), letter, k); }

} // namespace strata
