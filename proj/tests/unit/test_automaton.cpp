#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "untimed.hpp"
#include "strata/automaton.hpp"

using namespace strata;

namespace {

Letter word(std::initializer_list<std::size_t> props) {
    Letter l = 0;
    for (auto p : props)
        l |= letter_bit(p);
    return l;
}

} // namespace

TEST_CASE("transition function on small letters", "[automaton]") {
    const auto q1 = AutState::phase(1);
    CHECK(delta(q1, word({1}), 4) == q1);
    CHECK(delta(q1, word({1, 2}), 4) == q1);
    CHECK(delta(q1, word({}), 4) == AutState::bottom());
    CHECK(delta(q1, word({3, 4}), 4) == AutState::phase(3));
    CHECK(delta(AutState::phase(2), word({1}), 4) == AutState::bottom());
    for (Letter l = 0; l < 16; ++l) {
        CHECK(delta(AutState::phase(4), l, 4) == AutState::phase(4));
        CHECK(delta(AutState::bottom(), l, 4) == AutState::bottom());
    }
    // propositions beyond k are ignored
    CHECK(delta(q1, word({5}), 4) == AutState::bottom());
}

TEST_CASE("initial automaton states of the running example", "[automaton]") {
    CHECK(initial_state(word({1, 4}), 5) == AutState::phase(1));
    CHECK(initial_state(word({3}), 5) == AutState::phase(3));
    CHECK(initial_state(word({}), 5).is_bottom());
    CHECK(AutState::phase(3).str() == "q3");
    CHECK(AutState::bottom().str() == "bot");
}

TEST_CASE("chain length limits", "[automaton]") {
    CHECK_THROWS_AS(check_chain_length(1), ParameterError);
    CHECK_THROWS_AS(check_chain_length(kMaxChainLength + 1), ParameterError);
    CHECK_NOTHROW(check_chain_length(kMaxChainLength));
    CHECK(delta(AutState::phase(1), letter_bit(64), 64) == AutState::phase(64));
}

TEST_CASE("automaton runs agree with brute-force untimed prefixes", "[automaton]") {
    for (std::size_t k = 2; k <= 4; ++k) {
        const Letter letters = Letter{1} << k;
        for (std::size_t len = 1; len <= 6; ++len) {
            std::size_t total = 1;
            for (std::size_t i = 0; i < len; ++i)
                total *= letters;
            // exhaustive when small, otherwise a fixed random sample of words
            const bool sample = total > 300000;
            std::mt19937_64 rng(k * 10 + len);
            std::vector<Letter> w(len, 0);
            for (std::size_t i = 0; i < (sample ? 100000 : total); ++i) {
                std::size_t x = sample ? std::uniform_int_distribution<std::size_t>(0, total - 1)(rng) : i;
                for (auto& l : w) {
                    l = static_cast<Letter>(x % letters);
                    x /= letters;
                }
                AutState q = initial_state(w[0], k);
                for (std::size_t i = 1; i < len; ++i)
                    q = delta(q, w[i], k);
                const auto expected = oracle::min_phase(w, k);
                if (!expected) {
                    REQUIRE(q.is_bottom());
                } else {
                    REQUIRE_FALSE(q.is_bottom());
                    REQUIRE(q.index() == *expected);
                }
                // phases never decrease along a run
                AutState prev = initial_state(w[0], k);
                for (std::size_t i = 1; i < len && !prev.is_bottom(); ++i) {
                    const auto next = delta(prev, w[i], k);
                    if (!next.is_bottom())
                        REQUIRE(next.index() >= prev.index());
                    prev = next;
                }
            }
        }
    }
}
