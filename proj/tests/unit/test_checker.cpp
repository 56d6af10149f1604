#include <catch2/catch_amalgamated.hpp>

#include "random_models.hpp"
#include "strata/checker.hpp"
#include "strata/parser.hpp"

using namespace strata;
using testing_support::running_example;
using testing_support::looping_pair;

TEST_CASE("open and closed intervals from time zero", "[checker]") {
    const auto c = looping_pair();
    // in s0 the operand f2 fails at once, so no path satisfies the until with a left-open bound
    const auto none = check(c, parse("P<=0 (f2 U(0,1] f1)"));
    CHECK(none.holds(0));
    const auto closed = check(c, parse("P>=1 (f2 U[0,1] f1)"));
    CHECK(closed.holds(0));
    CHECK_FALSE(closed.holds(1));
}

TEST_CASE("propositional formulas", "[checker]") {
    const auto c = running_example();
    CHECK(check(c, parse("f1 & !f1")).states().empty());
    CHECK(check(c, parse("true")).states().size() == 5);
    CHECK(check(c, parse("f1 & f4")).states() == std::vector<State>{0, 1});
    CHECK(check(c, parse("f3 | f5")).states() == std::vector<State>{3, 4});
    CHECK(check(c, parse("nowhere")).states().empty());
    CHECK_FALSE(check(c, parse("true")).probs);
}

TEST_CASE("probabilities and product size of the outermost operator", "[checker]") {
    const auto c = running_example();
    const auto r = check(c, parse("P>=0.4 (f1 U[1,3) f2 U[1,3) f3 U[1,3) f4)"));
    REQUIRE(r.probs);
    CHECK((*r.probs)[0].probability == Catch::Approx(0.40600584971).margin(1e-6));
    CHECK((*r.probs)[0].error <= 1e-6);
    CHECK(r.holds(0));
    CHECK(r.product_states > 0);
}

TEST_CASE("unresolved comparisons", "[checker]") {
    const auto c = testing_support::two_state();
    // the value is 1 - e^-2 = 0.8646647..., within the margin of the bound
    const auto f = parse("P>=0.864665 (f1 U[0,1) f2)");
    CheckOptions strict;
    strict.margin = 1e-3;
    CHECK_THROWS_AS(check(c, f, strict), IndeterminateError);
    try {
        check(c, f, strict);
    } catch (const IndeterminateError& e) {
        CHECK(e.states() == std::vector<State>{0});
    }
    CheckOptions closed = strict;
    closed.policy = VerdictPolicy::ClosedWorld;
    const auto r = check(c, f, closed);
    CHECK_FALSE(r.holds(0));
    REQUIRE(r.indeterminate.size() == 1);
    CHECK(r.indeterminate[0].states == std::vector<State>{0});
    CheckOptions tight;
    tight.epsilon = 1e-9;
    CHECK_NOTHROW(check(c, f, tight));
}

TEST_CASE("decision rule", "[checker]") {
    CHECK(decide(0.5, 0.1, Comparator::GreaterEqual, 0.3) == Verdict::Satisfied);
    CHECK(decide(0.5, 0.1, Comparator::GreaterEqual, 0.55) == Verdict::Indeterminate);
    CHECK(decide(0.5, 0.1, Comparator::GreaterEqual, 0.7) == Verdict::Violated);
    CHECK(decide(0.5, 0.0, Comparator::Greater, 0.5) == Verdict::Violated);
    CHECK(decide(0.5, 0.0, Comparator::GreaterEqual, 0.5) == Verdict::Satisfied);
    CHECK(decide(0.5, 0.0, Comparator::Less, 0.5) == Verdict::Violated);
    CHECK(decide(0.5, 0.0, Comparator::LessEqual, 0.5) == Verdict::Satisfied);
    CHECK(decide(0.0, 0.0, Comparator::LessEqual, 0.0) == Verdict::Satisfied);
    CHECK(decide(0.5, 0.0, Comparator::LessEqual, 0.5, 0.01) == Verdict::Indeterminate);
}

TEST_CASE("nested probability operators", "[checker]") {
    const auto c = running_example();
    // states from which f5 is reached with probability >= 0.3 within 3 time units
    const auto inner = check(c, parse("P>=0.3 (true U[0,3) f5)"));
    const auto outer = check(c, parse("P>=0.5 (f1 U[0,2) (P>=0.3 (true U[0,3) f5)))"));
    const auto phi = PathFormula({parse("f1"), parse("P>=0.3 (true U[0,3) f5)")}, {Interval::closed_open(0, 2)});
    const auto values = path_probabilities(c, phi);
    for (State s = 0; s < 5; ++s)
        CHECK(outer.holds(s) == (values.value[s] >= 0.5));
    // a state satisfying the inner formula satisfies the outer one at time 0
    for (State s = 0; s < 5; ++s)
        if (inner.holds(s))
            CHECK(outer.holds(s));
}

TEST_CASE("invalid options", "[checker]") {
    CheckOptions bad;
    bad.epsilon = 1.5;
    CHECK_THROWS_AS(check(running_example(), parse("true"), bad), ParameterError);
    bad.epsilon = 1e-6;
    bad.margin = -1.0;
    CHECK_THROWS_AS(check(running_example(), parse("true"), bad), ParameterError);
}
