#include <catch2/catch_amalgamated.hpp>

#include "random_models.hpp"
#include "strata/csl.hpp"
#include "strata/parser.hpp"

using namespace strata;

namespace {

std::vector<Interval> intervals_of(const std::string& text) { return parse_path(text).intervals; }

} // namespace

TEST_CASE("parser builds the expected trees", "[csl]") {
    const auto f = parse("P<=0.5 ( f1 U[0,2] f2 U[2,4] f3 )");
    REQUIRE(f.kind() == StateFormula::Kind::Prob);
    CHECK(f.comparator() == Comparator::LessEqual);
    CHECK(f.bound() == 0.5);
    CHECK(f.path().k() == 3);
    CHECK(f.path().intervals[0].str() == "[0,2]");
    CHECK(f.path().intervals[1].str() == "[2,4]");

    const auto g = parse("P>=1 ( F[0,1] f1 )");
    CHECK(g.path().operands[0] == StateFormula::truth());
    CHECK(g.path().operands[1] == StateFormula::atom("f1"));
    CHECK(parse("P>=1 ( <>[0,1] f1 )") == g);

    CHECK(parse("!a & b").str() == "!a & b");
    CHECK(parse("P>0.2 (a U[1,inf) (b & P<0.1 (c U[0,1) d)))").path().operands[1].kind() ==
          StateFormula::Kind::And);
    CHECK(parse("a | !b") == StateFormula::disjunction(StateFormula::atom("a"), parse("!b")));
}

TEST_CASE("parser errors carry positions", "[csl]") {
    CHECK_THROWS_WITH(parse("P<0.1 ( f1 U[2,1] f2 )"), Catch::Matchers::ContainsSubstring("empty interval"));
    CHECK_THROWS_AS(parse("P<1.5 (a U[0,1) b)"), ParseError);
    CHECK_THROWS_AS(parse("P=0.5 (a U[0,1) b)"), ParseError);
    CHECK_THROWS_AS(parse("a & "), ParseError);
    CHECK_THROWS_AS(parse("P>0.5 (a U[0,inf] b)"), ParseError);
    try {
        parse("a & & b");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 4);
    }
}

TEST_CASE("formulas print back to equivalent text", "[csl]") {
    for (const char* text : {"P<=0.5 (f1 U[0,2] f2 U[2,4] f3)", "!(a & b)", "P>0 (true U(0,inf) a)",
                             "P<0.25 ((a & b) U[1,3) !c)"}) {
        const auto f = parse(text);
        CHECK(parse(f.str()) == f);
    }
}

TEST_CASE("well-formedness rewrite", "[csl]") {
    auto wf = well_form(parse_path("f1 U[2,5) f2 U[1,6) f3"));
    REQUIRE(wf);
    CHECK(wf->intervals[0].str() == "[2,5)");
    CHECK(wf->intervals[1].str() == "[2,6)");

    const auto ex1 = parse_path("f1 U[0,2] f2 U[2,4] f3 U[2,4] f4 U[3,5] f5");
    wf = well_form(ex1);
    REQUIRE(wf);
    CHECK(wf->intervals == ex1.intervals);

    CHECK_FALSE(well_form(parse_path("f1 U[3,4) f2 U[0,2) f3")));

    testing_support::Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto phi = testing_support::random_chain(rng, 2 + i % 4, {4.0, 0.5, true, true});
        const auto once = well_form(phi);
        if (!once)
            continue;
        const auto twice = well_form(*once);
        REQUIRE(twice);
        CHECK(twice->intervals == once->intervals);
        CHECK(twice->k() == phi.k());
        for (std::size_t j = 1; j < once->intervals.size(); ++j) {
            CHECK(once->intervals[j - 1].lo <= once->intervals[j].lo);
            CHECK(once->intervals[j - 1].hi <= once->intervals[j].hi);
        }
    }
}

TEST_CASE("interval closure", "[csl]") {
    const auto f = close_intervals(parse("P<=0 (f2 U(0,1] f1)"));
    CHECK(f == parse("P<=0 (f2 U[0,1) f1) | !f2"));
    CHECK(close_intervals(parse("P>=0.5 (f1 U[0,2] f2)")) == parse("P>=0.5 (f1 U[0,2) f2)"));
    CHECK(close_intervals(parse("P>0.5 (f1 U(0,2) f2)")) == parse("P>0.5 (f1 U[0,2) f2) & f1"));
    CHECK(close_intervals(parse("P>0.5 (f1 U[3,3] f2)")) == parse("P>0.5 (f1 U[3,3] f2)"));
    // an inner open zero also guards on the earlier operands
    CHECK(close_intervals(parse("P>0.5 (a U[0,2) b U(0,3) c)")) == parse("P>0.5 (a U[0,2) b U[0,3) c) & (a | b)"));
}

TEST_CASE("closure keeps endpoints where a path can pass several phases at once", "[csl]") {
    // the upper end 2 of the first interval meets the closed lower end of the second
    const auto kept = close_intervals(parse("P>0.5 (f1 U[0,2] f2 U[2,4] f3 U[3,5] f4)"));
    CHECK(kept.path().intervals[0].str() == "[0,2]");
    CHECK(kept.path().intervals[1].str() == "[2,4)");
    CHECK(kept.path().intervals[2].str() == "[3,5)");
    CHECK(touching_values(intervals_of("a U[0,2] b U[2,4] c")) == std::vector<double>{2.0});
    CHECK(touching_values(intervals_of("a U[0,2] b U(2,4] c")).empty());
    CHECK(touching_values(intervals_of("a U[0,2) b U[2,4] c")).empty());
    const auto open_lo = normalize_endpoints(intervals_of("a U[0,2] b U(2,4] c"));
    CHECK(open_lo[0].str() == "[0,2)");
    CHECK(open_lo[1].str() == "[2,4)");

    // an open left end after a point stays open
    const auto after_point = normalize_endpoints(intervals_of("a U[2,2] b U(2,4) c U(3,5) d"));
    CHECK(after_point[0].str() == "[2,2]");
    CHECK(after_point[1].str() == "(2,4)");
    CHECK(after_point[2].str() == "[3,5)");

    // outside touching bounds every interval ends up left-closed and right-open
    testing_support::Rng rng(9);
    for (int i = 0; i < 300; ++i) {
        const auto phi = testing_support::random_chain(rng, 2 + i % 4, {4.0, 0.5, true, true});
        const auto wf = well_form(phi);
        if (!wf)
            continue;
        const auto out = normalize_endpoints(wf->intervals);
        const auto touch = touching_values(wf->intervals);
        for (std::size_t l = 0; l < out.size(); ++l) {
            const auto& iv = out[l];
            if (iv.is_point())
                continue;
            if (std::find(touch.begin(), touch.end(), iv.hi) == touch.end())
                CHECK_FALSE(iv.hi_closed);
            if (iv.lo > 0.0 && !iv.lo_closed) {
                bool met = false;
                for (std::size_t m = 0; m < l; ++m)
                    met = met || (out[m].hi == iv.lo && out[m].hi_closed);
                CHECK(met);
            }
        }
    }
}

TEST_CASE("normalize collapses unsatisfiable chains", "[csl]") {
    CHECK(normalize(parse("P<=0.3 (a U[3,4) b U[0,2) c)")) == StateFormula::truth());
    CHECK(normalize(parse("P>0 (a U[3,4) b U[0,2) c)")) == StateFormula::negation(StateFormula::truth()));
}

TEST_CASE("interval shift", "[csl]") {
    CHECK(interval_minus(Interval::closed_open(3, 8), 5).str() == "[0,3)");
    CHECK(interval_minus(Interval::closed_open(0, 2), 0).str() == "[0,2)");
    CHECK(interval_minus(Interval::closed_open(2, 4), 3).str() == "[0,1)");
    CHECK(interval_minus(Interval::make(2, 4, false, true), 1).str() == "(1,3]");
    CHECK(interval_minus(Interval::closed_open(1, kInfinity), 1).str() == "[0,inf)");
    CHECK_THROWS_AS(interval_minus(Interval::closed_open(2, 4), 4), ParameterError);

    CHECK(formula_minus(parse_path("f1 U[3,8) f2"), 5) == parse_path("f1 U[0,3) f2"));
    const auto phi = parse_path("f1 U[1,2) f2 U[1,4) f3");
    CHECK(formula_minus(phi, 0) == phi);
    CHECK(formula_minus(phi, 1) == parse_path("f1 U[0,1) f2 U[0,3) f3"));
    // composition of shifts
    const auto psi = parse_path("a U[1,5) b U[2,7) c");
    CHECK(formula_minus(formula_minus(psi, 0.5), 1.0) == formula_minus(psi, 1.5));
}

TEST_CASE("suffix chains", "[csl]") {
    const auto phi = parse_path("f1 U[0,1) f2 U[0,2) f3 U[0,3) f4");
    CHECK(suffix_formula(phi, 1) == phi);
    CHECK(suffix_formula(phi, 3) == parse_path("f3 U[0,3) f4"));
    const auto ex1 = parse_path("f1 U[0,2] f2 U[2,4] f3 U[2,4] f4 U[3,5] f5");
    CHECK(suffix_formula(ex1, 3) == parse_path("f3 U[2,4] f4 U[3,5] f5"));
    CHECK_THROWS_AS(suffix_formula(phi, 4), IndexError);
    CHECK_THROWS_AS(suffix_formula(phi, 0), IndexError);
}
