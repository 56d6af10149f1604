#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <tuple>

#include "random_models.hpp"
#include "strata/parser.hpp"
#include "strata/product.hpp"

using namespace strata;
using testing_support::running_example;

namespace {

const char* kPhi1 = "f1 U[0,2) f2 U[0,2) f3 U[0,2) f4 U[0,2) f5";
const char* kPhi2 = "f1 U[1,3) f2 U[1,3) f3 U[1,3) f4";

std::map<std::pair<std::string, std::string>, double> named_edges(const ProductCtmc& p) {
    std::map<std::pair<std::string, std::string>, double> out;
    for (State x = 0; x < p.num_states(); ++x)
        for (const auto& e : p.chain.row(x))
            out[{product_state_name(p, x), product_state_name(p, e.target)}] = e.value;
    return out;
}

std::set<std::string> names(const ProductCtmc& p) {
    std::set<std::string> out;
    for (State x = 0; x < p.num_states(); ++x)
        out.insert(product_state_name(p, x));
    return out;
}

} // namespace

TEST_CASE("minimal stratum", "[product]") {
    const auto c = running_example();
    const auto letters = letters_of(c, parse_path(kPhi1));
    CHECK(f_min(letters[1]) == 1u);
    CHECK(f_min(letters[2]) == 4u);
    CHECK_FALSE(f_min(0));
}

TEST_CASE("stratification of the running example", "[product]") {
    const auto c = running_example();
    const auto phi = parse_path("f1 U[0,2] f2 U[2,4] f3 U[2,4] f4 U[3,5] f5");
    const auto r = is_stratified(c, phi);
    CHECK_FALSE(r);
    REQUIRE(r.witness);
    CHECK(*r.witness == StratificationWitness{2, 1});

    std::vector<Transition> kept;
    for (const auto& t : c.transitions())
        if (!(t.source == 2 && t.target == 1) && !(t.source == 4 && t.target == 3))
            kept.push_back(t);
    CHECK(is_stratified(Ctmc(5, kept, c.labels()), phi));
    CHECK(is_stratified(Ctmc(1, {}, Labeling(1)), parse_path("a U[0,1) b")));
    CHECK_THROWS_AS(is_stratified(c, parse_path("(f1 & f2) U[0,1) f3")), ContractError);
}

TEST_CASE("product of the running example with the first chain", "[product]") {
    const auto c = running_example();
    const auto phi = parse_path(kPhi1);
    const auto p = build_product(c, phi, State{0});
    CHECK(p.num_states() == 7);
    CHECK(names(p) == std::set<std::string>{"s0q1", "s1q1", "s2q4", "s3q3", "s1q4", "s4q5", "s3bot"});
    const std::map<std::pair<std::string, std::string>, double> expected{
        {{"s0q1", "s1q1"}, 2}, {{"s1q1", "s2q4"}, 1}, {{"s1q1", "s3q3"}, 1}, {{"s2q4", "s1q4"}, 1},
        {{"s2q4", "s4q5"}, 1}, {{"s3q3", "s2q4"}, 2}, {{"s1q4", "s2q4"}, 1}, {{"s1q4", "s3bot"}, 1}};
    CHECK(named_edges(p) == expected);
    CHECK(product_state_name(p, p.entry[0]) == "s0q1");
    CHECK(is_stratified(p.chain, p.letters, p.k));
    // labels lose the operands of earlier phases; the sink has none
    const auto s1q4 = p.find(1, AutState::phase(4));
    REQUIRE(s1q4);
    CHECK(p.chain.labels().names_of(*s1q4) == std::vector<std::string>{"f4"});
    CHECK(p.chain.labels().names_of(*p.find(3, AutState::bottom())).empty());
    const auto bare = build_product(c, letters_of(c, phi), phi.k(), std::vector<State>{0});
    CHECK(bare.chain.labels().names_of(*s1q4).empty());
    const auto& named = p;
    CHECK(named.chain.labels().names_of(named.entry[0]) == std::vector<std::string>{"f1", "f4"});
}

TEST_CASE("product of the running example with the second chain", "[product]") {
    const auto p = build_product(running_example(), parse_path(kPhi2), State{0});
    CHECK(names(p) == std::set<std::string>{"s0q1", "s1q1", "s2q4", "s3q3"});
    const auto good = p.find(2, AutState::phase(4));
    REQUIRE(good);
    CHECK(p.chain.is_absorbing(*good));
    CHECK(is_stratified(p.chain, p.letters, p.k));
}

TEST_CASE("a final-operand start state is a single good state", "[product]") {
    Labeling l(2);
    l.add(0, "b");
    const Ctmc c(2, {{0, 1, 1.0}, {1, 0, 1.0}}, l);
    const auto p = build_product(c, parse_path("a U[0,1) b"), State{0});
    CHECK(p.num_states() == 1);
    CHECK(p.chain.is_absorbing(0));
    CHECK(p.tag[0] == AutState::phase(2));
}

TEST_CASE("initial distribution lifts to the product", "[product]") {
    const auto c = running_example();
    const auto p = build_product(c, parse_path(kPhi1), Distribution{0.25, 0.25, 0.5, 0.0, 0.0});
    REQUIRE(p.chain.initial());
    const auto& a = *p.chain.initial();
    CHECK(a[p.entry[0]] == 0.25);
    CHECK(a[p.entry[1]] == 0.25);
    CHECK(a[p.entry[2]] == 0.5);
    CHECK(product_state_name(p, p.entry[2]) == "s2q4");
}

TEST_CASE("products of random chains are bounded, stratified and correspond to the chain", "[product]") {
    testing_support::Rng rng(21);
    for (int round = 0; round < 150; ++round) {
        const std::size_t k = 2 + round % 4;
        const auto c = testing_support::random_ctmc(rng, {8, 20, k, 0.4, true});
        const auto phi = testing_support::random_chain(rng, k, {});
        const auto letters = letters_of(c, phi);
        std::vector<State> starts;
        for (State s = 0; s < c.num_states(); ++s)
            starts.push_back(s);
        const auto p = build_product(c, letters, k, starts);
        INFO("round " << round);
        REQUIRE(is_stratified(p.chain, p.letters, k));
        CHECK(p.num_states() <= c.num_states() * (k + 1));
        CHECK(p.chain.num_transitions() <= c.num_transitions() * (k + 1));
        for (State x = 0; x < p.num_states(); ++x) {
            // good and bad states absorb
            if (!p.stratum(x) || *p.stratum(x) == k)
                CHECK(p.chain.is_absorbing(x));
            // every product transition projects to a chain transition with the same rate
            for (const auto& e : p.chain.row(x)) {
                CHECK(c.rate(p.origin[x], p.origin[e.target]) == e.value);
                CHECK(p.tag[e.target] == delta(p.tag[x], letters[p.origin[e.target]], k));
                CHECK((letters[p.origin[x]] & letter_range(p.tag[x].index(), k - 1)) != 0);
            }
            // product letters drop earlier operands
            if (!p.tag[x].is_bottom())
                CHECK(p.letters[x] == (letters[p.origin[x]] & letter_range(p.tag[x].index(), k)));
            else
                CHECK(p.letters[x] == 0);
        }
        // lifting chain paths of length <= 4 from each start gives product paths
        for (std::size_t i = 0; i < starts.size(); ++i) {
            std::vector<std::pair<State, State>> frontier{{starts[i], p.entry[i]}};
            for (int depth = 0; depth < 4 && !frontier.empty(); ++depth) {
                std::vector<std::pair<State, State>> next;
                for (auto [s, x] : frontier) {
                    if (p.chain.is_absorbing(x))
                        continue;
                    for (const auto& e : c.row(s)) {
                        const auto y = p.find(e.target, delta(p.tag[x], letters[e.target], k));
                        REQUIRE(y);
                        CHECK(p.chain.rate(x, *y) == e.value);
                        next.push_back({e.target, *y});
                    }
                }
                if (next.size() > 200)
                    next.resize(200);
                frontier.swap(next);
            }
        }
    }
}
