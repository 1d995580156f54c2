#include <catch2/catch.hpp>

#include <random>

#include "prexpect/expectation_expr.hpp"
#include "prexpect/parser.hpp"

using namespace prexpect;

namespace {

Program two_vars() {
    return parse_program("var x : 0..1;\nvar y : 0..1;\nmain { skip }");
}

std::size_t state_of(const StateSpace& sp, std::initializer_list<long long> values) {
    for (std::size_t s = 0; s < sp.size(); ++s) {
        bool match = true;
        std::size_t i = 0;
        for (long long v : values) match = match && sp.value_at(s, i++) == v;
        if (match) return s;
    }
    FAIL("no such state");
    return 0;
}

} // namespace

TEST_CASE("state enumeration is mixed-radix, first variable fastest") {
    Program p = two_vars();
    StateSpace sp(p);
    REQUIRE(sp.size() == 4);
    CHECK(sp.value_at(0, 0) == 0);
    CHECK(sp.value_at(1, 0) == 1); // x fastest
    CHECK(sp.value_at(1, 1) == 0);
    CHECK(sp.value_at(2, 1) == 1);
    CHECK(sp.describe(3) == "x=1, y=1");

    Program empty = parse_program("main { skip }");
    StateSpace esp(empty);
    CHECK(esp.size() == 1);
}

TEST_CASE("integer evaluation") {
    Program p = parse_program("var x : 0..5;\nvar mid : 0..2;\nvar right : 0..3;\n"
                              "param a : array int;\nmain { skip }");
    ParamBinding bind;
    bind["a"] = std::vector<long long>{4, 7, 9};
    StateSpace sp(p, bind);

    std::size_t s = state_of(sp, {2, 1, 3});
    CHECK(eval_int(parse_program("var x : 0..5;\nmain { x := x + 1 }").main.exprs[0], s, sp) == 3);
    ExpectationExpr minexpr = parse_expectation("min(mid + 1, right)", p);
    CHECK(eval_expectation(minexpr, sp)[state_of(sp, {0, 2, 3})] == 3.0); // min clamps
    CHECK(eval_expectation(minexpr, sp)[state_of(sp, {0, 2, 2})] == 2.0);
    ExpectationExpr arr = parse_expectation("a[mid]", p);
    CHECK(eval_expectation(arr, sp)[state_of(sp, {0, 1, 0})] == 7.0);

    SECTION("array index out of bounds is an analysis error, reported with the state") {
        // right ranges to 3 but the array has three entries
        ExpectationExpr bad = parse_expectation("a[right]", p);
        CHECK_THROWS_WITH(eval_expectation(bad, sp),
                          Catch::Contains("out of bounds") && Catch::Contains("right=3"));
    }
}

TEST_CASE("indicator expectations") {
    Program p = two_vars();
    StateSpace sp(p);
    Expectation ind = eval_expectation(parse_expectation("[x = y]", p), sp);
    CHECK(ind[state_of(sp, {0, 0})] == 1.0);
    CHECK(ind[state_of(sp, {1, 0})] == 0.0);
    CHECK(ind[state_of(sp, {0, 1})] == 0.0);
    CHECK(ind[state_of(sp, {1, 1})] == 1.0);
}

TEST_CASE("harmonic numbers and infinity") {
    Program p = two_vars();
    StateSpace sp(p);
    CHECK(eval_expectation(parse_expectation("harmonic(3)", p), sp)[0] ==
          Approx(11.0 / 6.0).epsilon(1e-12));
    CHECK(eval_expectation(parse_expectation("harmonic(0 - 2)", p), sp)[0] == 0.0);
    // 0 * inf = 0 at states where the guard fails
    Expectation e = eval_expectation(parse_expectation("inf * [x > 0]", p), sp);
    CHECK(e[state_of(sp, {0, 0})] == 0.0);
    CHECK(e[state_of(sp, {1, 0})] == ext::inf);
}

TEST_CASE("monus keeps the DSL total, negative results are errors") {
    Program p = two_vars();
    StateSpace sp(p);
    CHECK(eval_expectation(parse_expectation("1 - 3", p), sp)[0] == 0.0);
    CHECK(eval_expectation(parse_expectation("x - 1", p), sp)[state_of(sp, {0, 0})] == 0.0);
    // pow admits negative bases; the whole expression must stay nonnegative
    Expectation a = eval_expectation(
        parse_expectation("(121 + 210 * x + 432 * pow(-1/6, x + 1)) * (1/49)", p), sp);
    CHECK(a[state_of(sp, {0, 0})] == Approx(1.0));
    CHECK_THROWS_AS(eval_expectation(parse_expectation("pow(-1/2, 1)", p), sp), AnalysisError);
}

TEST_CASE("index evaluation") {
    Program p = two_vars();
    StateSpace sp(p);
    ExpectationExpr fam = parse_expectation("[x <= n] * 3", p, true);
    CHECK(eval_expectation(fam, sp, 0)[state_of(sp, {1, 0})] == 0.0);
    CHECK(eval_expectation(fam, sp, 1)[state_of(sp, {1, 0})] == 3.0);
    CHECK_THROWS_AS(eval_expectation(fam, sp), AnalysisError);           // index missing
    ExpectationExpr plain = parse_expectation("x", p);
    CHECK_THROWS_AS(eval_expectation(plain, sp, 1), AnalysisError);      // index unused
}

TEST_CASE("substitution in expectations") {
    Program p = parse_program("var x : 0..2;\nmain { skip }");
    StateSpace sp(p);
    Expectation f = eval_expectation(parse_expectation("[x = 1]", p), sp);

    SECTION("shifting the indicator") {
        // x+1 leaves the domain at the top state; the strict substitution
        // rejects it, the lenient one answers everywhere it is defined
        IntExpr xp1 = IntExpr::binary(IntExpr::Kind::Add, IntExpr::var("x"), IntExpr::lit(1));
        CHECK_THROWS_AS(substitute_in_expectation(f, "x", xp1, sp), AnalysisError);
        Expectation g = substitute_lenient(f, "x", xp1, sp);
        CHECK(g[0] == 1.0); // (0+1) = 1
        CHECK(g[1] == 0.0);
        CHECK_THROWS_AS(substitute_in_expectation(f, "x", IntExpr::lit(5), sp), AnalysisError);
    }
    SECTION("identity substitution") {
        Expectation g = substitute_in_expectation(f, "x", IntExpr::var("x"), sp);
        CHECK(max_diff(f, g) == 0.0);
    }
    SECTION("constant substitution flattens") {
        Expectation vx = eval_expectation(parse_expectation("x", p), sp);
        Expectation g = substitute_in_expectation(vx, "x", IntExpr::lit(0), sp);
        CHECK(max_diff(g, Expectation::zero(sp.size())) == 0.0);
    }
    SECTION("lenient substitution poisons out-of-domain targets only") {
        Expectation g = substitute_lenient(f, "x", IntExpr::binary(IntExpr::Kind::Add,
                                                                   IntExpr::var("x"),
                                                                   IntExpr::lit(1)),
                                           sp);
        CHECK(g[0] == 1.0);
        CHECK(std::isnan(g[2]));
        CHECK(first_nan(g).value() == 2);
    }
}

TEST_CASE("substitution respects composition") {
    Program p = parse_program("var x : 0..6;\nmain { skip }");
    StateSpace sp(p);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    IntExpr e1 = IntExpr::binary(IntExpr::Kind::Min,
                                 IntExpr::binary(IntExpr::Kind::Add, IntExpr::var("x"),
                                                 IntExpr::lit(2)),
                                 IntExpr::lit(6));
    IntExpr e2 = IntExpr::binary(IntExpr::Kind::Max,
                                 IntExpr::binary(IntExpr::Kind::Sub, IntExpr::var("x"),
                                                 IntExpr::lit(1)),
                                 IntExpr::lit(0));
    // e1 with x := e2
    IntExpr composed = IntExpr::binary(IntExpr::Kind::Min,
                                       IntExpr::binary(IntExpr::Kind::Add, e2, IntExpr::lit(2)),
                                       IntExpr::lit(6));
    for (int trial = 0; trial < 30; ++trial) {
        Expectation f(sp.size(), 0.0);
        for (std::size_t s = 0; s < sp.size(); ++s) f[s] = u(rng);
        Expectation lhs =
            substitute_in_expectation(substitute_in_expectation(f, "x", e1, sp), "x", e2, sp);
        Expectation rhs = substitute_in_expectation(f, "x", composed, sp);
        CHECK(max_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("random well-formed expressions stay within [0, inf]") {
    Program p = two_vars();
    StateSpace sp(p);
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> pick(0, 6);
    // generator for expressions built from nonnegativity-preserving nodes
    std::function<std::string(int)> gen = [&](int depth) -> std::string {
        if (depth == 0) {
            switch (pick(rng) % 4) {
                case 0: return "1/2";
                case 1: return "x";
                case 2: return "[x = y]";
                default: return "harmonic(y + 1)";
            }
        }
        std::string a = gen(depth - 1), b = gen(depth - 1);
        switch (pick(rng)) {
            case 0: return "(" + a + " + " + b + ")";
            case 1: return "(" + a + " - " + b + ")";
            case 2: return "(" + a + " * " + b + ")";
            case 3: return "min(" + a + ", " + b + ")";
            case 4: return "max(" + a + ", " + b + ")";
            case 5: return "(" + a + " * inf)";
            default: return "pow(1/2, x + y)";
        }
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::string text = gen(3);
        INFO(text);
        Expectation e = eval_expectation(parse_expectation(text, p), sp);
        for (std::size_t s = 0; s < sp.size(); ++s) CHECK(e[s] >= 0.0);
    }
}
