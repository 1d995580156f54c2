#include <catch2/catch.hpp>

#include "prexpect/expectation.hpp"
#include "prexpect/rational.hpp"

using namespace prexpect;

TEST_CASE("rational arithmetic stays normalized") {
    Rational half(1, 2), third(1, 3);
    CHECK((half + third) == Rational(5, 6));
    CHECK((half * third) == Rational(1, 6));
    CHECK((Rational(1) - half) == half);
    CHECK(Rational(2, 4) == half);
    CHECK(Rational(-1, -2) == half);
    CHECK(Rational(3, -6) == Rational(-1, 2));
    CHECK(Rational(5, 6).str() == "5/6");
    CHECK(Rational(2).str() == "2");
    CHECK(half < Rational(2, 3));
    CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("extended-value operation table") {
    const double inf = ext::inf;
    // exhaustive over a small grid, the 0 * inf = 0 convention included
    const double grid[] = {0.0, 1.0, 2.5, inf};
    for (double a : grid) {
        CHECK(ext::mul(0.0, a) == 0.0);
        CHECK(ext::mul(a, 0.0) == 0.0);
        if (a != 0.0) CHECK(ext::mul(a, inf) == inf);
        CHECK(a + inf == inf);
        CHECK(ext::diff(a, a) == 0.0);
    }
    CHECK(ext::mul(2.5, 2.0) == 5.0);
    CHECK(ext::monus(3.0, 1.0) == 2.0);
    CHECK(ext::monus(1.0, 3.0) == 0.0);
    CHECK(ext::monus(inf, inf) == 0.0);
    CHECK(ext::monus(inf, 5.0) == inf);
    CHECK(ext::monus(5.0, inf) == 0.0);
    CHECK(ext::diff(inf, inf) == 0.0);
    CHECK(ext::diff(inf, 1.0) == inf);
}

TEST_CASE("expectation order and algebra") {
    Expectation zero = Expectation::zero(4);
    Expectation one = Expectation::one(4);
    Expectation f({1.0, 0.0, 0.0, 1.0});
    Expectation g({0.0, 1.0, 0.0, 1.0});

    CHECK(leq(zero, f, 0.0));
    CHECK(leq(zero, one, 0.0));
    CHECK_FALSE(leq(one, f, 0.0));
    CHECK(leq(one, one, 0.0));

    Expectation sup = sup_pointwise(f, g);
    CHECK(sup[0] == 1.0);
    CHECK(sup[1] == 1.0);
    CHECK(sup[2] == 0.0);
    Expectation inf_fg = inf_pointwise(f, g);
    CHECK(inf_fg[0] == 0.0);
    CHECK(inf_fg[3] == 1.0);

    Expectation s = add(scale(2.0, f), g);
    CHECK(s[0] == 2.0);
    CHECK(s[3] == 3.0);
    CHECK(max_diff(f, f) == 0.0);
    CHECK(max_diff(f, g) == 1.0);

    Expectation with_inf(std::vector<double>{ext::inf, 1.0});
    CHECK(leq(with_inf, Expectation::constant(2, ext::inf), 0.0));
    CHECK(scale(0.0, with_inf)[0] == 0.0); // 0 * inf = 0
}

TEST_CASE("finite ascending chains have pointwise suprema") {
    // upper omega-cpo structure at the scale we enumerate: the sup of a finite
    // ascending chain is the elementwise max
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Expectation> chain;
        Expectation cur(6, 0.0);
        for (int i = 0; i < 5; ++i) {
            for (std::size_t s = 0; s < 6; ++s) cur[s] += u(rng);
            chain.push_back(cur);
        }
        Expectation sup = chain.front();
        for (const auto& f : chain) sup = sup_pointwise(sup, f);
        CHECK(max_diff(sup, chain.back()) == 0.0);
        for (const auto& f : chain) CHECK(leq(f, sup, 0.0));
    }
}

TEST_CASE("matrix products respect the zero guard") {
    Matrix id = Matrix::identity(3);
    Expectation f({1.0, ext::inf, 2.0});
    Expectation r = id.apply(f);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == ext::inf);
    CHECK(r[2] == 2.0);

    Matrix m(3);
    m.at(0, 1) = 0.5;
    m.at(0, 2) = 0.5;
    m.at(1, 0) = 1.0;
    m.at(2, 2) = 1.0;
    Expectation g({0.0, 4.0, ext::inf});
    Expectation mg = m.apply(g);
    CHECK(mg[0] == ext::inf);
    CHECK(mg[1] == 0.0); // row 1 hits only the zero entry
    CHECK(mg[2] == ext::inf);

    Expectation no_inf({0.0, 4.0, 6.0});
    Expectation both = (m * m).apply(no_inf);
    Expectation chained = m.apply(m.apply(no_inf));
    CHECK(max_diff(both, chained) < 1e-12);
}

TEST_CASE("dense solve matches hand-computed absorbing chain") {
    // x0 = 0.5 x1 + 0.5; x1 = x0  =>  x0 = x1 = 1
    std::vector<std::vector<double>> a = {{1.0, -0.5}, {-1.0, 1.0}};
    std::vector<double> b = {0.5, 0.0};
    std::vector<double> x = solve_dense(a, b);
    CHECK(x[0] == Approx(1.0));
    CHECK(x[1] == Approx(1.0));
}
