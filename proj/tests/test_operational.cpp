#include <catch2/catch.hpp>

#include <random>

#include "prexpect/corpus.hpp"
#include "prexpect/operational.hpp"
#include "prexpect/parser.hpp"

using namespace prexpect;

TEST_CASE("single steps follow the transition rules") {
    Program p = load_corpus("rec3");
    StateSpace sp(p);
    LabeledProgram lp = label_program(p);

    SECTION("skip moves to its successor without touching the stack") {
        auto ts = step(PrmcConfig{1, 0, {}}, lp, sp); // label 1 is the skip
        REQUIRE(ts.size() == 1);
        CHECK(ts[0].prob == Rational(1));
        CHECK(ts[0].next.control == kLabelDown);
        CHECK(ts[0].next.stack.empty());
    }
    SECTION("returning pops the address pushed by a call") {
        auto ts = step(PrmcConfig{kLabelDown, 0, {4}}, lp, sp);
        REQUIRE(ts.size() == 1);
        CHECK(ts[0].next.control == 4);
        CHECK(ts[0].next.stack.empty());
        CHECK(ts[0].push == "ε");
    }
    SECTION("termination fires only on the bottom symbol") {
        auto ts = step(PrmcConfig{kLabelDown, 0, {}}, lp, sp);
        REQUIRE(ts.size() == 1);
        CHECK(ts[0].next.control == kLabelTerm);
    }
    SECTION("the probabilistic choice splits one half each") {
        auto ts = step(PrmcConfig{2, 0, {}}, lp, sp);
        REQUIRE(ts.size() == 2);
        CHECK(ts[0].prob == Rational(1, 2));
        CHECK(ts[1].prob == Rational(1, 2));
        CHECK(ts[0].next.control == 1);
        CHECK(ts[1].next.control == 3);
    }
    SECTION("calls push their return address") {
        auto ts = step(PrmcConfig{3, 0, {}}, lp, sp);
        REQUIRE(ts.size() == 1);
        CHECK(ts[0].next.control == 2); // init of the body
        REQUIRE(ts[0].next.stack.size() == 1);
        CHECK(ts[0].next.stack[0] == 4);
        CHECK(ts[0].push == "γ·4");
    }
    SECTION("outgoing probabilities always sum to one") {
        for (const auto& entry : corpus()) {
            Program prog = load_corpus(entry.name);
            if (entry.name == "binsearch") continue;
            StateSpace space(prog);
            LabeledProgram lprog = label_program(prog);
            PrmcSystem sys = build_system(lprog, space, {0}, 3, 100000);
            for (std::size_t id = 0; id < sys.configs.size(); ++id) {
                const PrmcConfig& cfg = sys.configs[id];
                if (cfg.control == kLabelTerm) continue;
                Rational total(0);
                for (const Transition& t : step(cfg, lprog, space)) total = total + t.prob;
                INFO(entry.name);
                CHECK(total == Rational(1));
            }
        }
    }
}

TEST_CASE("bounded expected rewards") {
    SECTION("a skip main yields the reward at the unchanged state") {
        Program p = parse_program("var x : 0..2;\nmain { skip }");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        Expectation f = eval_expectation(parse_expectation("x + 1", p), sp);
        for (std::size_t s = 0; s < sp.size(); ++s) {
            RewardResult r = expected_reward_bounded(lp, sp, s, f, 4);
            CHECK(r.value == Approx(f[s]));
            CHECK_FALSE(r.truncated);
        }
    }
    SECTION("an abort main never reaches the target states") {
        Program p = parse_program("main { abort }");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        RewardResult r = expected_reward_bounded(lp, sp, 0, Expectation::one(1), 4);
        CHECK(r.value == 0.0);
    }
    SECTION("the triple-call recursion approaches the golden ratio reciprocal") {
        Program p = load_corpus("rec3");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        // at stack bound n the truncated chain realizes exactly the n-th
        // approximation phi_n; the phi sequence itself converges to the limit
        std::vector<double> phi = {0.0};
        for (int i = 0; i < 40; ++i)
            phi.push_back(0.5 + 0.5 * phi.back() * phi.back() * phi.back());
        RewardResult r = expected_reward_bounded(lp, sp, 0, Expectation::one(1), 8);
        CHECK(r.value == Approx(phi[8]).margin(1e-9));
        CHECK(r.truncated);
        CHECK(phi[40] == Approx(0.6180339887).margin(1e-6));
        CHECK(r.value == Approx(0.6180339887).margin(2e-3));
    }
    SECTION("rewards are monotone in the stack bound and in the reward function") {
        Program p = load_corpus("rec3");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        double prev = -1.0;
        for (std::size_t bound = 0; bound <= 8; ++bound) {
            RewardResult r = expected_reward_bounded(lp, sp, 0, Expectation::one(1), bound);
            CHECK(r.value >= prev - 1e-12);
            prev = r.value;
        }
        RewardResult small = expected_reward_bounded(lp, sp, 0, Expectation::constant(1, 0.5), 6);
        RewardResult large = expected_reward_bounded(lp, sp, 0, Expectation::one(1), 6);
        CHECK(small.value <= large.value + 1e-12);
    }
    SECTION("the configuration cap is enforced") {
        Program p = load_corpus("rec3");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        RewardOptions opts;
        opts.max_configs = 10;
        CHECK_THROWS_AS(expected_reward_bounded(lp, sp, 0, Expectation::one(1), 8, opts),
                        AnalysisError);
    }
    SECTION("the dense-solve path gives the same answers") {
        Program p = load_corpus("randomwalk");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        RewardOptions dense;
        dense.dense_solve_limit = 1500;
        for (std::size_t s = 0; s < sp.size(); ++s) {
            RewardResult a = expected_reward_bounded(lp, sp, s, Expectation::one(sp.size()), 4);
            RewardResult b =
                expected_reward_bounded(lp, sp, s, Expectation::one(sp.size()), 4, dense);
            CHECK(a.value == Approx(b.value).margin(1e-9));
        }
    }
}

TEST_CASE("value iteration agrees with the dense linear solve") {
    for (const auto& name : {"coins", "rec3", "evenodd", "skiporabort", "randomwalk"}) {
        Program p = load_corpus(name);
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        std::vector<std::size_t> inits(sp.size());
        for (std::size_t s = 0; s < sp.size(); ++s) inits[s] = s;
        PrmcSystem sys = build_system(lp, sp, inits, 4, 100000);
        REQUIRE(sys.configs.size() <= 1500);
        Expectation f = Expectation::one(sp.size());
        std::vector<double> vi = solve_values(sys, f, 1e-12, 200000);
        std::vector<double> dense = solve_values_dense(sys, f);
        double gap = 0.0;
        for (std::size_t i = 0; i < vi.size(); ++i) gap = std::max(gap, ext::diff(vi[i], dense[i]));
        INFO(name);
        CHECK(gap < 1e-9);
    }
}

TEST_CASE("correspondence with the level-n environments") {
    SECTION("level zero treats calls as divergent on both sides") {
        for (const auto& entry : corpus()) {
            if (std::string(entry.name) == "binsearch") continue;
            Program p = load_corpus(entry.name);
            StateSpace sp(p);
            LabeledProgram lp = label_program(p);
            INFO(entry.name);
            CHECK(correspondence_max_gap(lp, sp, Expectation::one(sp.size()), 0) < 1e-12);
        }
    }
    SECTION("triple-call recursion, levels one to five") {
        Program p = load_corpus("rec3");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        for (std::size_t n = 1; n <= 5; ++n)
            CHECK(correspondence_check(lp, sp, 0, Expectation::one(1), n) < 1e-9);
    }
    SECTION("call-free programs have no stack activity at any level") {
        Program p = load_corpus("coins");
        StateSpace sp(p);
        LabeledProgram lp = label_program(p);
        Expectation f = eval_expectation(parse_expectation("[x = y]", p), sp);
        for (std::size_t n = 0; n <= 3; ++n)
            CHECK(correspondence_max_gap(lp, sp, f, n) < 1e-12);
    }
}

TEST_CASE("simulation is deterministic and statistically sane") {
    Program p = load_corpus("coins");
    StateSpace sp(p);
    LabeledProgram lp = label_program(p);
    Expectation f = eval_expectation(parse_expectation("[x = y]", p), sp);

    SimulationResult a = simulate(lp, sp, 0, f, 20000, 100, 7);
    SimulationResult b = simulate(lp, sp, 0, f, 20000, 100, 7);
    CHECK(a.mean_reward == b.mean_reward);
    CHECK(a.term_fraction == 1.0);
    CHECK(a.mean_reward == Approx(0.5).margin(0.02));

    // different seeds draw different streams; with three seeds an accidental
    // full collision of the empirical means is out of the question
    SimulationResult c = simulate(lp, sp, 0, f, 20000, 100, 8);
    SimulationResult d2 = simulate(lp, sp, 0, f, 20000, 100, 9);
    CHECK((a.mean_reward != c.mean_reward || a.mean_reward != d2.mean_reward));

    Program ab = parse_program("main { abort }");
    StateSpace spab(ab);
    LabeledProgram lpab = label_program(ab);
    SimulationResult d = simulate(lpab, spab, 0, Expectation::one(1), 100, 50, 3);
    CHECK(d.term_fraction == 0.0);
}

TEST_CASE("dot export matches the label-level graph") {
    Program p = load_corpus("rec3");
    LabeledProgram lp = label_program(p);
    std::string dot = export_dot(lp);

    // the call at label 3 pushes 4 and re-enters the body at its init 2
    CHECK(dot.find("3 -> 2 [label=\"γ,1,γ·4\"]") != std::string::npos);
    CHECK(dot.find("4 -> 2 [label=\"γ,1,γ·5\"]") != std::string::npos);
    // the last call pushes the procedure-termination symbol
    CHECK(dot.find("5 -> 2 [label=\"γ,1,γ·↓\"]") != std::string::npos);
    CHECK(dot.find("down -> term [label=\"γ₀,1,γ₀\"]") != std::string::npos);
    CHECK(dot.find("down -> 4 [label=\"4,1,ε\"]") != std::string::npos);

    SECTION("a skip-only main is a three-node chain") {
        Program q = parse_program("main { skip }");
        LabeledProgram lq = label_program(q);
        std::string d = export_dot(lq);
        CHECK(d.find("1 -> down") != std::string::npos);
        CHECK(d.find("down -> term") != std::string::npos);
        CHECK(d.find("2 ->") == std::string::npos);
    }
    SECTION("each procedure body keeps its own entry node") {
        Program q = load_corpus("evenodd");
        LabeledProgram lq = label_program(q);
        std::string d = export_dot(lq);
        CHECK(lq.init_of("Even") != lq.init_of("Odd"));
        CHECK(d.find(std::to_string(lq.init_of("Even")) + " ->") != std::string::npos);
        CHECK(d.find(std::to_string(lq.init_of("Odd")) + " ->") != std::string::npos);
    }
}
