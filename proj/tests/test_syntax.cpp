#include <catch2/catch.hpp>

#include <set>

#include "prexpect/corpus.hpp"
#include "prexpect/syntax.hpp"

using namespace prexpect;

namespace {

Command rec3_body() {
    return Command::pchoice(
        Command::skip(), Rational(1, 2),
        Command::seq(Command::call("P"), Command::seq(Command::call("P"), Command::call("P"))));
}

std::size_t count_calls(const Command& c) {
    std::size_t n = c.kind == Command::Kind::Call ? 1 : 0;
    for (const auto& k : c.kids) n += count_calls(k);
    return n;
}

void collect_labeled(const Command& c, std::vector<const Command*>& out) {
    if (c.kind != Command::Kind::Seq) out.push_back(&c);
    for (const auto& k : c.kids) collect_labeled(k, out);
}

} // namespace

TEST_CASE("call substitution replaces only the targeted procedure") {
    CHECK(substitute_calls(Command::skip(), "P", Command::abort()) == Command::skip());
    CHECK(substitute_calls(Command::call("P"), "P", Command::abort()) == Command::abort());

    Command both = Command::seq(Command::call("P"), Command::call("Q"));
    Command out = substitute_calls(both, "P", Command::skip());
    CHECK(out == Command::seq(Command::skip(), Command::call("Q")));

    Command nested = Command::if_(BoolExpr::lit(true), Command::call("P"),
                                  Command::pchoice(Command::call("P"), Rational(1, 3),
                                                   Command::call("Q")));
    Command replaced = substitute_calls(nested, "P", Command::abort());
    CHECK(count_calls(replaced) == 1);
}

TEST_CASE("n-th inlinings") {
    std::map<std::string, Command> decls{{"P", rec3_body()}};

    SECTION("level zero is abort") {
        CHECK(inline_call(decls, "P", 0) == Command::abort());
    }
    SECTION("level one substitutes aborts into the body") {
        Command expected = substitute_calls(rec3_body(), "P", Command::abort());
        CHECK(inline_call(decls, "P", 1) == expected);
    }
    SECTION("a call-free body is its own inlining") {
        std::map<std::string, Command> simple{{"P", Command::skip()}};
        CHECK(inline_call(simple, "P", 3) == Command::skip());
    }
    SECTION("inlinings are call-free and follow the definitional recurrence") {
        for (std::size_t n = 0; n <= 4; ++n) {
            Command level = inline_call(decls, "P", n);
            CHECK(command_is_closed(level));
            if (n > 0) {
                std::map<std::string, Command> repl{{"P", inline_call(decls, "P", n - 1)}};
                CHECK(level == substitute_calls(rec3_body(), repl));
            }
        }
    }
    SECTION("undeclared callee is an error") {
        std::map<std::string, Command> bad{{"P", Command::call("Q")}};
        CHECK_THROWS_AS(inline_call(bad, "P", 2), AnalysisError);
    }
}

TEST_CASE("while desugaring produces the recursive declaration") {
    BoolExpr g = BoolExpr::cmp(BoolExpr::CmpOp::Gt, IntExpr::var("x"), IntExpr::lit(0));
    Command body = Command::assign("x", IntExpr::binary(IntExpr::Kind::Sub, IntExpr::var("x"),
                                                        IntExpr::lit(1)));
    auto [name, decl] = desugar_while(g, body, "__loop1");
    CHECK(name == "__loop1");
    CHECK(decl == Command::if_(g, Command::seq(body, Command::call("__loop1")), Command::skip()));
}

TEST_CASE("canonical labeling of the triple-call choice") {
    Program p;
    p.decls.push_back({"P", rec3_body()});
    p.main = Command::call("P");
    LabeledProgram lp = label_program(p);

    // body labels: skip=1, choice=2, calls 3,4,5; main call = 6
    CHECK(lp.init_of("P") == 2);
    CHECK(lp.succ1(1) == kLabelDown);
    CHECK(lp.succ2(2) == 3);
    CHECK(lp.succ1(2) == 1);
    CHECK(lp.succ1(3) == 4);
    CHECK(lp.succ1(4) == 5);
    CHECK(lp.succ1(5) == kLabelDown);
    CHECK(lp.stmt(2).kind == Command::Kind::PChoice);
    CHECK(lp.main_init == 6);
    CHECK(lp.succ1(6) == kLabelDown);
}

TEST_CASE("labeling simple shapes") {
    SECTION("skip-only main has one label with no successor") {
        Program p;
        p.main = Command::skip();
        LabeledProgram lp = label_program(p);
        CHECK(lp.label_count() == 1);
        CHECK(lp.main_init == 1);
        CHECK(lp.succ1(1) == kLabelDown);
    }
    SECTION("sequencing is encoded in the successor function") {
        Program p;
        p.vars.push_back({"x", 0, 3});
        p.main = Command::seq(Command::assign("x", IntExpr::lit(1)),
                              Command::assign("x", IntExpr::lit(2)));
        LabeledProgram lp = label_program(p);
        CHECK(lp.label_count() == 2);
        CHECK(lp.succ1(1) == 2);
        CHECK(lp.succ1(2) == kLabelDown);
    }
    SECTION("if is labeled before its branches") {
        Program p;
        p.vars.push_back({"x", 0, 1});
        p.main = Command::if_(BoolExpr::lit(true), Command::skip(), Command::abort());
        LabeledProgram lp = label_program(p);
        CHECK(lp.main_init == 1);
        CHECK(lp.stmt(1).kind == Command::Kind::If);
        CHECK(lp.succ1(1) == 2);
        CHECK(lp.succ2(1) == 3);
    }
}

TEST_CASE("labeling is a bijection between statement nodes and labels") {
    for (const auto& entry : corpus()) {
        Program p = load_corpus(entry.name);
        LabeledProgram lp = label_program(p);
        std::vector<const Command*> nodes;
        for (const auto& d : lp.program->decls) collect_labeled(d.body, nodes);
        collect_labeled(lp.program->main, nodes);
        REQUIRE(nodes.size() == lp.label_count());
        std::set<const Command*> seen;
        for (Label l = 1; l <= static_cast<Label>(lp.label_count()); ++l)
            seen.insert(&lp.stmt(l));
        CHECK(seen.size() == nodes.size());
        for (const Command* n : nodes) CHECK(seen.count(n) == 1);
    }
}
