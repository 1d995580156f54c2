#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prexpect/ast.hpp"
#include "prexpect/expectation_expr.hpp"
#include "prexpect/syntax.hpp"

namespace prexpect {

struct SourceUnit {
    std::string text;
    std::string origin = "<inline>";
};

namespace detail {

struct Token {
    enum class Kind { Ident, Int, Symbol, End };
    Kind kind = Kind::End;
    std::string text;
    long long int_value = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) {
        int line = 1, col = 1;
        std::size_t i = 0;
        auto advance = [&](std::size_t k) {
            for (std::size_t j = 0; j < k; ++j, ++i) {
                if (src[i] == '\n') { ++line; col = 1; } else { ++col; }
            }
        };
        while (i < src.size()) {
            char c = src[i];
            if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
                while (i < src.size() && src[i] != '\n') advance(1);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) { advance(1); continue; }
            Token t;
            t.line = line;
            t.col = col;
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i;
                while (j < src.size() &&
                       (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                    ++j;
                t.kind = Token::Kind::Ident;
                t.text = src.substr(i, j - i);
                advance(j - i);
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                t.kind = Token::Kind::Int;
                t.text = src.substr(i, j - i);
                t.int_value = std::stoll(t.text);
                advance(j - i);
            } else {
                static const char* two_char[] = {":=", "..", "<=", ">=", "!=", "&&", "||"};
                std::string pair = src.substr(i, 2);
                bool matched = false;
                for (const char* s : two_char) {
                    if (pair == s) {
                        t.kind = Token::Kind::Symbol;
                        t.text = pair;
                        advance(2);
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    t.kind = Token::Kind::Symbol;
                    t.text = std::string(1, c);
                    advance(1);
                }
            }
            tokens_.push_back(std::move(t));
        }
        Token end;
        end.line = line;
        end.col = col;
        tokens_.push_back(end);
    }

    const std::vector<Token>& tokens() const { return tokens_; }

private:
    std::vector<Token> tokens_;
};

} // namespace detail

// ---------------------------------------------------------------------------

namespace detail {

class ParserBase {
public:
    explicit ParserBase(const std::string& src) : lexer_(src) {}

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        if (i >= lexer_.tokens().size()) i = lexer_.tokens().size() - 1;
        return lexer_.tokens()[i];
    }
    const Token& next() {
        const Token& t = peek();
        if (t.kind != Token::Kind::End) ++pos_;
        return t;
    }
    bool at_symbol(const std::string& s) const {
        return peek().kind == Token::Kind::Symbol && peek().text == s;
    }
    bool at_ident(const std::string& s) const {
        return peek().kind == Token::Kind::Ident && peek().text == s;
    }
    bool eat_symbol(const std::string& s) {
        if (!at_symbol(s)) return false;
        ++pos_;
        return true;
    }
    bool eat_ident(const std::string& s) {
        if (!at_ident(s)) return false;
        ++pos_;
        return true;
    }
    void expect_symbol(const std::string& s) {
        if (!eat_symbol(s)) fail("expected '" + s + "'");
    }
    std::string expect_ident() {
        if (peek().kind != Token::Kind::Ident) fail("expected an identifier");
        return next().text;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + ", got " + got, t.line, t.col);
    }

    std::size_t mark() const { return pos_; }
    void rewind(std::size_t m) { pos_ = m; }

    long long expect_int() {
        bool neg = eat_symbol("-");
        if (peek().kind != Token::Kind::Int) fail("expected an integer");
        long long v = next().int_value;
        return neg ? -v : v;
    }

    // INT, INT "/" INT, or a decimal INT "." digits, converted exactly.
    Rational expect_rational() {
        bool neg = eat_symbol("-");
        if (peek().kind != Token::Kind::Int) fail("expected a number");
        long long whole = next().int_value;
        Rational r(whole);
        if (eat_symbol("/")) {
            if (peek().kind != Token::Kind::Int) fail("expected a denominator");
            long long den = next().int_value;
            if (den == 0) fail("zero denominator");
            r = Rational(whole, den);
        } else if (at_symbol(".") && peek(1).kind == Token::Kind::Int) {
            next();
            const Token& frac = next();
            long long scale = 1;
            for (std::size_t i = 0; i < frac.text.size(); ++i) {
                if (scale > 900000000000000000LL / 10) fail("decimal literal too precise");
                scale *= 10;
            }
            r = Rational(whole) + Rational(frac.int_value, scale);
        }
        return neg ? Rational(0) - r : r;
    }

protected:
    Lexer lexer_;
    std::size_t pos_ = 0;
};

// Identifier resolution context shared by program and DSL expression parsing.
struct NameTable {
    std::vector<VarDecl> vars;
    std::vector<ParamDecl> params;

    bool is_var(const std::string& n) const {
        for (const auto& v : vars)
            if (v.name == n) return true;
        return false;
    }
    const ParamDecl* find_param(const std::string& n) const {
        for (const auto& p : params)
            if (p.name == n) return &p;
        return nullptr;
    }
};

class ExprParser : public ParserBase {
public:
    ExprParser(const std::string& src, NameTable names, bool allow_index, bool allow_prev)
        : ParserBase(src), names_(std::move(names)), allow_index_(allow_index),
          allow_prev_(allow_prev) {}

    bool saw_index = false;
    bool saw_prev = false;

    IntExpr parse_iexpr() {
        IntExpr e = parse_iterm();
        while (at_symbol("+") || at_symbol("-")) {
            bool add = next().text == "+";
            IntExpr rhs = parse_iterm();
            e = IntExpr::binary(add ? IntExpr::Kind::Add : IntExpr::Kind::Sub, std::move(e),
                                std::move(rhs));
        }
        return e;
    }

    BoolExpr parse_bexpr() {
        BoolExpr b = parse_bterm();
        while (at_symbol("||")) {
            next();
            b = BoolExpr::logic(BoolExpr::Kind::Or, std::move(b), parse_bterm());
        }
        return b;
    }

protected:
    IntExpr parse_iterm() {
        IntExpr e = parse_ifactor();
        while (at_symbol("*")) {
            next();
            e = IntExpr::binary(IntExpr::Kind::Mul, std::move(e), parse_ifactor());
        }
        return e;
    }

    IntExpr parse_ifactor() {
        if (eat_symbol("-")) return IntExpr::neg(parse_ifactor());
        if (peek().kind == Token::Kind::Int) return IntExpr::lit(next().int_value);
        if (eat_symbol("(")) {
            IntExpr e = parse_iexpr();
            expect_symbol(")");
            return e;
        }
        if (at_ident("min") || at_ident("max")) {
            bool is_min = next().text == "min";
            expect_symbol("(");
            IntExpr a = parse_iexpr();
            expect_symbol(",");
            IntExpr b = parse_iexpr();
            expect_symbol(")");
            return IntExpr::binary(is_min ? IntExpr::Kind::Min : IntExpr::Kind::Max, std::move(a),
                                   std::move(b));
        }
        if (peek().kind == Token::Kind::Ident) {
            const Token& t = peek();
            std::string name = next().text;
            if (eat_symbol("[")) {
                const ParamDecl* p = names_.find_param(name);
                if (!p || p->kind != ParamDecl::Kind::IntArray)
                    throw ParseError("'" + name + "' is not an array parameter", t.line, t.col);
                IntExpr idx = parse_iexpr();
                expect_symbol("]");
                return IntExpr::array_at(name, std::move(idx));
            }
            resolve_scalar(name, t);
            return IntExpr::var(name);
        }
        fail("expected an integer expression");
    }

    BoolExpr parse_bterm() {
        BoolExpr b = parse_bfactor();
        while (at_symbol("&&")) {
            next();
            b = BoolExpr::logic(BoolExpr::Kind::And, std::move(b), parse_bfactor());
        }
        return b;
    }

    BoolExpr parse_bfactor() {
        if (eat_symbol("!")) return BoolExpr::negate(parse_bfactor());
        if (eat_ident("true")) return BoolExpr::lit(true);
        if (eat_ident("false")) return BoolExpr::lit(false);
        // Try a comparison first; fall back to a parenthesized boolean.
        std::size_t m = mark();
        if (!at_symbol("(")) return parse_cmp();
        try {
            return parse_cmp();
        } catch (const ParseError&) {
            rewind(m);
        }
        expect_symbol("(");
        BoolExpr b = parse_bexpr();
        expect_symbol(")");
        return b;
    }

    BoolExpr parse_cmp() {
        IntExpr lhs = parse_iexpr();
        BoolExpr::CmpOp op;
        if (eat_symbol("=")) op = BoolExpr::CmpOp::Eq;
        else if (eat_symbol("!=")) op = BoolExpr::CmpOp::Ne;
        else if (eat_symbol("<=")) op = BoolExpr::CmpOp::Le;
        else if (eat_symbol("<")) op = BoolExpr::CmpOp::Lt;
        else if (eat_symbol(">=")) op = BoolExpr::CmpOp::Ge;
        else if (eat_symbol(">")) op = BoolExpr::CmpOp::Gt;
        else fail("expected a comparison operator");
        IntExpr rhs = parse_iexpr();
        return BoolExpr::cmp(op, std::move(lhs), std::move(rhs));
    }

    void resolve_scalar(const std::string& name, const Token& t) {
        if (names_.is_var(name)) return;
        if (const ParamDecl* p = names_.find_param(name)) {
            if (p->kind == ParamDecl::Kind::IntArray)
                throw ParseError("array parameter '" + name + "' needs an index", t.line, t.col);
            return;
        }
        if (name == "n" && allow_index_) {
            saw_index = true;
            return;
        }
        if (name == "n")
            throw ParseError("index 'n' is not allowed here", t.line, t.col);
        throw ParseError("unknown identifier '" + name + "'", t.line, t.col);
    }

    NameTable names_;
    bool allow_index_;
    bool allow_prev_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Program parser.

namespace detail {

class ProgramParser : public ExprParser {
public:
    explicit ProgramParser(const std::string& src) : ExprParser(src, NameTable{}, false, false) {}

    Program parse() {
        Program prog;
        while (at_ident("param") || at_ident("var")) {
            if (eat_ident("param")) {
                const Token& t = peek();
                std::string name = declared_ident();
                expect_symbol(":");
                ParamDecl p;
                p.name = name;
                if (eat_ident("array")) {
                    if (!eat_ident("int")) fail("expected 'int' after 'array'");
                    p.kind = ParamDecl::Kind::IntArray;
                } else if (eat_ident("int")) {
                    p.kind = ParamDecl::Kind::Scalar;
                } else {
                    fail("expected 'int' or 'array int'");
                }
                expect_symbol(";");
                check_fresh_name(name, t);
                names_.params.push_back(p);
                prog.params.push_back(p);
            } else {
                eat_ident("var");
                const Token& t = peek();
                std::string name = declared_ident();
                expect_symbol(":");
                long long lo = expect_int();
                expect_symbol("..");
                long long hi = expect_int();
                expect_symbol(";");
                if (lo > hi)
                    throw ParseError("empty domain for variable '" + name + "'", t.line, t.col);
                check_fresh_name(name, t);
                names_.vars.push_back({name, lo, hi});
                prog.vars.push_back({name, lo, hi});
            }
        }
        while (eat_ident("proc")) {
            const Token& t = peek();
            std::string name = declared_ident();
            for (const auto& d : prog.decls)
                if (d.name == name)
                    throw ParseError("duplicate procedure '" + name + "'", t.line, t.col);
            Command body = parse_block();
            prog.decls.push_back({name, std::move(body)});
        }
        if (!eat_ident("main")) fail("expected 'main'");
        prog.main = parse_block();
        if (peek().kind != Token::Kind::End) fail("unexpected trailing input");
        for (auto& lp : loop_procs_) prog.decls.push_back(std::move(lp));
        validate_calls(prog);
        return prog;
    }

private:
    std::string declared_ident() {
        const Token& t = peek();
        std::string name = expect_ident();
        if (name.rfind("__", 0) == 0)
            throw ParseError("identifiers starting with '__' are reserved", t.line, t.col);
        return name;
    }

    void check_fresh_name(const std::string& name, const Token& t) {
        if (names_.is_var(name) || names_.find_param(name))
            throw ParseError("duplicate declaration of '" + name + "'", t.line, t.col);
    }

    Command parse_block() {
        expect_symbol("{");
        std::vector<Command> stmts;
        stmts.push_back(parse_stmt());
        while (eat_symbol(";")) {
            if (at_symbol("}")) break; // tolerate a trailing separator
            stmts.push_back(parse_stmt());
        }
        expect_symbol("}");
        Command c = std::move(stmts.back());
        for (std::size_t i = stmts.size() - 1; i-- > 0;)
            c = Command::seq(std::move(stmts[i]), std::move(c));
        return c;
    }

    Command parse_stmt() {
        if (eat_ident("skip")) return Command::skip();
        if (eat_ident("abort")) return Command::abort();
        if (eat_ident("call")) {
            const Token& t = peek();
            std::string name = expect_ident();
            if (name.rfind("__", 0) == 0)
                throw ParseError("identifiers starting with '__' are reserved", t.line, t.col);
            pending_calls_.push_back({name, t.line, t.col});
            return Command::call(name);
        }
        if (eat_ident("if")) {
            expect_symbol("(");
            BoolExpr g = parse_bexpr();
            expect_symbol(")");
            Command then_c = parse_block();
            if (!eat_ident("else")) fail("expected 'else'");
            Command else_c = parse_block();
            return Command::if_(std::move(g), std::move(then_c), std::move(else_c));
        }
        if (eat_ident("while")) {
            expect_symbol("(");
            BoolExpr g = parse_bexpr();
            expect_symbol(")");
            Command body = parse_block();
            std::string fresh = std::string(kLoopProcPrefix) + std::to_string(++loop_counter_);
            auto [name, decl] = desugar_while(g, body, fresh);
            loop_procs_.push_back({name, std::move(decl)});
            return Command::call(name);
        }
        if (at_symbol("{")) {
            Command left = parse_block();
            expect_symbol("[");
            const Token& pt = peek();
            Rational p = expect_rational();
            if (p < Rational(0) || p > Rational(1))
                throw ParseError("probability " + p.str() + " outside [0, 1]", pt.line, pt.col);
            expect_symbol("]");
            Command right = parse_block();
            return Command::pchoice(std::move(left), p, std::move(right));
        }
        if (peek().kind == Token::Kind::Ident) {
            const Token& t = peek();
            std::string name = next().text;
            if (name.rfind("__", 0) == 0)
                throw ParseError("identifiers starting with '__' are reserved", t.line, t.col);
            if (!names_.is_var(name))
                throw ParseError("assignment to undeclared variable '" + name + "'", t.line, t.col);
            expect_symbol(":=");
            if (eat_ident("uniform")) {
                expect_symbol("(");
                IntExpr lo = parse_iexpr();
                expect_symbol(",");
                IntExpr hi = parse_iexpr();
                expect_symbol(")");
                return Command::uniform(name, std::move(lo), std::move(hi));
            }
            return Command::assign(name, parse_iexpr());
        }
        fail("expected a statement");
    }

    void validate_calls(const Program& prog) {
        for (const auto& pc : pending_calls_) {
            if (!prog.has_proc(pc.name))
                throw ParseError("call to undeclared procedure '" + pc.name + "'", pc.line,
                                 pc.col);
        }
    }

    struct PendingCall {
        std::string name;
        int line;
        int col;
    };

    std::vector<PendingCall> pending_calls_;
    std::vector<ProcDecl> loop_procs_;
    int loop_counter_ = 0;
};

} // namespace detail

inline Program parse_program(const SourceUnit& src) {
    try {
        return detail::ProgramParser(src.text).parse();
    } catch (ParseError& e) {
        throw ParseError(src.origin + ": " + e.what(), e.line, e.col);
    }
}

inline Program parse_program(const std::string& text) {
    return parse_program(SourceUnit{text, "<inline>"});
}

// ---------------------------------------------------------------------------
// Expectation DSL parser.

namespace detail {

class DslParser : public ExprParser {
public:
    DslParser(const std::string& src, const NameTable& names, bool allow_index, bool allow_prev)
        : ExprParser(src, names, allow_index, allow_prev) {}

    ExpectationExpr parse() {
        ExpectationExpr out;
        out.root = parse_sum();
        if (peek().kind != Token::Kind::End) fail("unexpected trailing input");
        out.mentions_index = saw_index;
        out.mentions_prev = saw_prev;
        return out;
    }

private:
    using Node = ExpectationExpr::Node;

    static Node binary(ExpectationExpr::Kind k, Node a, Node b) {
        Node n;
        n.kind = k;
        n.kids.push_back(std::move(a));
        n.kids.push_back(std::move(b));
        return n;
    }

    Node parse_sum() {
        Node n = parse_term();
        while (at_symbol("+") || at_symbol("-")) {
            bool add = next().text == "+";
            n = binary(add ? ExpectationExpr::Kind::Add : ExpectationExpr::Kind::Sub, std::move(n),
                       parse_term());
        }
        return n;
    }

    Node parse_term() {
        Node n = parse_factor();
        while (at_symbol("*")) {
            next();
            n = binary(ExpectationExpr::Kind::Mul, std::move(n), parse_factor());
        }
        return n;
    }

    Node parse_factor() {
        Node n;
        if (peek().kind == Token::Kind::Int) {
            n.kind = ExpectationExpr::Kind::RationalLit;
            n.lit = expect_rational();
            return n;
        }
        if (eat_ident("inf")) {
            n.kind = ExpectationExpr::Kind::Inf;
            return n;
        }
        if (eat_symbol("[")) {
            n.kind = ExpectationExpr::Kind::Indicator;
            n.guard = parse_bexpr();
            expect_symbol("]");
            return n;
        }
        if (eat_symbol("(")) {
            Node inner = parse_sum();
            expect_symbol(")");
            return inner;
        }
        if (at_ident("min") || at_ident("max")) {
            bool is_min = next().text == "min";
            expect_symbol("(");
            Node a = parse_sum();
            expect_symbol(",");
            Node b = parse_sum();
            expect_symbol(")");
            return binary(is_min ? ExpectationExpr::Kind::Min : ExpectationExpr::Kind::Max,
                          std::move(a), std::move(b));
        }
        if (eat_ident("harmonic")) {
            expect_symbol("(");
            n.kind = ExpectationExpr::Kind::Harmonic;
            n.ie = parse_iexpr();
            expect_symbol(")");
            return n;
        }
        if (eat_ident("pow")) {
            expect_symbol("(");
            n.kind = ExpectationExpr::Kind::Pow;
            n.lit = expect_rational();
            expect_symbol(",");
            n.ie = parse_iexpr();
            expect_symbol(")");
            return n;
        }
        if (at_ident("prev") && allow_prev_) {
            next();
            saw_prev = true;
            n.kind = ExpectationExpr::Kind::Prev;
            return n;
        }
        if (peek().kind == Token::Kind::Ident) {
            n.kind = ExpectationExpr::Kind::Value;
            n.ie = parse_ifactor();
            return n;
        }
        fail("expected an expectation term");
    }
};

inline NameTable names_of(const Program& prog) {
    NameTable t;
    t.vars = prog.vars;
    t.params = prog.params;
    return t;
}

} // namespace detail

struct DslOptions {
    bool allow_index = false;
    bool allow_prev = false;
};

inline ExpectationExpr parse_expectation(const std::string& text, const Program& prog,
                                         DslOptions opts) {
    detail::NameTable names = detail::names_of(prog);
    detail::DslParser p(text, names, opts.allow_index, opts.allow_prev);
    ExpectationExpr e = p.parse();
    e.source = text;
    return e;
}

inline ExpectationExpr parse_expectation(const std::string& text, const Program& prog,
                                         bool allow_index = false) {
    return parse_expectation(text, prog, DslOptions{allow_index, false});
}

} // namespace prexpect
