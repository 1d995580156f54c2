#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prexpect/rational.hpp"

namespace prexpect {

// Errors raised while parsing or elaborating source programs.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", col " +
                             std::to_string(col) + ")"),
          line(line), col(col) {}
    int line;
    int col;
};

// Errors raised while evaluating semantics (domain violations, bad indices, ...).
struct AnalysisError : std::runtime_error {
    explicit AnalysisError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Integer and boolean expressions over program variables and parameters.

struct IntExpr {
    enum class Kind { Literal, Var, ArrayAt, Add, Sub, Mul, Min, Max, Neg };

    Kind kind = Kind::Literal;
    long long literal = 0;
    std::string name;            // Var, ArrayAt
    std::vector<IntExpr> kids;   // operands; ArrayAt index in kids[0]

    static IntExpr lit(long long v) { IntExpr e; e.kind = Kind::Literal; e.literal = v; return e; }
    static IntExpr var(std::string n) { IntExpr e; e.kind = Kind::Var; e.name = std::move(n); return e; }
    static IntExpr array_at(std::string n, IntExpr idx) {
        IntExpr e; e.kind = Kind::ArrayAt; e.name = std::move(n); e.kids.push_back(std::move(idx)); return e;
    }
    static IntExpr binary(Kind k, IntExpr a, IntExpr b) {
        IntExpr e; e.kind = k; e.kids.push_back(std::move(a)); e.kids.push_back(std::move(b)); return e;
    }
    static IntExpr neg(IntExpr a) {
        IntExpr e; e.kind = Kind::Neg; e.kids.push_back(std::move(a)); return e;
    }

    bool operator==(const IntExpr& o) const {
        return kind == o.kind && literal == o.literal && name == o.name && kids == o.kids;
    }
};

struct BoolExpr {
    enum class Kind { Literal, Cmp, And, Or, Not };
    enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

    Kind kind = Kind::Literal;
    bool literal = false;
    CmpOp op = CmpOp::Eq;
    std::vector<IntExpr> args;   // Cmp operands
    std::vector<BoolExpr> kids;  // And/Or/Not operands

    static BoolExpr lit(bool v) { BoolExpr b; b.kind = Kind::Literal; b.literal = v; return b; }
    static BoolExpr cmp(CmpOp op, IntExpr a, IntExpr b2) {
        BoolExpr b; b.kind = Kind::Cmp; b.op = op;
        b.args.push_back(std::move(a)); b.args.push_back(std::move(b2)); return b;
    }
    static BoolExpr logic(Kind k, BoolExpr a, BoolExpr b2) {
        BoolExpr b; b.kind = k; b.kids.push_back(std::move(a)); b.kids.push_back(std::move(b2)); return b;
    }
    static BoolExpr negate(BoolExpr a) {
        BoolExpr b; b.kind = Kind::Not; b.kids.push_back(std::move(a)); return b;
    }

    bool operator==(const BoolExpr& o) const {
        return kind == o.kind && literal == o.literal && op == o.op && args == o.args && kids == o.kids;
    }
};

// ---------------------------------------------------------------------------
// Commands.

struct Command {
    enum class Kind { Skip, Abort, Assign, Uniform, If, PChoice, Call, Seq };

    Kind kind = Kind::Skip;
    std::string name;            // Assign/Uniform target var; Call target proc
    std::vector<IntExpr> exprs;  // Assign rhs; Uniform lo,hi
    BoolExpr guard;              // If
    Rational prob;               // PChoice
    std::vector<Command> kids;   // If/PChoice branches; Seq parts

    static Command skip() { return Command{}; }
    static Command abort() { Command c; c.kind = Kind::Abort; return c; }
    static Command assign(std::string var, IntExpr rhs) {
        Command c; c.kind = Kind::Assign; c.name = std::move(var); c.exprs.push_back(std::move(rhs)); return c;
    }
    static Command uniform(std::string var, IntExpr lo, IntExpr hi) {
        Command c; c.kind = Kind::Uniform; c.name = std::move(var);
        c.exprs.push_back(std::move(lo)); c.exprs.push_back(std::move(hi)); return c;
    }
    static Command if_(BoolExpr g, Command then_c, Command else_c) {
        Command c; c.kind = Kind::If; c.guard = std::move(g);
        c.kids.push_back(std::move(then_c)); c.kids.push_back(std::move(else_c)); return c;
    }
    static Command pchoice(Command l, Rational p, Command r) {
        Command c; c.kind = Kind::PChoice; c.prob = p;
        c.kids.push_back(std::move(l)); c.kids.push_back(std::move(r)); return c;
    }
    static Command call(std::string proc) { Command c; c.kind = Kind::Call; c.name = std::move(proc); return c; }
    static Command seq(Command a, Command b) {
        Command c; c.kind = Kind::Seq;
        c.kids.push_back(std::move(a)); c.kids.push_back(std::move(b)); return c;
    }

    bool operator==(const Command& o) const {
        return kind == o.kind && name == o.name && exprs == o.exprs && guard == o.guard &&
               prob == o.prob && kids == o.kids;
    }
};

// ---------------------------------------------------------------------------
// Programs.

struct VarDecl {
    std::string name;
    long long lo = 0;
    long long hi = 0;
    bool operator==(const VarDecl&) const = default;
};

struct ParamDecl {
    enum class Kind { Scalar, IntArray };
    std::string name;
    Kind kind = Kind::Scalar;
    bool operator==(const ParamDecl&) const = default;
};

struct ProcDecl {
    std::string name;
    Command body;
    bool operator==(const ProcDecl&) const = default;
};

struct Program {
    std::vector<ProcDecl> decls;   // declaration order is significant (labeling, reports)
    Command main;
    std::vector<VarDecl> vars;
    std::vector<ParamDecl> params;

    const Command* find_proc(const std::string& name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d.body;
        return nullptr;
    }
    bool has_proc(const std::string& name) const { return find_proc(name) != nullptr; }

    bool operator==(const Program&) const = default;
};

inline bool command_is_abort_free(const Command& c) {
    if (c.kind == Command::Kind::Abort) return false;
    for (const auto& k : c.kids)
        if (!command_is_abort_free(k)) return false;
    return true;
}

inline bool program_is_abort_free(const Program& p) {
    if (!command_is_abort_free(p.main)) return false;
    for (const auto& d : p.decls)
        if (!command_is_abort_free(d.body)) return false;
    return true;
}

inline bool command_is_closed(const Command& c) {
    if (c.kind == Command::Kind::Call) return false;
    for (const auto& k : c.kids)
        if (!command_is_closed(k)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Pretty-printing back to concrete syntax.

namespace detail {

inline int iexpr_prec(IntExpr::Kind k) {
    switch (k) {
        case IntExpr::Kind::Add:
        case IntExpr::Kind::Sub: return 1;
        case IntExpr::Kind::Mul: return 2;
        default: return 3;
    }
}

inline void print_iexpr(std::ostream& os, const IntExpr& e, int parent_prec = 0) {
    int prec = iexpr_prec(e.kind);
    bool paren = prec < parent_prec;
    switch (e.kind) {
        case IntExpr::Kind::Literal: os << e.literal; return;
        case IntExpr::Kind::Var: os << e.name; return;
        case IntExpr::Kind::ArrayAt:
            os << e.name << "[";
            print_iexpr(os, e.kids[0]);
            os << "]";
            return;
        case IntExpr::Kind::Min:
        case IntExpr::Kind::Max:
            os << (e.kind == IntExpr::Kind::Min ? "min(" : "max(");
            print_iexpr(os, e.kids[0]);
            os << ", ";
            print_iexpr(os, e.kids[1]);
            os << ")";
            return;
        case IntExpr::Kind::Neg:
            os << "-";
            print_iexpr(os, e.kids[0], 3);
            return;
        default: break;
    }
    if (paren) os << "(";
    print_iexpr(os, e.kids[0], prec);
    os << (e.kind == IntExpr::Kind::Add ? " + " : e.kind == IntExpr::Kind::Sub ? " - " : " * ");
    // right operand of - needs strictly higher precedence
    print_iexpr(os, e.kids[1], e.kind == IntExpr::Kind::Sub ? prec + 1 : prec);
    if (paren) os << ")";
}

inline void print_bexpr(std::ostream& os, const BoolExpr& b, int parent_prec = 0) {
    // precedence: || = 1, && = 2, ! = 3, cmp/lit = 4
    switch (b.kind) {
        case BoolExpr::Kind::Literal: os << (b.literal ? "true" : "false"); return;
        case BoolExpr::Kind::Cmp: {
            const char* op = "=";
            switch (b.op) {
                case BoolExpr::CmpOp::Eq: op = "="; break;
                case BoolExpr::CmpOp::Ne: op = "!="; break;
                case BoolExpr::CmpOp::Lt: op = "<"; break;
                case BoolExpr::CmpOp::Le: op = "<="; break;
                case BoolExpr::CmpOp::Gt: op = ">"; break;
                case BoolExpr::CmpOp::Ge: op = ">="; break;
            }
            print_iexpr(os, b.args[0]);
            os << " " << op << " ";
            print_iexpr(os, b.args[1]);
            return;
        }
        case BoolExpr::Kind::Not:
            os << "!";
            if (b.kids[0].kind == BoolExpr::Kind::Cmp || b.kids[0].kind == BoolExpr::Kind::And ||
                b.kids[0].kind == BoolExpr::Kind::Or) {
                os << "(";
                print_bexpr(os, b.kids[0]);
                os << ")";
            } else {
                print_bexpr(os, b.kids[0], 3);
            }
            return;
        case BoolExpr::Kind::And:
        case BoolExpr::Kind::Or: {
            int prec = b.kind == BoolExpr::Kind::And ? 2 : 1;
            bool paren = prec < parent_prec;
            if (paren) os << "(";
            print_bexpr(os, b.kids[0], prec);
            os << (b.kind == BoolExpr::Kind::And ? " && " : " || ");
            print_bexpr(os, b.kids[1], prec);
            if (paren) os << ")";
            return;
        }
    }
}

} // namespace detail

inline std::string to_string(const IntExpr& e) {
    std::ostringstream os;
    detail::print_iexpr(os, e);
    return os.str();
}

inline std::string to_string(const BoolExpr& b) {
    std::ostringstream os;
    detail::print_bexpr(os, b);
    return os.str();
}

// The pretty-printer re-sugars loop procedures produced by `while` desugaring
// so printed programs stay within the user-facing grammar.
inline constexpr const char* kLoopProcPrefix = "__loop";

namespace detail {

inline bool is_loop_proc_name(const std::string& name) {
    return name.rfind(kLoopProcPrefix, 0) == 0;
}

// Matches the desugared shape if (G) { body; call self } else { skip }.
inline const Command* loop_body_of(const Program& p, const std::string& proc, const BoolExpr** guard) {
    const Command* body = p.find_proc(proc);
    if (!body || body->kind != Command::Kind::If) return nullptr;
    if (body->kids[1].kind != Command::Kind::Skip) return nullptr;
    const Command& then_c = body->kids[0];
    if (then_c.kind != Command::Kind::Seq) return nullptr;
    const Command& tail = then_c.kids[1];
    if (tail.kind != Command::Kind::Call || tail.name != proc) return nullptr;
    *guard = &body->guard;
    return &then_c.kids[0];
}

inline void print_command(std::ostream& os, const Command& c, const Program& p, int indent);

inline void flatten_seq(const Command& c, std::vector<const Command*>& out) {
    if (c.kind == Command::Kind::Seq) {
        flatten_seq(c.kids[0], out);
        flatten_seq(c.kids[1], out);
    } else {
        out.push_back(&c);
    }
}

inline void print_block(std::ostream& os, const Command& c, const Program& p, int indent) {
    std::vector<const Command*> parts;
    flatten_seq(c, parts);
    os << "{\n";
    std::string pad(static_cast<size_t>(indent) + 2, ' ');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        os << pad;
        print_command(os, *parts[i], p, indent + 2);
        os << (i + 1 < parts.size() ? ";\n" : "\n");
    }
    os << std::string(static_cast<size_t>(indent), ' ') << "}";
}

inline void print_command(std::ostream& os, const Command& c, const Program& p, int indent) {
    switch (c.kind) {
        case Command::Kind::Skip: os << "skip"; return;
        case Command::Kind::Abort: os << "abort"; return;
        case Command::Kind::Assign:
            os << c.name << " := ";
            print_iexpr(os, c.exprs[0]);
            return;
        case Command::Kind::Uniform:
            os << c.name << " := uniform(";
            print_iexpr(os, c.exprs[0]);
            os << ", ";
            print_iexpr(os, c.exprs[1]);
            os << ")";
            return;
        case Command::Kind::If:
            os << "if (";
            print_bexpr(os, c.guard);
            os << ") ";
            print_block(os, c.kids[0], p, indent);
            os << " else ";
            print_block(os, c.kids[1], p, indent);
            return;
        case Command::Kind::PChoice:
            print_block(os, c.kids[0], p, indent);
            os << " [" << c.prob.str() << "] ";
            print_block(os, c.kids[1], p, indent);
            return;
        case Command::Kind::Call: {
            const BoolExpr* guard = nullptr;
            if (is_loop_proc_name(c.name)) {
                if (const Command* body = loop_body_of(p, c.name, &guard)) {
                    os << "while (";
                    print_bexpr(os, *guard);
                    os << ") ";
                    print_block(os, *body, p, indent);
                    return;
                }
            }
            os << "call " << c.name;
            return;
        }
        case Command::Kind::Seq:
            // sequences are printed by print_block; a bare Seq gets its own block
            print_block(os, c, p, indent);
            return;
    }
}

} // namespace detail

inline std::string pretty_print(const Program& p) {
    std::ostringstream os;
    for (const auto& par : p.params) {
        os << "param " << par.name << " : "
           << (par.kind == ParamDecl::Kind::IntArray ? "array int" : "int") << ";\n";
    }
    for (const auto& v : p.vars)
        os << "var " << v.name << " : " << v.lo << ".." << v.hi << ";\n";
    for (const auto& d : p.decls) {
        if (detail::is_loop_proc_name(d.name)) continue;
        os << "proc " << d.name << " ";
        detail::print_block(os, d.body, p, 0);
        os << "\n";
    }
    os << "main ";
    detail::print_block(os, p.main, p, 0);
    os << "\n";
    return os.str();
}

} // namespace prexpect
