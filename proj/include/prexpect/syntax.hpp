#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "prexpect/ast.hpp"

namespace prexpect {

// ---------------------------------------------------------------------------
// Syntactic replacement of procedure calls: every call to `target` becomes
// `replacement`, the rest of the structure is preserved.

inline Command substitute_calls(const Command& c, const std::string& target,
                                const Command& replacement) {
    if (c.kind == Command::Kind::Call)
        return c.name == target ? replacement : c;
    Command out = c;
    for (auto& k : out.kids) k = substitute_calls(k, target, replacement);
    return out;
}

// Simultaneous replacement over several procedures, used by the n-th inlining
// of mutually recursive declarations.
inline Command substitute_calls(const Command& c,
                                const std::map<std::string, Command>& replacements) {
    if (c.kind == Command::Kind::Call) {
        auto it = replacements.find(c.name);
        return it != replacements.end() ? it->second : c;
    }
    Command out = c;
    for (auto& k : out.kids) k = substitute_calls(k, replacements);
    return out;
}

// ---------------------------------------------------------------------------
// n-th inlining: level 0 is abort, level n+1 substitutes the level-n inlining
// of every procedure into the body. The result is always call-free.

namespace detail {

inline void check_calls_declared(const Command& c, const std::map<std::string, Command>& procs) {
    if (c.kind == Command::Kind::Call && !procs.count(c.name))
        throw AnalysisError("call to undeclared procedure '" + c.name + "'");
    for (const auto& k : c.kids) check_calls_declared(k, procs);
}

} // namespace detail

inline Command inline_call(const std::map<std::string, Command>& procs, const std::string& target,
                           std::size_t n) {
    if (!procs.count(target))
        throw AnalysisError("call to undeclared procedure '" + target + "'");
    for (const auto& [name, body] : procs) {
        (void)name;
        detail::check_calls_declared(body, procs);
    }
    std::map<std::string, Command> level;
    for (const auto& [name, body] : procs) {
        (void)body;
        level[name] = Command::abort();
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::map<std::string, Command> next;
        for (const auto& [name, body] : procs) next[name] = substitute_calls(body, level);
        level = std::move(next);
    }
    return level.at(target);
}

// ---------------------------------------------------------------------------
// while (G) { body }  ~>  fresh |> if (G) { body; call fresh } else { skip }

inline std::pair<std::string, Command> desugar_while(const BoolExpr& guard, const Command& body,
                                                     const std::string& fresh) {
    Command decl = Command::if_(guard, Command::seq(body, Command::call(fresh)), Command::skip());
    return {fresh, std::move(decl)};
}

// ---------------------------------------------------------------------------
// Canonical labeling. Statement labels are positive integers assigned by one
// deterministic walk: procedure bodies in declaration order, then main. The
// walk follows the concrete syntax left to right, so the left branch of a
// probabilistic choice is numbered before the choice itself while an `if`
// is numbered before its branches. Sequencing carries no label of its own;
// control flow is encoded by the successor functions.

using Label = int;
inline constexpr Label kLabelDown = 0;  // procedure-level termination
inline constexpr Label kLabelTerm = -1; // whole-program termination

struct LabeledProgram {
    struct Entry {
        const Command* stmt = nullptr;
        Label succ1 = kLabelDown;
        Label succ2 = kLabelDown;
    };

    std::shared_ptr<const Program> program;
    std::vector<Entry> entries;              // index = label - 1
    Label main_init = kLabelDown;
    std::map<std::string, Label> proc_init;  // init of each declared body

    std::size_t label_count() const { return entries.size(); }
    const Command& stmt(Label l) const { return *entries[static_cast<std::size_t>(l - 1)].stmt; }
    Label succ1(Label l) const { return entries[static_cast<std::size_t>(l - 1)].succ1; }
    Label succ2(Label l) const { return entries[static_cast<std::size_t>(l - 1)].succ2; }

    Label init_of(const std::string& proc) const {
        auto it = proc_init.find(proc);
        if (it == proc_init.end()) throw AnalysisError("no labels for procedure '" + proc + "'");
        return it->second;
    }
};

namespace detail {

struct Labeler {
    LabeledProgram& lp;
    int assigned = 0;

    static std::size_t count_labels(const Command& c) {
        switch (c.kind) {
            case Command::Kind::Seq:
                return count_labels(c.kids[0]) + count_labels(c.kids[1]);
            case Command::Kind::If:
            case Command::Kind::PChoice:
                return 1 + count_labels(c.kids[0]) + count_labels(c.kids[1]);
            default:
                return 1;
        }
    }

    Label fresh(const Command& c) {
        Label l = static_cast<Label>(++assigned);
        if (lp.entries.size() < static_cast<std::size_t>(assigned))
            lp.entries.resize(static_cast<std::size_t>(assigned));
        lp.entries[static_cast<std::size_t>(l - 1)].stmt = &c;
        return l;
    }

    void set_succ(Label l, Label s1, Label s2) {
        auto& e = lp.entries[static_cast<std::size_t>(l - 1)];
        e.succ1 = s1;
        e.succ2 = s2;
    }

    // Assigns labels within `c`; `cont` is where control moves once `c` has
    // finished (kLabelDown at the end of a body). Returns init(c).
    Label walk(const Command& c, Label cont) {
        switch (c.kind) {
            case Command::Kind::Skip:
            case Command::Kind::Abort:
            case Command::Kind::Assign:
            case Command::Kind::Uniform:
            case Command::Kind::Call: {
                Label l = fresh(c);
                set_succ(l, cont, kLabelDown);
                return l;
            }
            case Command::Kind::If: {
                Label l = fresh(c);
                Label t = walk(c.kids[0], cont);
                Label e = walk(c.kids[1], cont);
                set_succ(l, t, e);
                return l;
            }
            case Command::Kind::PChoice: {
                Label left = walk(c.kids[0], cont);
                Label l = fresh(c);
                Label right = walk(c.kids[1], cont);
                set_succ(l, left, right);
                return l;
            }
            case Command::Kind::Seq:
                return walk_seq(c, cont);
        }
        throw AnalysisError("unreachable command kind in labeling");
    }

    // A part's continuation is the init of the next part, which is only known
    // after walking it, while label numbers must come out in textual order.
    // Precompute each part's label block from the counts, then walk right to
    // left inside those blocks.
    Label walk_seq(const Command& c, Label cont) {
        std::vector<const Command*> parts;
        flatten(c, parts);
        std::vector<std::size_t> starts(parts.size());
        std::size_t base = static_cast<std::size_t>(assigned);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            starts[i] = base;
            base += count_labels(*parts[i]);
        }
        std::vector<Label> inits(parts.size());
        Label next_cont = cont;
        for (std::size_t i = parts.size(); i-- > 0;) {
            assigned = static_cast<int>(starts[i]);
            inits[i] = walk(*parts[i], next_cont);
            next_cont = inits[i];
        }
        assigned = static_cast<int>(base);
        return inits[0];
    }

    static void flatten(const Command& c, std::vector<const Command*>& out) {
        if (c.kind == Command::Kind::Seq) {
            flatten(c.kids[0], out);
            flatten(c.kids[1], out);
        } else {
            out.push_back(&c);
        }
    }
};

} // namespace detail

inline LabeledProgram label_program(const Program& p) {
    LabeledProgram lp;
    lp.program = std::make_shared<Program>(p);
    detail::Labeler labeler{lp};
    for (const auto& d : lp.program->decls)
        lp.proc_init[d.name] = labeler.walk(d.body, kLabelDown);
    lp.main_init = labeler.walk(lp.program->main, kLabelDown);
    return lp;
}

} // namespace prexpect
