#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prexpect/expectation_expr.hpp"
#include "prexpect/transformers.hpp"

namespace prexpect {

// ---------------------------------------------------------------------------
// Verdicts. Rejected always carries a concrete counterexample; Inconclusive
// means the replay met a pre-expectation the assumption table cannot bound
// and never claims falsity. Omega-rule successes are explicitly bounded
// evidence: the universally quantified premise was checked up to a depth.

struct Verdict {
    enum class Kind { Accepted, Rejected, Inconclusive, CheckedUpTo };

    Kind kind = Kind::Accepted;
    std::string proc;         // procedure whose body produced the outcome
    std::size_t witness = 0;  // state index of the counterexample
    double lhs = 0.0;         // replayed pre-expectation at the witness
    double rhs = 0.0;         // claimed bound at the witness
    std::size_t step = 0;     // omega step of a rejection, or the checked depth
    std::string detail;

    bool accepted() const { return kind == Kind::Accepted || kind == Kind::CheckedUpTo; }
};

// ---------------------------------------------------------------------------
// Assumption environment: per procedure a list of (key, bounds) pairs. A
// lookup of a pre-expectation h succeeds when h = c * key + k for the first
// matching key, returning the same combination of the bound. The admissible
// (c, k) depend on the transformer: wp upper bounds close under nonnegative
// scaling and constant addition, wp lower bounds under scaling alone, wlp
// bounds additionally need c + k on the right side of 1, and runtime bounds
// close under constant addition only (constant propagation), with the lower
// side restricted to abort-free programs.

enum class BoundSide { Lower, Upper };

struct AssumptionEntry {
    Expectation key;
    std::optional<Expectation> lower;
    std::optional<Expectation> upper;
};

struct AssumptionEnv {
    std::map<std::string, std::vector<AssumptionEntry>> table;
    Mode mode = Mode::Wp;
    bool abort_free = false;
    double tol = 1e-9;
};

namespace detail {

struct Decomposition {
    double c = 0.0;
    double k = 0.0;
};

// Candidate decompositions h = c * key + k over the states where h is defined
// (NaN marks states poisoned by a boundary substitution; they stay poisoned in
// the combined bound). Candidates are tried in a fixed order so lookups are
// deterministic: exact match, then a constant shift, then a plain rescaling.
inline std::vector<Decomposition> decompose_candidates(const Expectation& h,
                                                       const Expectation& key, double tol) {
    const std::size_t n = h.size();
    std::vector<Decomposition> cands;
    double scale = 1.0;
    for (std::size_t s = 0; s < n; ++s)
        if (!std::isnan(h[s]) && !std::isinf(h[s])) scale = std::max(scale, std::abs(h[s]));
    const double eq_tol = tol * scale * 8.0;

    // constant shift h = key + k
    {
        bool ok = true;
        std::optional<double> shift;
        for (std::size_t s = 0; s < n && ok; ++s) {
            if (std::isnan(h[s])) continue;
            if (std::isinf(key[s])) { ok = std::isinf(h[s]); continue; }
            if (std::isinf(h[s])) { ok = false; break; }
            double d = h[s] - key[s];
            if (!shift) shift = d;
            else if (std::abs(d - *shift) > eq_tol) ok = false;
        }
        if (ok && shift && *shift >= -tol)
            cands.push_back({1.0, std::max(*shift, 0.0)});
        else if (ok && !shift)
            cands.push_back({1.0, 0.0}); // h undefined everywhere key is finite
    }

    // rescaling / general affine
    std::optional<std::size_t> i1, i2;
    for (std::size_t s = 0; s < n; ++s) {
        if (std::isinf(key[s]) || std::isnan(h[s])) continue;
        if (!i1) { i1 = s; continue; }
        if (std::abs(key[s] - key[*i1]) > tol && !i2) i2 = s;
    }
    auto validate = [&](double c, double k) {
        if (c < 0.0 || k < 0.0) return false;
        for (std::size_t s = 0; s < n; ++s) {
            if (std::isnan(h[s])) continue;
            if (std::isinf(key[s])) {
                if (!(std::isinf(h[s]) && c > 0.0)) return false;
                continue;
            }
            if (std::isinf(h[s])) return false;
            if (std::abs(c * key[s] + k - h[s]) > eq_tol) return false;
        }
        return true;
    };
    if (i1 && !i2 && !std::isinf(h[*i1])) {
        // constant finite key: prefer the pure rescaling
        double kappa = key[*i1];
        double h0 = h[*i1];
        if (kappa > tol) {
            if (validate(h0 / kappa, 0.0)) cands.push_back({h0 / kappa, 0.0});
        } else if (validate(0.0, h0)) {
            cands.push_back({0.0, h0});
        }
    } else if (i1 && i2 && !std::isinf(h[*i1]) && !std::isinf(h[*i2])) {
        double c = (h[*i1] - h[*i2]) / (key[*i1] - key[*i2]);
        double k = h[*i1] - c * key[*i1];
        if (std::abs(c) < tol) c = 0.0;
        if (std::abs(k) < tol) k = 0.0;
        if (validate(c, k)) cands.push_back({c, k});
    }
    return cands;
}

inline bool decomposition_admissible(const Decomposition& d, Mode mode, BoundSide side,
                                     bool abort_free, double tol) {
    if (d.c < -tol || d.k < -tol) return false;
    switch (mode) {
        case Mode::Wp:
            return side == BoundSide::Upper || d.k <= tol;
        case Mode::Wlp:
            return side == BoundSide::Lower ? d.c + d.k <= 1.0 + tol : d.c + d.k >= 1.0 - tol;
        case Mode::Ert:
            if (std::abs(d.c - 1.0) > tol) return false;
            return side == BoundSide::Upper || d.k <= tol || abort_free;
    }
    return false;
}

inline Expectation combine(const Decomposition& d, const Expectation& bound,
                           const Expectation& h) {
    Expectation r = scale(d.c, bound);
    for (std::size_t s = 0; s < r.size(); ++s) {
        r[s] += d.k;
        if (std::isnan(h[s])) r[s] = h[s]; // keep boundary poison
    }
    return r;
}

inline std::optional<Expectation> lookup(const AssumptionEnv& env, const std::string& proc,
                                         const Expectation& h, BoundSide side) {
    // anything is upper-bounded by the top of the carrier
    if (side == BoundSide::Upper && env.mode != Mode::Wlp) {
        bool all_inf = true;
        for (std::size_t s = 0; s < h.size(); ++s)
            if (!std::isinf(h[s]) && !std::isnan(h[s])) { all_inf = false; break; }
        if (all_inf) {
            Expectation top = Expectation::constant(h.size(), ext::inf);
            for (std::size_t s = 0; s < h.size(); ++s)
                if (std::isnan(h[s])) top[s] = h[s];
            return top;
        }
    }
    auto it = env.table.find(proc);
    if (it == env.table.end()) return std::nullopt;
    for (const auto& entry : it->second) {
        const std::optional<Expectation>& bound =
            side == BoundSide::Lower ? entry.lower : entry.upper;
        if (!bound) continue;
        for (const Decomposition& d : decompose_candidates(h, entry.key, env.tol)) {
            if (!decomposition_admissible(d, env.mode, side, env.abort_free, env.tol)) continue;
            return combine(d, *bound, h);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Replay of a procedure body under the assumption table. Mirrors the
// structural transformer rules; procedure calls go through the table.

struct ReplayOutcome {
    bool ok = true;
    Expectation lo;
    Expectation hi;
    std::string failed_proc;
    BoundSide failed_side = BoundSide::Upper;
    Expectation failed_post;
};

class Replayer {
public:
    Replayer(const AssumptionEnv& env, const StateSpace& sp, const CostModel& cost, bool need_lo,
             bool need_hi)
        : env_(env), sp_(sp), cost_(cost), need_lo_(need_lo), need_hi_(need_hi) {}

    ReplayOutcome run(const Command& body, const Expectation& post) {
        ReplayOutcome out;
        out.lo = post;
        out.hi = post;
        if (!walk(body, out)) out.ok = false;
        return out;
    }

private:
    bool walk(const Command& c, ReplayOutcome& io) {
        const std::size_t n = sp_.size();
        const bool ert = env_.mode == Mode::Ert;
        switch (c.kind) {
            case Command::Kind::Skip:
                add_tick(io, ert ? cost_.skip : 0.0);
                return true;
            case Command::Kind::Abort: {
                double v = env_.mode == Mode::Wlp ? 1.0 : 0.0;
                io.lo = Expectation::constant(n, v, io.lo.tag());
                io.hi = Expectation::constant(n, v, io.hi.tag());
                return true;
            }
            case Command::Kind::Assign:
                if (need_lo_) io.lo = substitute_lenient(io.lo, c.name, c.exprs[0], sp_);
                if (need_hi_) io.hi = substitute_lenient(io.hi, c.name, c.exprs[0], sp_);
                add_tick(io, ert ? cost_.assign : 0.0);
                return true;
            case Command::Kind::Uniform: {
                if (need_lo_) io.lo = apply_uniform(c, io.lo);
                if (need_hi_) io.hi = apply_uniform(c, io.hi);
                return true;
            }
            case Command::Kind::If: {
                Expectation g = indicator(c.guard, sp_);
                Expectation ng(n, 0.0);
                for (std::size_t s = 0; s < n; ++s) ng[s] = 1.0 - g[s];
                ReplayOutcome t_out = io, e_out = io;
                if (!walk(c.kids[0], t_out)) { io = t_out; return false; }
                if (!walk(c.kids[1], e_out)) { io = e_out; return false; }
                if (need_lo_)
                    io.lo = add(pointwise_mul(g, t_out.lo), pointwise_mul(ng, e_out.lo));
                if (need_hi_)
                    io.hi = add(pointwise_mul(g, t_out.hi), pointwise_mul(ng, e_out.hi));
                add_tick(io, ert ? cost_.guard : 0.0);
                return true;
            }
            case Command::Kind::PChoice: {
                double p = c.prob.to_double();
                ReplayOutcome l_out = io, r_out = io;
                if (!walk(c.kids[0], l_out)) { io = l_out; return false; }
                if (!walk(c.kids[1], r_out)) { io = r_out; return false; }
                if (need_lo_) io.lo = add(scale(p, l_out.lo), scale(1.0 - p, r_out.lo));
                if (need_hi_) io.hi = add(scale(p, l_out.hi), scale(1.0 - p, r_out.hi));
                return true;
            }
            case Command::Kind::Call: {
                if (need_lo_) {
                    auto r = lookup(env_, c.name, io.lo, BoundSide::Lower);
                    if (!r) return fail(io, c.name, BoundSide::Lower, io.lo);
                    io.lo = std::move(*r);
                }
                if (need_hi_) {
                    auto r = lookup(env_, c.name, io.hi, BoundSide::Upper);
                    if (!r) return fail(io, c.name, BoundSide::Upper, io.hi);
                    io.hi = std::move(*r);
                }
                return true;
            }
            case Command::Kind::Seq:
                return walk(c.kids[1], io) && walk(c.kids[0], io);
        }
        throw AnalysisError("unreachable command kind in replay");
    }

    Expectation apply_uniform(const Command& c, const Expectation& f) {
        const std::size_t n = sp_.size();
        int vi = sp_.var_index(c.name);
        if (vi < 0) throw AnalysisError("sampling into unknown variable '" + c.name + "'");
        const auto& decl = sp_.vars()[static_cast<std::size_t>(vi)];
        Expectation r(n, 0.0, f.tag());
        for (std::size_t s = 0; s < n; ++s) {
            long long lo = eval_int(c.exprs[0], s, sp_);
            long long hi = eval_int(c.exprs[1], s, sp_);
            if (lo > hi) {
                r[s] = env_.mode == Mode::Wlp ? 1.0 : env_.mode == Mode::Ert ? ext::inf : 0.0;
                continue;
            }
            if (lo < decl.lo || hi > decl.hi) {
                r[s] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double acc = 0.0;
            double w = 1.0 / static_cast<double>(hi - lo + 1);
            for (long long v = lo; v <= hi; ++v) {
                double fv = f[sp_.with_value(s, static_cast<std::size_t>(vi), v)];
                if (fv != 0.0) acc += w * fv;
            }
            r[s] = acc + (env_.mode == Mode::Ert ? cost_.uniform : 0.0);
        }
        return r;
    }

    void add_tick(ReplayOutcome& io, double tick) {
        if (tick == 0.0) return;
        for (std::size_t s = 0; s < io.lo.size(); ++s) {
            if (need_lo_) io.lo[s] += tick;
            if (need_hi_) io.hi[s] += tick;
        }
    }

    bool fail(ReplayOutcome& io, const std::string& proc, BoundSide side, const Expectation& h) {
        io.failed_proc = proc;
        io.failed_side = side;
        io.failed_post = h;
        return false;
    }

    const AssumptionEnv& env_;
    const StateSpace& sp_;
    CostModel cost_;
    bool need_lo_;
    bool need_hi_;
};

inline Verdict inconclusive_from(const ReplayOutcome& r) {
    Verdict v;
    v.kind = Verdict::Kind::Inconclusive;
    v.proc = r.failed_proc;
    v.detail = "no assumption covers the pre-expectation reaching 'call " + r.failed_proc + "' (" +
               (r.failed_side == BoundSide::Lower ? "lower" : "upper") + " side)";
    return v;
}

// A replayed pre-expectation must be free of boundary poison before it can be
// compared against a bound.
inline std::optional<Verdict> poisoned(const ReplayOutcome& out, bool need_lo, bool need_hi,
                                       const StateSpace& sp, const std::string& proc) {
    std::optional<std::size_t> s;
    if (need_lo) s = first_nan(out.lo);
    if (!s && need_hi) s = first_nan(out.hi);
    if (!s) return std::nullopt;
    Verdict v;
    v.kind = Verdict::Kind::Inconclusive;
    v.proc = proc;
    v.detail = "replay leaves the declared variable domains at state " + sp.describe(*s);
    return v;
}

inline std::optional<std::size_t> first_violation(const Expectation& lhs, const Expectation& rhs,
                                                  double tol) {
    // first state where lhs > rhs + tol, preferring the largest violation
    std::optional<std::size_t> worst;
    double worst_gap = tol;
    for (std::size_t s = 0; s < lhs.size(); ++s) {
        if (std::isinf(rhs[s])) continue;
        double gap = lhs[s] - rhs[s];
        if (std::isinf(lhs[s])) gap = ext::inf;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst = s;
        }
    }
    return worst;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Plain recursion rules. One claim per procedure; several claims check the
// simultaneous variant, replaying every body under the shared table.

struct RecClaim {
    std::string proc;
    Expectation post;   // f for wp/wlp, the continuation t for ert
    Expectation bound;  // g for wp/wlp, u for ert
};

inline Verdict check_rec(const Program& prog, const StateSpace& sp, Mode mode,
                         const std::vector<RecClaim>& claims, double tol = 1e-9,
                         const CostModel& cost = {}) {
    AssumptionEnv env;
    env.mode = mode;
    env.abort_free = program_is_abort_free(prog);
    env.tol = tol;
    for (const auto& cl : claims) {
        if (!prog.has_proc(cl.proc))
            throw AnalysisError("claim names undeclared procedure '" + cl.proc + "'");
        AssumptionEntry entry;
        entry.key = cl.post;
        switch (mode) {
            case Mode::Wp: entry.upper = cl.bound; break;
            case Mode::Wlp: entry.lower = cl.bound; break;
            case Mode::Ert: {
                Expectation shifted = cl.bound;
                for (std::size_t s = 0; s < shifted.size(); ++s) shifted[s] += 1.0;
                entry.upper = std::move(shifted);
                break;
            }
        }
        env.table[cl.proc].push_back(std::move(entry));
    }

    const bool need_lo = mode == Mode::Wlp;
    const bool need_hi = mode != Mode::Wlp;
    for (const auto& cl : claims) {
        detail::Replayer rp(env, sp, cost, need_lo, need_hi);
        detail::ReplayOutcome out = rp.run(*prog.find_proc(cl.proc), cl.post);
        if (!out.ok) return detail::inconclusive_from(out);
        if (auto bad = detail::poisoned(out, need_lo, need_hi, sp, cl.proc)) return *bad;
        if (mode == Mode::Wlp) {
            if (auto s = detail::first_violation(cl.bound, out.lo, tol)) {
                Verdict v;
                v.kind = Verdict::Kind::Rejected;
                v.proc = cl.proc;
                v.witness = *s;
                v.lhs = out.lo[*s];
                v.rhs = cl.bound[*s];
                v.detail = "replayed pre-expectation falls below the claimed lower bound";
                return v;
            }
        } else {
            if (auto s = detail::first_violation(out.hi, cl.bound, tol)) {
                Verdict v;
                v.kind = Verdict::Kind::Rejected;
                v.proc = cl.proc;
                v.witness = *s;
                v.lhs = out.hi[*s];
                v.rhs = cl.bound[*s];
                v.detail = "replayed pre-expectation exceeds the claimed upper bound";
                return v;
            }
        }
    }
    return Verdict{};
}

inline Verdict check_wp_rec(const Program& prog, const StateSpace& sp, const RecClaim& claim,
                            double tol = 1e-9) {
    return check_rec(prog, sp, Mode::Wp, {claim}, tol);
}
inline Verdict check_wlp_rec(const Program& prog, const StateSpace& sp, const RecClaim& claim,
                             double tol = 1e-9) {
    return check_rec(prog, sp, Mode::Wlp, {claim}, tol);
}
inline Verdict check_ert_rec(const Program& prog, const StateSpace& sp, const RecClaim& claim,
                             double tol = 1e-9, const CostModel& cost = {}) {
    return check_rec(prog, sp, Mode::Ert, {claim}, tol, cost);
}

// ---------------------------------------------------------------------------
// Omega rules. Bound families are index-parameterized: either a closed
// expression in the index n, or a recurrence (base plus a step over `prev`).
// An omitted side defaults to the one-sided specialization: the required base
// member followed by the trivial bound on that side.

struct BoundFamily {
    std::optional<ExpectationExpr> base;  // member 0 (defaults to the rule's base)
    std::optional<ExpectationExpr> step;  // member n+1 as a function of `prev`
    std::optional<ExpectationExpr> expr;  // member n (n >= 1 when base is given)
    bool omitted = false;

    static BoundFamily one_sided() { BoundFamily f; f.omitted = true; return f; }
};

namespace detail {

inline Expectation family_member(const BoundFamily& fam, std::size_t n, const Expectation* prev,
                                 const StateSpace& sp, Mode mode, BoundSide side,
                                 double rule_base) {
    const std::size_t size = sp.size();
    if (fam.omitted) {
        if (n == 0) return Expectation::constant(size, rule_base);
        switch (mode) {
            case Mode::Wp:
            case Mode::Ert:
                return side == BoundSide::Upper ? Expectation::constant(size, ext::inf)
                                                : Expectation::zero(size);
            case Mode::Wlp:
                return side == BoundSide::Upper ? Expectation::one(size)
                                                : Expectation::zero(size);
        }
    }
    if (n == 0) {
        if (fam.base) return eval_expectation(*fam.base, sp);
        if (fam.expr) {
            const ExpectationExpr& e = *fam.expr;
            return e.mentions_index ? eval_expectation(e, sp, 0) : eval_expectation(e, sp);
        }
        throw AnalysisError("bound family has neither base nor expression");
    }
    if (fam.step) {
        if (!prev) throw AnalysisError("recurrence family evaluated without a previous member");
        return eval_expectation(*fam.step, sp, std::nullopt, prev);
    }
    if (fam.expr) {
        const ExpectationExpr& e = *fam.expr;
        return e.mentions_index ? eval_expectation(e, sp, static_cast<long long>(n))
                                : eval_expectation(e, sp);
    }
    throw AnalysisError("bound family has neither step nor expression");
}

} // namespace detail

inline Verdict check_rec_omega(const Program& prog, const StateSpace& sp, Mode mode,
                               const std::string& proc, const Expectation& post,
                               const BoundFamily& lower, const BoundFamily& upper,
                               std::size_t depth, double tol = 1e-9, const CostModel& cost = {}) {
    if (!prog.has_proc(proc))
        throw AnalysisError("claim names undeclared procedure '" + proc + "'");
    const std::size_t n = sp.size();
    const double rule_base = mode == Mode::Wlp ? 1.0 : 0.0;

    Expectation l_cur = detail::family_member(lower, 0, nullptr, sp, mode, BoundSide::Lower, rule_base);
    Expectation u_cur = detail::family_member(upper, 0, nullptr, sp, mode, BoundSide::Upper, rule_base);
    Expectation base = Expectation::constant(n, rule_base);
    for (const auto* side0 : {&l_cur, &u_cur}) {
        if (max_diff(*side0, base) > tol) {
            Verdict v;
            v.kind = Verdict::Kind::Rejected;
            v.proc = proc;
            v.step = 0;
            v.detail = "family base differs from the required base " +
                       std::to_string(rule_base);
            auto s = detail::first_violation(*side0, base, tol);
            if (!s) s = detail::first_violation(base, *side0, tol);
            if (s) { v.witness = *s; v.lhs = (*side0)[*s]; v.rhs = rule_base; }
            return v;
        }
    }

    const bool ert = mode == Mode::Ert;
    bool abort_free = program_is_abort_free(prog);
    for (std::size_t k = 0; k < depth; ++k) {
        AssumptionEnv env;
        env.mode = mode;
        env.abort_free = abort_free;
        env.tol = tol;
        AssumptionEntry entry;
        entry.key = post;
        Expectation lo_assume = l_cur, hi_assume = u_cur;
        if (ert) {
            for (std::size_t s = 0; s < n; ++s) {
                lo_assume[s] += 1.0;
                if (!std::isinf(hi_assume[s])) hi_assume[s] += 1.0;
            }
        }
        entry.lower = std::move(lo_assume);
        entry.upper = std::move(hi_assume);
        env.table[proc].push_back(std::move(entry));

        detail::Replayer rp(env, sp, cost, true, true);
        detail::ReplayOutcome out = rp.run(*prog.find_proc(proc), post);
        if (!out.ok) return detail::inconclusive_from(out);
        if (auto bad = detail::poisoned(out, true, true, sp, proc)) return *bad;

        Expectation l_next =
            detail::family_member(lower, k + 1, &l_cur, sp, mode, BoundSide::Lower, rule_base);
        Expectation u_next =
            detail::family_member(upper, k + 1, &u_cur, sp, mode, BoundSide::Upper, rule_base);

        if (auto s = detail::first_violation(l_next, out.lo, tol)) {
            Verdict v;
            v.kind = Verdict::Kind::Rejected;
            v.proc = proc;
            v.step = k + 1;
            v.witness = *s;
            v.lhs = out.lo[*s];
            v.rhs = l_next[*s];
            v.detail = "replayed pre-expectation falls below the lower family at step " +
                       std::to_string(k + 1);
            return v;
        }
        if (auto s = detail::first_violation(out.hi, u_next, tol)) {
            Verdict v;
            v.kind = Verdict::Kind::Rejected;
            v.proc = proc;
            v.step = k + 1;
            v.witness = *s;
            v.lhs = out.hi[*s];
            v.rhs = u_next[*s];
            v.detail = "replayed pre-expectation exceeds the upper family at step " +
                       std::to_string(k + 1);
            return v;
        }
        l_cur = std::move(l_next);
        u_cur = std::move(u_next);
    }

    Verdict v;
    v.kind = Verdict::Kind::CheckedUpTo;
    v.proc = proc;
    v.step = depth;
    return v;
}

} // namespace prexpect
