#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prexpect/expectation.hpp"
#include "prexpect/syntax.hpp"

namespace prexpect {

enum class Mode { Wp, Wlp, Ert };

// Tick weights of the runtime model. The default charges one unit per skip,
// assignment, guard evaluation, procedure call and random sampling; the
// calls-only model counts procedure calls alone.
struct CostModel {
    double skip = 1.0;
    double assign = 1.0;
    double guard = 1.0;
    double call = 1.0;
    double uniform = 1.0;

    static CostModel standard() { return CostModel{}; }
    static CostModel calls_only() { return CostModel{0.0, 0.0, 0.0, 1.0, 0.0}; }
};

// Procedure environments. Weakest pre-expectation environments are linear
// (offset zero); liberal and runtime environments are affine, t -> offset + M t.
struct AffineEnv {
    Expectation offset;
    Matrix linear;

    static AffineEnv zero(std::size_t n) { return {Expectation::zero(n), Matrix::zero(n)}; }
    static AffineEnv constant_one(std::size_t n) { return {Expectation::one(n), Matrix::zero(n)}; }

    Expectation apply(const Expectation& f) const {
        Expectation r = linear.apply(f);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += offset[i];
        return r;
    }
};

using EnvMap = std::map<std::string, AffineEnv>;

namespace detail {

inline constexpr double poison = std::numeric_limits<double>::quiet_NaN();

// Substitution transformer for x := E; row s has a single 1 at s[x := E(s)].
// A state whose target leaves the domain gets a poisoned offset; the poison
// is masked away by guard indicators on unreachable branches and turns into
// a hard error if it survives to a final result.
inline AffineEnv assignment_env(const std::string& var, const IntExpr& e, const StateSpace& sp,
                                double tick) {
    int vi = sp.var_index(var);
    if (vi < 0) throw AnalysisError("assignment to unknown variable '" + var + "'");
    const auto& decl = sp.vars()[static_cast<std::size_t>(vi)];
    Matrix m(sp.size());
    Expectation off = Expectation::constant(sp.size(), tick);
    for (std::size_t s = 0; s < sp.size(); ++s) {
        long long v = eval_int(e, s, sp);
        if (v < decl.lo || v > decl.hi) {
            off[s] = poison;
            continue;
        }
        m.at(s, sp.with_value(s, static_cast<std::size_t>(vi), v)) = 1.0;
    }
    return {std::move(off), std::move(m)};
}

inline void check_domain_clean(const Expectation& f, const StateSpace& sp) {
    if (auto s = first_nan(f))
        throw AnalysisError("an assignment leaves the declared domain on a path from state " +
                            sp.describe(*s));
}

} // namespace detail

// Structural affine transformer of a command under procedure environments.
// Wp: skip f; assign f[x/E]; abort 0; if/pchoice guarded convex combinations;
// call env(P); seq composition; uniform the mean over the sampled range,
// nothing outside it. Wlp differs on abort (1) and credits empty ranges with
// 1. Ert adds the tick offsets of the cost model and sends abort to 0.
inline AffineEnv transform_command(const Command& c, Mode mode, const EnvMap& env,
                                   const StateSpace& sp, const CostModel& cost = {}) {
    const std::size_t n = sp.size();
    const bool ert = mode == Mode::Ert;
    switch (c.kind) {
        case Command::Kind::Skip: {
            AffineEnv a{Expectation::constant(n, ert ? cost.skip : 0.0), Matrix::identity(n)};
            return a;
        }
        case Command::Kind::Abort: {
            if (mode == Mode::Wlp) return AffineEnv::constant_one(n);
            return AffineEnv::zero(n);
        }
        case Command::Kind::Assign:
            return detail::assignment_env(c.name, c.exprs[0], sp, ert ? cost.assign : 0.0);
        case Command::Kind::Uniform: {
            int vi = sp.var_index(c.name);
            if (vi < 0) throw AnalysisError("sampling into unknown variable '" + c.name + "'");
            const auto& decl = sp.vars()[static_cast<std::size_t>(vi)];
            Matrix m(n);
            Expectation offset = Expectation::zero(n);
            for (std::size_t s = 0; s < n; ++s) {
                long long lo = eval_int(c.exprs[0], s, sp);
                long long hi = eval_int(c.exprs[1], s, sp);
                if (lo > hi) {
                    // empty range: divergence
                    if (mode == Mode::Wlp) offset[s] = 1.0;
                    if (ert) offset[s] = ext::inf;
                    continue;
                }
                if (lo < decl.lo || hi > decl.hi) {
                    offset[s] = detail::poison;
                    continue;
                }
                double w = 1.0 / static_cast<double>(hi - lo + 1);
                for (long long v = lo; v <= hi; ++v)
                    m.at(s, sp.with_value(s, static_cast<std::size_t>(vi), v)) += w;
                if (ert) offset[s] = cost.uniform;
            }
            return {std::move(offset), std::move(m)};
        }
        case Command::Kind::If: {
            AffineEnv t = transform_command(c.kids[0], mode, env, sp, cost);
            AffineEnv e = transform_command(c.kids[1], mode, env, sp, cost);
            Expectation g = indicator(c.guard, sp);
            Expectation ng(n, 0.0);
            for (std::size_t s = 0; s < n; ++s) ng[s] = 1.0 - g[s];
            AffineEnv r{add(pointwise_mul(g, t.offset), pointwise_mul(ng, e.offset)),
                        t.linear.row_scaled(g) + e.linear.row_scaled(ng)};
            if (ert)
                for (std::size_t s = 0; s < n; ++s) r.offset[s] += cost.guard;
            return r;
        }
        case Command::Kind::PChoice: {
            AffineEnv l = transform_command(c.kids[0], mode, env, sp, cost);
            AffineEnv r = transform_command(c.kids[1], mode, env, sp, cost);
            double p = c.prob.to_double();
            return {add(scale(p, l.offset), scale(1.0 - p, r.offset)),
                    l.linear.scaled(p) + r.linear.scaled(1.0 - p)};
        }
        case Command::Kind::Call: {
            auto it = env.find(c.name);
            if (it == env.end())
                throw AnalysisError("no environment for procedure '" + c.name + "'");
            return it->second;
        }
        case Command::Kind::Seq: {
            AffineEnv first = transform_command(c.kids[0], mode, env, sp, cost);
            AffineEnv second = transform_command(c.kids[1], mode, env, sp, cost);
            // (b1 + M1 (b2 + M2 t)) = (b1 + M1 b2) + (M1 M2) t
            Expectation off = first.linear.apply(second.offset);
            for (std::size_t s = 0; s < n; ++s) off[s] += first.offset[s];
            return {std::move(off), first.linear * second.linear};
        }
    }
    throw AnalysisError("unreachable command kind in transformer");
}

// Environment-parametric transformers applied to a concrete expectation.
inline Expectation ewp(const Command& c, const EnvMap& env, const Expectation& f,
                       const StateSpace& sp) {
    Expectation r = transform_command(c, Mode::Wp, env, sp).apply(f);
    detail::check_domain_clean(r, sp);
    return r;
}

namespace detail {

inline void require_one_bounded(const Expectation& f) {
    if (f.tag() != BoundTag::OneBounded)
        throw AnalysisError("wlp takes one-bounded expectations; tag the post accordingly");
    if (!f.all_at_most_one(1e-12))
        throw AnalysisError("wlp post-expectation exceeds 1");
}

inline void require_runtime(const Expectation& t) {
    if (t.tag() != BoundTag::Runtime)
        throw AnalysisError("ert takes runtimes; tag the continuation accordingly");
}

} // namespace detail

inline Expectation ewlp(const Command& c, const EnvMap& env, const Expectation& f,
                        const StateSpace& sp) {
    detail::require_one_bounded(f);
    Expectation r = transform_command(c, Mode::Wlp, env, sp).apply(f);
    detail::check_domain_clean(r, sp);
    return r;
}

inline Expectation eert(const Command& c, const EnvMap& env, const Expectation& t,
                        const StateSpace& sp, const CostModel& cost = {}) {
    detail::require_runtime(t);
    Expectation r = transform_command(c, Mode::Ert, env, sp, cost).apply(t);
    detail::check_domain_clean(r, sp);
    return r;
}

inline Matrix wp_matrix(const Command& c, const EnvMap& env, const StateSpace& sp) {
    return transform_command(c, Mode::Wp, env, sp).linear;
}

// ---------------------------------------------------------------------------
// Kleene iteration of the environment transformers.

struct FixpointOptions {
    std::size_t max_iters = 100000;
    double tol = 1e-9;
    CostModel cost = {};
};

struct FixpointReport {
    enum class Direction { LowerBound, UpperBound };
    std::size_t iterations = 0;
    double delta_last = 0.0;
    bool converged = true;
    Direction direction = Direction::LowerBound;
};

namespace detail {

inline AffineEnv env_bottom(Mode mode, std::size_t n) {
    return mode == Mode::Wlp ? AffineEnv::constant_one(n) : AffineEnv::zero(n);
}

inline AffineEnv env_step(const Command& body, Mode mode, const EnvMap& envs, const StateSpace& sp,
                          const CostModel& cost) {
    AffineEnv next = transform_command(body, mode, envs, sp, cost);
    if (mode == Mode::Ert)
        for (std::size_t s = 0; s < sp.size(); ++s) next.offset[s] += cost.call;
    return next;
}

} // namespace detail

struct EnvFixpoint {
    EnvMap envs;
    FixpointReport report;
};

// Iterates all procedure environments simultaneously. Convergence is measured
// on the environments' action on the probe expectation and on the constant one
// vector, never on raw matrices, so infinite entries cannot poison the delta.
// Chains are checked each step: wp and ert iterates ascend, wlp iterates
// descend.
inline EnvFixpoint iterate_environments(const Program& prog, Mode mode, const StateSpace& sp,
                                        const Expectation& probe, const FixpointOptions& opts) {
    const std::size_t n = sp.size();
    EnvFixpoint out;
    out.report.direction = mode == Mode::Wlp ? FixpointReport::Direction::UpperBound
                                             : FixpointReport::Direction::LowerBound;
    for (const auto& d : prog.decls) out.envs[d.name] = detail::env_bottom(mode, n);
    if (prog.decls.empty()) {
        out.report.converged = true;
        return out;
    }

    const Expectation ones = Expectation::one(n);
    out.report.converged = false;
    for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
        EnvMap next;
        double delta = 0.0;
        for (const auto& d : prog.decls) {
            AffineEnv stepped = detail::env_step(d.body, mode, out.envs, sp, opts.cost);
            const AffineEnv& old = out.envs.at(d.name);
            Expectation ap = stepped.apply(probe), op = old.apply(probe);
            Expectation a1 = stepped.apply(ones), o1 = old.apply(ones);
            delta = std::max(delta, std::max(max_diff(ap, op), max_diff(a1, o1)));
            const double slack = 1e-12;
            bool ok = mode == Mode::Wlp ? (leq(ap, op, slack) && leq(a1, o1, slack))
                                        : (leq(op, ap, slack) && leq(o1, a1, slack));
            if (!ok)
                throw AnalysisError("environment chain for '" + d.name +
                                    "' moved against its direction");
            next[d.name] = std::move(stepped);
        }
        out.envs = std::move(next);
        out.report.iterations = iter + 1;
        out.report.delta_last = delta;
        if (delta < opts.tol) {
            out.report.converged = true;
            break;
        }
    }
    return out;
}

// Exactly n Kleene steps; the wp environments after n steps represent the
// n-th inlinings of every procedure.
inline EnvMap environment_iterates(const Program& prog, Mode mode, const StateSpace& sp,
                                   std::size_t n, const CostModel& cost = {}) {
    EnvMap envs;
    for (const auto& d : prog.decls) envs[d.name] = detail::env_bottom(mode, sp.size());
    for (std::size_t i = 0; i < n; ++i) {
        EnvMap next;
        for (const auto& d : prog.decls)
            next[d.name] = detail::env_step(d.body, mode, envs, sp, cost);
        envs = std::move(next);
    }
    return envs;
}

// ---------------------------------------------------------------------------
// Top-level transformers.

inline std::pair<Expectation, FixpointReport> wp(const Program& prog, const StateSpace& sp,
                                                 const Expectation& f,
                                                 const FixpointOptions& opts = {}) {
    EnvFixpoint fp = iterate_environments(prog, Mode::Wp, sp, f, opts);
    return {ewp(prog.main, fp.envs, f, sp), fp.report};
}

inline std::pair<Expectation, FixpointReport> wlp(const Program& prog, const StateSpace& sp,
                                                  const Expectation& f,
                                                  const FixpointOptions& opts = {}) {
    detail::require_one_bounded(f);
    EnvFixpoint fp = iterate_environments(prog, Mode::Wlp, sp, f, opts);
    return {ewlp(prog.main, fp.envs, f, sp), fp.report};
}

inline std::pair<Expectation, FixpointReport> ert(const Program& prog, const StateSpace& sp,
                                                  const Expectation& t,
                                                  const FixpointOptions& opts = {}) {
    detail::require_runtime(t);
    EnvFixpoint fp = iterate_environments(prog, Mode::Ert, sp, t, opts);
    return {eert(prog.main, fp.envs, t, sp, opts.cost), fp.report};
}

// Convenience overloads taking a labeled program.
inline std::pair<Expectation, FixpointReport> wp(const LabeledProgram& lp, const StateSpace& sp,
                                                 const Expectation& f,
                                                 const FixpointOptions& opts = {}) {
    return wp(*lp.program, sp, f, opts);
}
inline std::pair<Expectation, FixpointReport> wlp(const LabeledProgram& lp, const StateSpace& sp,
                                                  const Expectation& f,
                                                  const FixpointOptions& opts = {}) {
    return wlp(*lp.program, sp, f, opts);
}
inline std::pair<Expectation, FixpointReport> ert(const LabeledProgram& lp, const StateSpace& sp,
                                                  const Expectation& t,
                                                  const FixpointOptions& opts = {}) {
    return ert(*lp.program, sp, t, opts);
}

// ---------------------------------------------------------------------------
// ert(t) = ert(0) + wp(t), checked at matched iteration counts. The left side
// runs the runtime engine; the right side re-derives the wp environments with
// the independent wp iteration, so the check exercises the claim that the
// linear part of the runtime environments coincides with the wp environments.

struct DecomposeResult {
    Expectation lhs;
    Expectation rhs;
    double max_gap = 0.0;
    std::size_t iterations = 0;
};

inline DecomposeResult decompose_check(const Program& prog, const StateSpace& sp,
                                       const Expectation& t, const FixpointOptions& opts = {}) {
    EnvFixpoint ert_fp = iterate_environments(prog, Mode::Ert, sp, t, opts);
    std::size_t n_iters = ert_fp.report.iterations;
    EnvMap wp_envs = environment_iterates(prog, Mode::Wp, sp, n_iters);

    DecomposeResult r;
    r.iterations = n_iters;
    r.lhs = eert(prog.main, ert_fp.envs, t, sp, opts.cost);
    Expectation ert_zero = eert(prog.main, ert_fp.envs,
                                Expectation::zero(sp.size(), BoundTag::Runtime), sp, opts.cost);
    Expectation wp_t = ewp(prog.main, wp_envs, t, sp);
    r.rhs = add(ert_zero, wp_t);
    r.max_gap = max_diff(r.lhs, r.rhs);
    return r;
}

} // namespace prexpect
