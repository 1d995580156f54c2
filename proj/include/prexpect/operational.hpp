#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prexpect/expectation.hpp"
#include "prexpect/rational.hpp"
#include "prexpect/syntax.hpp"
#include "prexpect/transformers.hpp"

namespace prexpect {

// Operational configuration: control label (statement label, down, or Term),
// program state, and the label stack above the bottom symbol (which is never
// popped). back() is the top of the stack.
struct PrmcConfig {
    Label control = kLabelDown;
    std::size_t state = 0;
    std::vector<Label> stack;

    bool operator<(const PrmcConfig& o) const {
        if (control != o.control) return control < o.control;
        if (state != o.state) return state < o.state;
        return stack < o.stack;
    }
    bool operator==(const PrmcConfig& o) const {
        return control == o.control && state == o.state && stack == o.stack;
    }
};

struct Transition {
    Rational prob;
    PrmcConfig next;
    std::string pop;   // symbol popped (display form)
    std::string push;  // symbols pushed (display form)
};

inline std::string label_name(Label l) {
    if (l == kLabelDown) return "↓";
    if (l == kLabelTerm) return "Term";
    return std::to_string(l);
}

// One step of the pushdown Markov chain. Outgoing probabilities of every
// configuration sum to exactly 1 in rational arithmetic.
inline std::vector<Transition> step(const PrmcConfig& cfg, const LabeledProgram& lp,
                                    const StateSpace& sp) {
    std::vector<Transition> out;
    auto same_stack = [&](Label ctrl, std::size_t st, Rational p) {
        out.push_back({p, PrmcConfig{ctrl, st, cfg.stack}, "γ", "γ"});
    };

    if (cfg.control == kLabelTerm) {
        same_stack(kLabelTerm, cfg.state, Rational(1));
        return out;
    }
    if (cfg.control == kLabelDown) {
        if (cfg.stack.empty()) {
            out.push_back({Rational(1), PrmcConfig{kLabelTerm, cfg.state, cfg.stack},
                           "γ₀", "γ₀"});
        } else {
            PrmcConfig next{cfg.stack.back(), cfg.state, cfg.stack};
            next.stack.pop_back();
            out.push_back({Rational(1), std::move(next), label_name(cfg.stack.back()), "ε"});
        }
        return out;
    }

    const Command& c = lp.stmt(cfg.control);
    switch (c.kind) {
        case Command::Kind::Skip:
            same_stack(lp.succ1(cfg.control), cfg.state, Rational(1));
            break;
        case Command::Kind::Abort:
            same_stack(cfg.control, cfg.state, Rational(1));
            break;
        case Command::Kind::Assign: {
            int vi = sp.var_index(c.name);
            long long v = eval_int(c.exprs[0], cfg.state, sp);
            same_stack(lp.succ1(cfg.control),
                       sp.with_value(cfg.state, static_cast<std::size_t>(vi), v), Rational(1));
            break;
        }
        case Command::Kind::Uniform: {
            long long lo = eval_int(c.exprs[0], cfg.state, sp);
            long long hi = eval_int(c.exprs[1], cfg.state, sp);
            if (lo > hi) {
                same_stack(cfg.control, cfg.state, Rational(1)); // empty range diverges
                break;
            }
            int vi = sp.var_index(c.name);
            Rational w(1, hi - lo + 1);
            for (long long v = lo; v <= hi; ++v)
                same_stack(lp.succ1(cfg.control),
                           sp.with_value(cfg.state, static_cast<std::size_t>(vi), v), w);
            break;
        }
        case Command::Kind::If:
            same_stack(eval_bool(c.guard, cfg.state, sp) ? lp.succ1(cfg.control)
                                                         : lp.succ2(cfg.control),
                       cfg.state, Rational(1));
            break;
        case Command::Kind::PChoice: {
            Rational p = c.prob;
            if (p > Rational(0)) same_stack(lp.succ1(cfg.control), cfg.state, p);
            if (p < Rational(1)) same_stack(lp.succ2(cfg.control), cfg.state, Rational(1) - p);
            break;
        }
        case Command::Kind::Call: {
            Label ret = lp.succ1(cfg.control);
            PrmcConfig next{lp.init_of(c.name), cfg.state, cfg.stack};
            next.stack.push_back(ret);
            out.push_back({Rational(1), std::move(next), "γ",
                           "γ·" + label_name(ret)});
            break;
        }
        case Command::Kind::Seq:
            throw AnalysisError("sequencing carries no label");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bounded-stack expected rewards. Configurations may hold at most
// `stack_bound` symbols above the bottom; a push past the bound self-loops,
// so the restricted chain exhibits a partial behavior of the full one and its
// expected reward is monotone in the bound.

struct RewardOptions {
    std::size_t stack_bound = 64;
    double tol = 1e-12;
    std::size_t max_sweeps = 200000;
    std::size_t max_configs = 2000000;
    std::size_t dense_solve_limit = 0; // 0 = value iteration only
};

struct PrmcSystem {
    std::vector<PrmcConfig> configs;
    std::vector<std::vector<std::pair<double, std::size_t>>> succs; // per config
    std::vector<std::size_t> term_state; // valid where is_term
    std::vector<bool> is_term;
    std::map<PrmcConfig, std::size_t> index;
    bool truncated = false;
};

inline PrmcSystem build_system(const LabeledProgram& lp, const StateSpace& sp,
                               const std::vector<std::size_t>& initial_states,
                               std::size_t stack_bound, std::size_t max_configs) {
    PrmcSystem sys;
    std::vector<std::size_t> work;
    auto intern = [&](const PrmcConfig& c) {
        auto it = sys.index.find(c);
        if (it != sys.index.end()) return it->second;
        if (sys.configs.size() >= max_configs)
            throw AnalysisError("configuration count exceeds the cap of " +
                                std::to_string(max_configs) +
                                " (set PREXPECT_MAX_CONFIGS to raise it)");
        std::size_t id = sys.configs.size();
        sys.index.emplace(c, id);
        sys.configs.push_back(c);
        sys.succs.emplace_back();
        sys.is_term.push_back(c.control == kLabelTerm);
        sys.term_state.push_back(c.state);
        work.push_back(id);
        return id;
    };

    for (std::size_t s0 : initial_states)
        intern(PrmcConfig{lp.main_init, s0, {}});

    while (!work.empty()) {
        std::size_t id = work.back();
        work.pop_back();
        PrmcConfig cfg = sys.configs[id];
        if (cfg.control == kLabelTerm) continue; // absorbing
        bool is_push = cfg.control != kLabelDown &&
                       lp.stmt(cfg.control).kind == Command::Kind::Call;
        if (is_push && cfg.stack.size() >= stack_bound) {
            sys.truncated = true;
            sys.succs[id].push_back({1.0, id}); // bound-induced self-loop
            continue;
        }
        for (const Transition& t : step(cfg, lp, sp)) {
            std::size_t to = intern(t.next);
            sys.succs[id].push_back({t.prob.to_double(), to});
        }
    }
    return sys;
}

// Least fixed point of the Bellman operator by monotone Gauss-Seidel sweeps
// from zero; Term configurations are pinned at the reward f.
inline std::vector<double> solve_values(const PrmcSystem& sys, const Expectation& f, double tol,
                                        std::size_t max_sweeps) {
    std::vector<double> v(sys.configs.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (sys.is_term[i]) v[i] = f[sys.term_state[i]];
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t i = v.size(); i-- > 0;) {
            if (sys.is_term[i]) continue;
            double acc = 0.0;
            for (const auto& [p, to] : sys.succs[i]) {
                if (p != 0.0 && v[to] != 0.0) acc += p * v[to];
            }
            delta = std::max(delta, ext::diff(acc, v[i]));
            v[i] = acc;
        }
        if (delta < tol) break;
    }
    return v;
}

// Absorbing-chain linear solve for small systems with finite rewards; used to
// cross-check value iteration. Configurations that cannot reach Term get 0.
inline std::vector<double> solve_values_dense(const PrmcSystem& sys, const Expectation& f) {
    const std::size_t n = sys.configs.size();
    std::vector<bool> reaches(n, false);
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<std::size_t> work;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [p, to] : sys.succs[i])
            if (p > 0.0) preds[to].push_back(i);
        if (sys.is_term[i]) {
            reaches[i] = true;
            work.push_back(i);
        }
    }
    while (!work.empty()) {
        std::size_t i = work.back();
        work.pop_back();
        for (std::size_t pr : preds[i]) {
            if (!reaches[pr]) {
                reaches[pr] = true;
                work.push_back(pr);
            }
        }
    }
    std::vector<std::size_t> live;
    std::vector<std::size_t> live_index(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
        if (reaches[i] && !sys.is_term[i]) {
            live_index[i] = live.size();
            live.push_back(i);
        }
    }
    std::vector<std::vector<double>> a(live.size(), std::vector<double>(live.size(), 0.0));
    std::vector<double> b(live.size(), 0.0);
    for (std::size_t r = 0; r < live.size(); ++r) {
        a[r][r] = 1.0;
        for (const auto& [p, to] : sys.succs[live[r]]) {
            if (sys.is_term[to]) b[r] += p * f[sys.term_state[to]];
            else if (live_index[to] != SIZE_MAX) a[r][live_index[to]] -= p;
        }
    }
    std::vector<double> x = live.empty() ? std::vector<double>{} : solve_dense(a, b);
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (sys.is_term[i]) v[i] = f[sys.term_state[i]];
        else if (live_index[i] != SIZE_MAX) v[i] = x[live_index[i]];
    }
    return v;
}

struct RewardResult {
    double value = 0.0;
    bool truncated = false;
    std::size_t configs = 0;
};

inline RewardResult expected_reward_bounded(const LabeledProgram& lp, const StateSpace& sp,
                                            std::size_t initial_state, const Expectation& f,
                                            std::size_t stack_bound,
                                            const RewardOptions& opts = {}) {
    PrmcSystem sys = build_system(lp, sp, {initial_state}, stack_bound, opts.max_configs);
    bool dense = opts.dense_solve_limit > 0 && sys.configs.size() <= opts.dense_solve_limit &&
                 f.all_finite();
    std::vector<double> v = dense ? solve_values_dense(sys, f)
                                  : solve_values(sys, f, opts.tol, opts.max_sweeps);
    std::size_t init = sys.index.at(PrmcConfig{lp.main_init, initial_state, {}});
    RewardResult r;
    r.value = v[init];
    r.truncated = sys.truncated;
    r.configs = sys.configs.size();
    return r;
}

// |bounded-stack expected reward - ewp under the level-n wp environments|.
// The stack bound equals the inlining depth: n pushes above the bottom symbol.
inline double correspondence_check(const LabeledProgram& lp, const StateSpace& sp,
                                   std::size_t initial_state, const Expectation& f, std::size_t n,
                                   const RewardOptions& opts = {}) {
    RewardResult op = expected_reward_bounded(lp, sp, initial_state, f, n, opts);
    EnvMap envs = environment_iterates(*lp.program, Mode::Wp, sp, n);
    Expectation den = ewp(lp.program->main, envs, f, sp);
    return ext::diff(op.value, den[initial_state]);
}

// Bulk variant over every initial state, sharing one system and one solve.
inline double correspondence_max_gap(const LabeledProgram& lp, const StateSpace& sp,
                                     const Expectation& f, std::size_t n,
                                     const RewardOptions& opts = {}) {
    std::vector<std::size_t> inits(sp.size());
    for (std::size_t s = 0; s < sp.size(); ++s) inits[s] = s;
    PrmcSystem sys = build_system(lp, sp, inits, n, opts.max_configs);
    std::vector<double> v = solve_values(sys, f, opts.tol, opts.max_sweeps);
    EnvMap envs = environment_iterates(*lp.program, Mode::Wp, sp, n);
    Expectation den = ewp(lp.program->main, envs, f, sp);
    double gap = 0.0;
    for (std::size_t s = 0; s < sp.size(); ++s) {
        std::size_t id = sys.index.at(PrmcConfig{lp.main_init, s, {}});
        gap = std::max(gap, ext::diff(v[id], den[s]));
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Seeded Monte-Carlo simulation. Runs are independent; run i draws from a
// generator seeded by splitmix64(seed, i), so results are reproducible and
// independent of any execution order.

struct SimulationResult {
    double mean_reward = 0.0;
    double term_fraction = 0.0;
    double ci95 = 0.0;
    std::uint64_t seed = 0;
    std::size_t runs = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

inline SimulationResult simulate(const LabeledProgram& lp, const StateSpace& sp,
                                 std::size_t initial_state, const Expectation& f,
                                 std::size_t runs, std::size_t max_steps, std::uint64_t seed) {
    if (runs == 0) throw AnalysisError("simulation needs at least one run");
    double sum = 0.0, sum_sq = 0.0;
    std::size_t terminated = 0;
    std::vector<Label> stack;
    // scramble the master seed before mixing in the run index, otherwise
    // adjacent seeds would share shifted per-run streams
    const std::uint64_t stream_base = detail::splitmix64(seed);
    for (std::size_t run = 0; run < runs; ++run) {
        std::mt19937_64 rng(detail::splitmix64(stream_base + run));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Label control = lp.main_init;
        std::size_t state = initial_state;
        stack.clear();
        double reward = 0.0;
        for (std::size_t stepn = 0; stepn < max_steps; ++stepn) {
            if (control == kLabelTerm) break;
            if (control == kLabelDown) {
                if (stack.empty()) {
                    control = kLabelTerm;
                    reward = f[state];
                    ++terminated;
                    break;
                }
                control = stack.back();
                stack.pop_back();
                continue;
            }
            const Command& c = lp.stmt(control);
            switch (c.kind) {
                case Command::Kind::Skip:
                    control = lp.succ1(control);
                    break;
                case Command::Kind::Abort:
                    stepn = max_steps; // diverges
                    break;
                case Command::Kind::Assign: {
                    int vi = sp.var_index(c.name);
                    state = sp.with_value(state, static_cast<std::size_t>(vi),
                                          eval_int(c.exprs[0], state, sp));
                    control = lp.succ1(control);
                    break;
                }
                case Command::Kind::Uniform: {
                    long long lo = eval_int(c.exprs[0], state, sp);
                    long long hi = eval_int(c.exprs[1], state, sp);
                    if (lo > hi) {
                        stepn = max_steps;
                        break;
                    }
                    long long span = hi - lo + 1;
                    long long v = lo + static_cast<long long>(unit(rng) * static_cast<double>(span));
                    if (v > hi) v = hi;
                    int vi = sp.var_index(c.name);
                    state = sp.with_value(state, static_cast<std::size_t>(vi), v);
                    control = lp.succ1(control);
                    break;
                }
                case Command::Kind::If:
                    control = eval_bool(c.guard, state, sp) ? lp.succ1(control)
                                                            : lp.succ2(control);
                    break;
                case Command::Kind::PChoice:
                    control = unit(rng) < c.prob.to_double() ? lp.succ1(control)
                                                             : lp.succ2(control);
                    break;
                case Command::Kind::Call:
                    stack.push_back(lp.succ1(control));
                    control = lp.init_of(c.name);
                    break;
                case Command::Kind::Seq:
                    throw AnalysisError("sequencing carries no label");
            }
        }
        sum += reward;
        sum_sq += reward * reward;
    }
    SimulationResult r;
    r.runs = runs;
    r.seed = seed;
    r.mean_reward = sum / static_cast<double>(runs);
    r.term_fraction = static_cast<double>(terminated) / static_cast<double>(runs);
    double var = sum_sq / static_cast<double>(runs) - r.mean_reward * r.mean_reward;
    if (var < 0.0) var = 0.0;
    r.ci95 = 1.96 * std::sqrt(var / static_cast<double>(runs));
    return r;
}

// ---------------------------------------------------------------------------
// GraphViz export of the label-level transition structure. Edges carry the
// pop/probability/push annotations; program states are not part of the graph,
// guards and samplings are annotated symbolically instead.

inline std::string export_dot(const LabeledProgram& lp) {
    std::ostringstream os;
    os << "digraph prmc {\n  rankdir=LR;\n  node [shape=circle];\n";
    auto node_id = [](Label l) {
        if (l == kLabelDown) return std::string("down");
        if (l == kLabelTerm) return std::string("term");
        return std::to_string(l);
    };
    os << "  down [label=\"↓\"];\n  term [label=\"Term\", shape=doublecircle];\n";
    std::set<Label> pushed;
    for (Label l = 1; l <= static_cast<Label>(lp.label_count()); ++l) {
        const Command& c = lp.stmt(l);
        std::string from = node_id(l);
        auto edge = [&](Label to, const std::string& anno) {
            os << "  " << from << " -> " << node_id(to) << " [label=\"" << anno << "\"];\n";
        };
        switch (c.kind) {
            case Command::Kind::Skip:
                edge(lp.succ1(l), "γ,1,γ");
                break;
            case Command::Kind::Abort:
                edge(l, "γ,1,γ");
                break;
            case Command::Kind::Assign:
                edge(lp.succ1(l), "γ,1,γ");
                break;
            case Command::Kind::Uniform:
                edge(lp.succ1(l), "γ,uniform,γ");
                break;
            case Command::Kind::If:
                edge(lp.succ1(l), "γ,[" + to_string(c.guard) + "],γ");
                edge(lp.succ2(l), "γ,[!(" + to_string(c.guard) + ")],γ");
                break;
            case Command::Kind::PChoice: {
                edge(lp.succ1(l), "γ," + c.prob.str() + ",γ");
                Rational q = Rational(1) - c.prob;
                edge(lp.succ2(l), "γ," + q.str() + ",γ");
                break;
            }
            case Command::Kind::Call: {
                Label ret = lp.succ1(l);
                pushed.insert(ret);
                os << "  " << from << " -> " << node_id(lp.init_of(c.name)) << " [label=\""
                   << "γ,1,γ·" << label_name(ret) << "\"];\n";
                break;
            }
            case Command::Kind::Seq:
                break;
        }
    }
    for (Label r : pushed)
        os << "  down -> " << node_id(r) << " [label=\"" << label_name(r) << ",1,ε\"];\n";
    os << "  down -> term [label=\"γ₀,1,γ₀\"];\n";
    os << "}\n";
    return os.str();
}

} // namespace prexpect
