#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prexpect/expectation.hpp"
#include "prexpect/rational.hpp"
#include "prexpect/state.hpp"

namespace prexpect {

// Expression DSL for post-expectations, runtimes and rule-checker bounds.
// Subtraction is monus (clamped at zero) so well-formed expressions stay in
// [0, inf]; intermediate terms may pass through negative values (pow admits
// negative bases) but the value of the whole expression at every state must
// land in [0, inf], enforced at evaluation.
struct ExpectationExpr {
    enum class Kind {
        RationalLit, // lit
        Inf,
        Indicator,   // guard
        Value,       // ie: numeric value of a variable/parameter expression
        Add, Sub, Mul, Min, Max,
        Harmonic,    // ie: H_k, zero for k <= 0
        Pow,         // lit ^ ie
        Prev,        // previous member of an omega-rule family
    };

    struct Node {
        Kind kind = Kind::RationalLit;
        Rational lit;
        BoolExpr guard;
        IntExpr ie;
        std::vector<Node> kids;
    };

    Node root;
    bool mentions_index = false;
    bool mentions_prev = false;
    std::string source; // original text, kept for reports
};

namespace detail {

inline void subst_index_iexpr(IntExpr& e, long long value) {
    if (e.kind == IntExpr::Kind::Var && e.name == "n") {
        e = IntExpr::lit(value);
        return;
    }
    for (auto& k : e.kids) subst_index_iexpr(k, value);
}

inline void subst_index_bexpr(BoolExpr& b, long long value) {
    for (auto& a : b.args) subst_index_iexpr(a, value);
    for (auto& k : b.kids) subst_index_bexpr(k, value);
}

inline void subst_index_node(ExpectationExpr::Node& n, long long value) {
    subst_index_iexpr(n.ie, value);
    subst_index_bexpr(n.guard, value);
    for (auto& k : n.kids) subst_index_node(k, value);
}

inline double harmonic_number(long long k) {
    if (k <= 0) return 0.0;
    double h = 0.0;
    for (long long i = 1; i <= k; ++i) h += 1.0 / static_cast<double>(i);
    return h;
}

inline double int_pow(double base, long long e) {
    bool invert = e < 0;
    unsigned long long n = invert ? static_cast<unsigned long long>(-e)
                                  : static_cast<unsigned long long>(e);
    double r = 1.0, b = base;
    while (n > 0) {
        if (n & 1ull) r *= b;
        b *= b;
        n >>= 1;
    }
    return invert ? 1.0 / r : r;
}

// Evaluation over the extended real line; the caller clamps/validates.
inline double eval_node(const ExpectationExpr::Node& n, std::size_t s, const StateSpace& sp,
                        const Expectation* prev) {
    switch (n.kind) {
        case ExpectationExpr::Kind::RationalLit: return n.lit.to_double();
        case ExpectationExpr::Kind::Inf: return ext::inf;
        case ExpectationExpr::Kind::Indicator: return eval_bool(n.guard, s, sp) ? 1.0 : 0.0;
        case ExpectationExpr::Kind::Value:
            return static_cast<double>(eval_int(n.ie, s, sp));
        case ExpectationExpr::Kind::Add:
            return eval_node(n.kids[0], s, sp, prev) + eval_node(n.kids[1], s, sp, prev);
        case ExpectationExpr::Kind::Sub: {
            double a = eval_node(n.kids[0], s, sp, prev);
            double b = eval_node(n.kids[1], s, sp, prev);
            if (std::isinf(a) && std::isinf(b) && a > 0 && b > 0) return 0.0;
            return a > b ? a - b : 0.0;
        }
        case ExpectationExpr::Kind::Mul: {
            double a = eval_node(n.kids[0], s, sp, prev);
            double b = eval_node(n.kids[1], s, sp, prev);
            if (a == 0.0 || b == 0.0) return 0.0;
            return a * b;
        }
        case ExpectationExpr::Kind::Min:
            return std::min(eval_node(n.kids[0], s, sp, prev), eval_node(n.kids[1], s, sp, prev));
        case ExpectationExpr::Kind::Max:
            return std::max(eval_node(n.kids[0], s, sp, prev), eval_node(n.kids[1], s, sp, prev));
        case ExpectationExpr::Kind::Harmonic:
            return harmonic_number(eval_int(n.ie, s, sp));
        case ExpectationExpr::Kind::Pow:
            return int_pow(n.lit.to_double(), eval_int(n.ie, s, sp));
        case ExpectationExpr::Kind::Prev:
            if (!prev) throw AnalysisError("'prev' used outside a family evaluation");
            return (*prev)[s];
    }
    throw AnalysisError("unreachable expectation expression kind");
}

} // namespace detail

inline Expectation eval_expectation(const ExpectationExpr& e, const StateSpace& sp,
                                    std::optional<long long> index_value = std::nullopt,
                                    const Expectation* prev = nullptr,
                                    BoundTag tag = BoundTag::Unbounded) {
    if (e.mentions_index && !index_value)
        throw AnalysisError("expectation mentions the index 'n' but no index was supplied");
    if (!e.mentions_index && index_value)
        throw AnalysisError("index supplied but the expectation does not mention 'n'");
    if (e.mentions_prev && !prev)
        throw AnalysisError("expectation mentions 'prev' but no previous member was supplied");

    ExpectationExpr::Node root = e.root;
    if (index_value) detail::subst_index_node(root, *index_value);

    Expectation out(sp.size(), 0.0, tag);
    for (std::size_t s = 0; s < sp.size(); ++s) {
        double v = detail::eval_node(root, s, sp, prev);
        if (std::isnan(v))
            throw AnalysisError("expectation is undefined at state " + sp.describe(s));
        if (v < 0.0)
            throw AnalysisError("expectation is negative (" + std::to_string(v) + ") at state " +
                                sp.describe(s));
        out[s] = v;
    }
    return out;
}

} // namespace prexpect
