#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "prexpect/ast.hpp"

namespace prexpect {

using ParamValue = std::variant<long long, std::vector<long long>>;
using ParamBinding = std::map<std::string, ParamValue>;

// Enumerated product of the declared variable domains. The enumeration is
// mixed-radix with the first declared variable fastest; parameters are
// read-only and fixed per analysis.
class StateSpace {
public:
    StateSpace() = default;

    StateSpace(const Program& prog, ParamBinding params = {})
        : vars_(prog.vars), params_(std::move(params)) {
        size_ = 1;
        strides_.reserve(vars_.size());
        for (const auto& v : vars_) {
            if (v.lo > v.hi)
                throw AnalysisError("empty domain for variable '" + v.name + "'");
            strides_.push_back(size_);
            size_ *= static_cast<std::size_t>(v.hi - v.lo + 1);
        }
        for (const auto& p : prog.params) {
            if (!params_.count(p.name))
                throw AnalysisError("missing binding for parameter '" + p.name + "'");
            bool is_array = std::holds_alternative<std::vector<long long>>(params_.at(p.name));
            if (is_array != (p.kind == ParamDecl::Kind::IntArray))
                throw AnalysisError("binding for parameter '" + p.name + "' has the wrong kind");
        }
    }

    std::size_t size() const { return size_; }
    const std::vector<VarDecl>& vars() const { return vars_; }
    const ParamBinding& params() const { return params_; }

    int var_index(const std::string& name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    long long value_at(std::size_t state, std::size_t var) const {
        const auto& v = vars_[var];
        std::size_t radix = static_cast<std::size_t>(v.hi - v.lo + 1);
        return v.lo + static_cast<long long>((state / strides_[var]) % radix);
    }

    // State index with one variable replaced; throws on domain violation.
    std::size_t with_value(std::size_t state, std::size_t var, long long value) const {
        const auto& v = vars_[var];
        if (value < v.lo || value > v.hi)
            throw AnalysisError("assignment drives '" + v.name + "' to " + std::to_string(value) +
                                ", outside " + std::to_string(v.lo) + ".." + std::to_string(v.hi) +
                                " (state " + describe(state) + ")");
        std::size_t radix = static_cast<std::size_t>(v.hi - v.lo + 1);
        long long old_digit = (state / strides_[var]) % radix;
        long long new_digit = value - v.lo;
        return state + static_cast<std::size_t>(new_digit - old_digit) * strides_[var];
    }

    std::string describe(std::size_t state) const {
        if (vars_.empty()) return "<>";
        std::string out;
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (i) out += ", ";
            out += vars_[i].name + "=" + std::to_string(value_at(state, i));
        }
        return out;
    }

private:
    std::vector<VarDecl> vars_;
    ParamBinding params_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

// A state is an index into the enumeration plus access by name.
struct State {
    const StateSpace* space = nullptr;
    std::size_t index = 0;

    long long operator[](const std::string& name) const {
        int vi = space->var_index(name);
        if (vi < 0) throw AnalysisError("unknown variable '" + name + "'");
        return space->value_at(index, static_cast<std::size_t>(vi));
    }
};

inline long long eval_int(const IntExpr& e, std::size_t state, const StateSpace& sp) {
    switch (e.kind) {
        case IntExpr::Kind::Literal: return e.literal;
        case IntExpr::Kind::Var: {
            int vi = sp.var_index(e.name);
            if (vi >= 0) return sp.value_at(state, static_cast<std::size_t>(vi));
            auto it = sp.params().find(e.name);
            if (it == sp.params().end())
                throw AnalysisError("unknown identifier '" + e.name + "'");
            if (!std::holds_alternative<long long>(it->second))
                throw AnalysisError("array parameter '" + e.name + "' used without an index");
            return std::get<long long>(it->second);
        }
        case IntExpr::Kind::ArrayAt: {
            auto it = sp.params().find(e.name);
            if (it == sp.params().end() ||
                !std::holds_alternative<std::vector<long long>>(it->second))
                throw AnalysisError("'" + e.name + "' is not an array parameter");
            const auto& arr = std::get<std::vector<long long>>(it->second);
            long long idx = eval_int(e.kids[0], state, sp);
            if (idx < 0 || static_cast<std::size_t>(idx) >= arr.size())
                throw AnalysisError("index " + std::to_string(idx) + " out of bounds for '" +
                                    e.name + "' of size " + std::to_string(arr.size()) +
                                    " (state " + sp.describe(state) + ")");
            return arr[static_cast<std::size_t>(idx)];
        }
        case IntExpr::Kind::Add: return eval_int(e.kids[0], state, sp) + eval_int(e.kids[1], state, sp);
        case IntExpr::Kind::Sub: return eval_int(e.kids[0], state, sp) - eval_int(e.kids[1], state, sp);
        case IntExpr::Kind::Mul: return eval_int(e.kids[0], state, sp) * eval_int(e.kids[1], state, sp);
        case IntExpr::Kind::Min: {
            long long a = eval_int(e.kids[0], state, sp), b = eval_int(e.kids[1], state, sp);
            return a < b ? a : b;
        }
        case IntExpr::Kind::Max: {
            long long a = eval_int(e.kids[0], state, sp), b = eval_int(e.kids[1], state, sp);
            return a > b ? a : b;
        }
        case IntExpr::Kind::Neg: return -eval_int(e.kids[0], state, sp);
    }
    throw AnalysisError("unreachable int expression kind");
}

inline bool eval_bool(const BoolExpr& b, std::size_t state, const StateSpace& sp) {
    switch (b.kind) {
        case BoolExpr::Kind::Literal: return b.literal;
        case BoolExpr::Kind::Cmp: {
            long long l = eval_int(b.args[0], state, sp);
            long long r = eval_int(b.args[1], state, sp);
            switch (b.op) {
                case BoolExpr::CmpOp::Eq: return l == r;
                case BoolExpr::CmpOp::Ne: return l != r;
                case BoolExpr::CmpOp::Lt: return l < r;
                case BoolExpr::CmpOp::Le: return l <= r;
                case BoolExpr::CmpOp::Gt: return l > r;
                case BoolExpr::CmpOp::Ge: return l >= r;
            }
            return false;
        }
        case BoolExpr::Kind::And:
            return eval_bool(b.kids[0], state, sp) && eval_bool(b.kids[1], state, sp);
        case BoolExpr::Kind::Or:
            return eval_bool(b.kids[0], state, sp) || eval_bool(b.kids[1], state, sp);
        case BoolExpr::Kind::Not:
            return !eval_bool(b.kids[0], state, sp);
    }
    throw AnalysisError("unreachable bool expression kind");
}

} // namespace prexpect
