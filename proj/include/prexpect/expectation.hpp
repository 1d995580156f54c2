#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "prexpect/state.hpp"

namespace prexpect {

// ---------------------------------------------------------------------------
// Arithmetic on [0, inf] with the convention 0 * inf = 0.

namespace ext {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline double mul(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

inline double monus(double a, double b) {
    if (std::isinf(a) && std::isinf(b)) return 0.0;
    return a > b ? a - b : 0.0;
}

// |a - b| with inf == inf counting as no difference.
inline double diff(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b);
}

} // namespace ext

// ---------------------------------------------------------------------------
// Expectations: dense vectors over a state space, tagged with the carrier
// they live in. Runtimes share the carrier of unbounded expectations but the
// tag gates which transformer accepts them.

enum class BoundTag { Unbounded, OneBounded, Runtime };

class Expectation {
public:
    Expectation() = default;
    Expectation(std::size_t n, double fill, BoundTag tag = BoundTag::Unbounded)
        : values_(n, fill), tag_(tag) {}
    Expectation(std::vector<double> values, BoundTag tag = BoundTag::Unbounded)
        : values_(std::move(values)), tag_(tag) {}

    static Expectation zero(std::size_t n, BoundTag tag = BoundTag::Unbounded) {
        return Expectation(n, 0.0, tag);
    }
    static Expectation one(std::size_t n, BoundTag tag = BoundTag::Unbounded) {
        return Expectation(n, 1.0, tag);
    }
    static Expectation constant(std::size_t n, double v, BoundTag tag = BoundTag::Unbounded) {
        return Expectation(n, v, tag);
    }

    std::size_t size() const { return values_.size(); }
    BoundTag tag() const { return tag_; }
    void set_tag(BoundTag t) { tag_ = t; }
    Expectation with_tag(BoundTag t) const { Expectation e = *this; e.tag_ = t; return e; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const {
        for (double v : values_)
            if (std::isinf(v)) return false;
        return true;
    }
    bool all_at_most_one(double tol = 0.0) const {
        for (double v : values_)
            if (v > 1.0 + tol) return false;
        return true;
    }

private:
    std::vector<double> values_;
    BoundTag tag_ = BoundTag::Unbounded;
};

inline void require_same_space(const Expectation& f, const Expectation& g) {
    if (f.size() != g.size())
        throw AnalysisError("expectations over mismatched state spaces");
}

inline bool leq(const Expectation& f, const Expectation& g, double tol) {
    require_same_space(f, g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::isinf(g[i])) continue;
        if (f[i] > g[i] + tol) return false;
    }
    return true;
}

inline Expectation add(const Expectation& f, const Expectation& g) {
    require_same_space(f, g);
    Expectation r = f;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += g[i];
    return r;
}

inline Expectation scale(double a, const Expectation& f) {
    Expectation r = f;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ext::mul(a, r[i]);
    return r;
}

inline Expectation pointwise_mul(const Expectation& f, const Expectation& g) {
    require_same_space(f, g);
    Expectation r = f;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ext::mul(r[i], g[i]);
    return r;
}

inline Expectation sup_pointwise(const Expectation& f, const Expectation& g) {
    require_same_space(f, g);
    Expectation r = f;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::max(r[i], g[i]);
    return r;
}

inline Expectation inf_pointwise(const Expectation& f, const Expectation& g) {
    require_same_space(f, g);
    Expectation r = f;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::min(r[i], g[i]);
    return r;
}

inline double max_diff(const Expectation& f, const Expectation& g) {
    require_same_space(f, g);
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, ext::diff(f[i], g[i]));
    return m;
}

// g(s) = f(s[x := E(s)]); hard error if the assignment leaves the domain.
inline Expectation substitute_in_expectation(const Expectation& f, const std::string& var,
                                             const IntExpr& e, const StateSpace& sp) {
    int vi = sp.var_index(var);
    if (vi < 0) throw AnalysisError("unknown variable '" + var + "' in substitution");
    Expectation r(f.size(), 0.0, f.tag());
    for (std::size_t s = 0; s < f.size(); ++s) {
        long long v = eval_int(e, s, sp);
        r[s] = f[sp.with_value(s, static_cast<std::size_t>(vi), v)];
    }
    return r;
}

// Same substitution, but a state whose target leaves the domain is poisoned
// with NaN instead of raising. The transformers and the rule replay evaluate
// branches on every state and rely on guard indicators to mask states the
// branch cannot actually be entered from; a poisoned value that survives to
// a final result is still a hard error, reported by the caller.
inline Expectation substitute_lenient(const Expectation& f, const std::string& var,
                                      const IntExpr& e, const StateSpace& sp) {
    int vi = sp.var_index(var);
    if (vi < 0) throw AnalysisError("unknown variable '" + var + "' in substitution");
    Expectation r(f.size(), 0.0, f.tag());
    const auto& decl = sp.vars()[static_cast<std::size_t>(vi)];
    for (std::size_t s = 0; s < f.size(); ++s) {
        long long v = eval_int(e, s, sp);
        if (v < decl.lo || v > decl.hi) {
            r[s] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        r[s] = f[sp.with_value(s, static_cast<std::size_t>(vi), v)];
    }
    return r;
}

inline std::optional<std::size_t> first_nan(const Expectation& f) {
    for (std::size_t s = 0; s < f.size(); ++s)
        if (std::isnan(f[s])) return s;
    return std::nullopt;
}

inline Expectation indicator(const BoolExpr& guard, const StateSpace& sp,
                             BoundTag tag = BoundTag::Unbounded) {
    Expectation r(sp.size(), 0.0, tag);
    for (std::size_t s = 0; s < sp.size(); ++s) r[s] = eval_bool(guard, s, sp) ? 1.0 : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Dense square matrices over the state space. Products use the 0 * inf = 0
// convention; entries produced by the transformers are finite substochastic
// weights, infinities only ever live in vectors and offsets.

class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
    static Matrix zero(std::size_t n) { return Matrix(n); }

    std::size_t size() const { return n_; }
    double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    Expectation apply(const Expectation& f) const {
        Expectation r(n_, 0.0, f.tag());
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            const double* row = &a_[i * n_];
            for (std::size_t j = 0; j < n_; ++j) {
                if (row[j] != 0.0) acc += row[j] * f[j];
            }
            r[i] = acc;
        }
        return r;
    }

    Matrix operator*(const Matrix& o) const {
        Matrix r(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = 0; k < n_; ++k) {
                double v = a_[i * n_ + k];
                if (v == 0.0) continue;
                const double* orow = &o.a_[k * n_];
                double* rrow = &r.a_[i * n_];
                for (std::size_t j = 0; j < n_; ++j) rrow[j] += v * orow[j];
            }
        }
        return r;
    }

    Matrix operator+(const Matrix& o) const {
        Matrix r = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
        return r;
    }

    Matrix scaled(double c) const {
        Matrix r = *this;
        for (auto& v : r.a_) v *= c;
        return r;
    }

    // diag(g) * M for an indicator/weight vector g
    Matrix row_scaled(const Expectation& g) const {
        Matrix r = *this;
        for (std::size_t i = 0; i < n_; ++i) {
            double c = g[i];
            for (std::size_t j = 0; j < n_; ++j) r.a_[i * n_ + j] = ext::mul(c, r.a_[i * n_ + j]);
        }
        return r;
    }

    double max_row_sum() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j];
            m = std::max(m, s);
        }
        return m;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

// Gaussian elimination with partial pivoting; used by the operational module
// to cross-check value iteration on small systems.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-14)
            throw AnalysisError("singular linear system in expected-reward solve");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

} // namespace prexpect
