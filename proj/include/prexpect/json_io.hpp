#pragma once

#include <string>

#include <json.hpp>

#include "prexpect/operational.hpp"
#include "prexpect/parser.hpp"
#include "prexpect/rules.hpp"
#include "prexpect/transformers.hpp"

namespace prexpect {

using nlohmann::json;

inline json value_to_json(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

inline json expectation_to_json(const Expectation& f, const StateSpace& sp) {
    json space = json::array();
    for (const auto& v : sp.vars())
        space.push_back({{"name", v.name}, {"lo", v.lo}, {"hi", v.hi}});
    json values = json::array();
    for (std::size_t s = 0; s < f.size(); ++s) values.push_back(value_to_json(f[s]));
    return {{"space", space}, {"values", values}};
}

inline json state_values_json(const Expectation& f, const StateSpace& sp) {
    json out = json::object();
    for (std::size_t s = 0; s < f.size(); ++s) out[sp.describe(s)] = value_to_json(f[s]);
    return out;
}

inline json transformer_result_json(const std::string& query, const std::string& post,
                                    const Expectation& values, const FixpointReport& report,
                                    const StateSpace& sp) {
    return {{"query", query},
            {"post", post},
            {"iterations", report.iterations},
            {"converged", report.converged},
            {"direction",
             report.direction == FixpointReport::Direction::LowerBound ? "lower" : "upper"},
            {"values", state_values_json(values, sp)}};
}

inline json reward_result_json(const RewardResult& r) {
    return {{"value", value_to_json(r.value)}, {"truncated", r.truncated}, {"configs", r.configs}};
}

inline json simulation_result_json(const SimulationResult& r) {
    return {{"mean_reward", r.mean_reward},
            {"term_fraction", r.term_fraction},
            {"ci95", r.ci95},
            {"seed", r.seed},
            {"runs", r.runs}};
}

inline json verdict_to_json(const Verdict& v, const StateSpace& sp) {
    json out;
    switch (v.kind) {
        case Verdict::Kind::Accepted: out["verdict"] = "accepted"; break;
        case Verdict::Kind::Rejected: out["verdict"] = "rejected"; break;
        case Verdict::Kind::Inconclusive: out["verdict"] = "inconclusive"; break;
        case Verdict::Kind::CheckedUpTo: out["verdict"] = "checked_up_to"; break;
    }
    if (!v.proc.empty()) out["proc"] = v.proc;
    if (v.kind == Verdict::Kind::Rejected) {
        out["witness"] = {{"state", sp.describe(v.witness)},
                          {"lhs", value_to_json(v.lhs)},
                          {"rhs", value_to_json(v.rhs)}};
        out["step"] = v.step;
    }
    if (v.kind == Verdict::Kind::CheckedUpTo) out["depth"] = v.step;
    if (!v.detail.empty()) out["detail"] = v.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Rule claims. Plain rules take a list of {proc, post, bound}; omega rules a
// single proc with lower/upper bound families given either as an expression
// in the index n or as {"base": ..., "step": ...} over `prev`.

struct ParsedClaim {
    Mode mode = Mode::Wp;
    bool omega = false;
    std::vector<RecClaim> claims;
    std::string proc;
    Expectation post;
    BoundFamily lower;
    BoundFamily upper;
    std::size_t depth = 10;
};

namespace detail {

inline BoundFamily family_from_json(const json& j, const Program& prog) {
    if (j.is_null()) return BoundFamily::one_sided();
    BoundFamily f;
    if (j.is_string()) {
        f.expr = parse_expectation(j.get<std::string>(), prog, DslOptions{true, false});
        return f;
    }
    if (!j.is_object()) throw AnalysisError("bound family must be a string or an object");
    if (j.contains("base"))
        f.base = parse_expectation(j.at("base").get<std::string>(), prog, DslOptions{true, false});
    if (j.contains("step"))
        f.step = parse_expectation(j.at("step").get<std::string>(), prog, DslOptions{false, true});
    if (j.contains("expr"))
        f.expr = parse_expectation(j.at("expr").get<std::string>(), prog, DslOptions{true, false});
    if (!f.step && !f.expr && !f.base)
        throw AnalysisError("bound family needs at least one of base/step/expr");
    return f;
}

} // namespace detail

inline ParsedClaim parse_claim_json(const json& j, const Program& prog, const StateSpace& sp) {
    ParsedClaim out;
    std::string rule = j.at("rule").get<std::string>();
    if (rule == "wp-rec") out.mode = Mode::Wp;
    else if (rule == "wlp-rec") out.mode = Mode::Wlp;
    else if (rule == "ert-rec") out.mode = Mode::Ert;
    else if (rule == "wp-rec-omega") { out.mode = Mode::Wp; out.omega = true; }
    else if (rule == "wlp-rec-omega") { out.mode = Mode::Wlp; out.omega = true; }
    else if (rule == "ert-rec-omega") { out.mode = Mode::Ert; out.omega = true; }
    else throw AnalysisError("unknown rule '" + rule + "'");

    BoundTag tag = out.mode == Mode::Wlp ? BoundTag::OneBounded
                  : out.mode == Mode::Ert ? BoundTag::Runtime
                                          : BoundTag::Unbounded;
    if (out.omega) {
        out.proc = j.at("proc").get<std::string>();
        ExpectationExpr post = parse_expectation(j.at("post").get<std::string>(), prog);
        out.post = eval_expectation(post, sp, std::nullopt, nullptr, tag);
        out.lower = detail::family_from_json(j.contains("lower") ? j.at("lower") : json(nullptr),
                                             prog);
        out.upper = detail::family_from_json(j.contains("upper") ? j.at("upper") : json(nullptr),
                                             prog);
        out.depth = j.value("depth", std::size_t{10});
        return out;
    }

    json claims = j.contains("claims") ? j.at("claims") : json::array({j});
    for (const auto& cj : claims) {
        RecClaim rc;
        rc.proc = cj.at("proc").get<std::string>();
        ExpectationExpr post = parse_expectation(cj.at("post").get<std::string>(), prog);
        ExpectationExpr bound = parse_expectation(cj.at("bound").get<std::string>(), prog);
        rc.post = eval_expectation(post, sp, std::nullopt, nullptr, tag);
        rc.bound = eval_expectation(bound, sp);
        out.claims.push_back(std::move(rc));
    }
    return out;
}

inline Verdict run_claim(const ParsedClaim& c, const Program& prog, const StateSpace& sp,
                         double tol = 1e-9, const CostModel& cost = {}) {
    if (c.omega)
        return check_rec_omega(prog, sp, c.mode, c.proc, c.post, c.lower, c.upper, c.depth, tol,
                               cost);
    return check_rec(prog, sp, c.mode, c.claims, tol, cost);
}

} // namespace prexpect
