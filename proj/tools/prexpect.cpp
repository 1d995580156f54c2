// Command-line front end: weakest pre-expectations, expected runtimes,
// proof-rule checking, the operational pushdown chain, and Monte-Carlo
// simulation over one shared program loader.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prexpect/json_io.hpp"
#include "prexpect/prexpect.hpp"

namespace {

using namespace prexpect;

constexpr int kExitOk = 0;
constexpr int kExitViolated = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;

struct ProgramArgs {
    std::string corpus_name;
    std::string file;
    std::vector<std::string> bindings;
};

struct LoadedProgram {
    Program program;
    StateSpace space;
    std::map<std::string, long long> var_inits; // initial values for variables
};

void add_program_options(CLI::App* cmd, ProgramArgs& args) {
    auto* corpus_opt = cmd->add_option("--corpus", args.corpus_name, "built-in program name");
    auto* file_opt = cmd->add_option("--file", args.file, "path to a source file");
    corpus_opt->excludes(file_opt);
    cmd->add_option("--bind", args.bindings,
                    "parameter or initial-value binding, e.g. x=3 or a=[1,4,7]");
}

std::vector<long long> parse_array_literal(const std::string& text) {
    std::vector<long long> out;
    std::string inner = text.substr(1, text.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stoll(item));
    }
    return out;
}

LoadedProgram load_program(const ProgramArgs& args) {
    LoadedProgram out;
    if (!args.corpus_name.empty()) {
        out.program = load_corpus(args.corpus_name);
    } else if (!args.file.empty()) {
        std::ifstream in(args.file);
        if (!in) throw AnalysisError("cannot open '" + args.file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        out.program = parse_program(SourceUnit{ss.str(), args.file});
    } else {
        throw AnalysisError("either --corpus or --file is required");
    }

    ParamBinding params;
    for (const std::string& b : args.bindings) {
        auto eq = b.find('=');
        if (eq == std::string::npos)
            throw AnalysisError("binding '" + b + "' is not of the form name=value");
        std::string name = b.substr(0, eq);
        std::string value = b.substr(eq + 1);
        bool is_param = false;
        for (const auto& p : out.program.params) {
            if (p.name != name) continue;
            is_param = true;
            if (p.kind == ParamDecl::Kind::IntArray) {
                if (value.empty() || value.front() != '[' || value.back() != ']')
                    throw AnalysisError("array binding '" + name + "' needs the form [v1,v2,...]");
                params[name] = parse_array_literal(value);
            } else {
                params[name] = static_cast<long long>(std::stoll(value));
            }
        }
        if (!is_param) {
            bool is_var = false;
            for (const auto& v : out.program.vars) is_var = is_var || v.name == name;
            if (!is_var) throw AnalysisError("binding names unknown identifier '" + name + "'");
            out.var_inits[name] = std::stoll(value);
        }
    }
    out.space = StateSpace(out.program, std::move(params));
    return out;
}

// States whose variables match every initial-value binding.
std::vector<std::size_t> selected_states(const LoadedProgram& lp) {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < lp.space.size(); ++s) {
        bool ok = true;
        for (const auto& [name, value] : lp.var_inits) {
            int vi = lp.space.var_index(name);
            if (vi < 0 || lp.space.value_at(s, static_cast<std::size_t>(vi)) != value) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(s);
    }
    if (out.empty()) throw AnalysisError("no state matches the given initial values");
    return out;
}

std::size_t single_state(const LoadedProgram& lp) {
    std::vector<std::size_t> states = selected_states(lp);
    if (states.size() != 1)
        throw AnalysisError("this command needs a fully determined initial state; bind every "
                            "variable with --bind");
    return states.front();
}

std::string format_value(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void print_state_table(const Expectation& values, const StateSpace& sp,
                       const std::vector<std::size_t>& states) {
    for (std::size_t s : states)
        std::cout << "  " << sp.describe(s) << "  ->  " << format_value(values[s]) << "\n";
}

int run_transformer(const std::string& query, const ProgramArgs& pargs, const std::string& post,
                    std::size_t max_iters, double tol, const std::string& cost_model, bool as_json) {
    LoadedProgram lp = load_program(pargs);
    FixpointOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    if (cost_model == "calls-only") opts.cost = CostModel::calls_only();
    else if (cost_model != "default")
        throw AnalysisError("unknown cost model '" + cost_model + "'");

    BoundTag tag = query == "wlp" ? BoundTag::OneBounded
                 : query == "ert" ? BoundTag::Runtime
                                  : BoundTag::Unbounded;
    ExpectationExpr expr = parse_expectation(post, lp.program, false);
    Expectation f = eval_expectation(expr, lp.space, std::nullopt, nullptr, tag);

    std::pair<Expectation, FixpointReport> result =
        query == "wp"  ? wp(lp.program, lp.space, f, opts)
      : query == "wlp" ? wlp(lp.program, lp.space, f, opts)
                       : ert(lp.program, lp.space, f, opts);

    if (as_json) {
        std::cout << transformer_result_json(query, post, result.first, result.second, lp.space)
                         .dump(2)
                  << "\n";
    } else {
        const FixpointReport& rep = result.second;
        std::cout << query << "(" << post << ")   ["
                  << (rep.converged ? "converged" : "NOT converged") << " after "
                  << rep.iterations << " iterations, "
                  << (rep.direction == FixpointReport::Direction::LowerBound ? "lower" : "upper")
                  << " bound]\n";
        print_state_table(result.first, lp.space, selected_states(lp));
    }
    return result.second.converged ? kExitOk : kExitInconclusive;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"analysis of recursive probabilistic programs"};
    app.require_subcommand(1);

    // wp / wlp / ert ---------------------------------------------------------
    struct {
        ProgramArgs prog;
        std::string post = "1";
        std::size_t max_iters = 100000;
        double tol = 1e-9;
        std::string cost_model = "default";
        bool json = false;
    } tf[3];
    const char* tf_names[3] = {"wp", "wlp", "ert"};
    const char* tf_descs[3] = {"weakest pre-expectation of a post-expectation",
                               "weakest liberal pre-expectation of a post-expectation",
                               "expected runtime for a continuation runtime"};
    for (int i = 0; i < 3; ++i) {
        CLI::App* c = app.add_subcommand(tf_names[i], tf_descs[i]);
        add_program_options(c, tf[i].prog);
        c->add_option("--post", tf[i].post,
                      i == 2 ? "continuation runtime (default 0)" : "post-expectation (default 1)");
        if (i == 2) tf[i].post = "0";
        c->add_option("--max-iters", tf[i].max_iters, "iteration cap (default 100000)");
        c->add_option("--tol", tf[i].tol, "convergence tolerance (default 1e-9)");
        c->add_option("--cost-model", tf[i].cost_model, "default | calls-only");
        c->add_flag("--json", tf[i].json, "machine-readable output");
    }

    // simulate ---------------------------------------------------------------
    struct {
        ProgramArgs prog;
        std::string post = "1";
        std::size_t runs = 10000;
        std::size_t max_steps = 10000;
        std::uint64_t seed = 1;
        bool json = false;
    } sim;
    {
        CLI::App* c = app.add_subcommand("simulate", "seeded Monte-Carlo runs of the chain");
        add_program_options(c, sim.prog);
        c->add_option("--post", sim.post, "reward expectation at termination (default 1)");
        c->add_option("--runs", sim.runs, "number of runs (default 10000)");
        c->add_option("--max-steps", sim.max_steps, "step cap per run (default 10000)");
        c->add_option("--seed", sim.seed, "master seed (default 1)");
        c->add_flag("--json", sim.json, "machine-readable output");
    }

    // prmc --------------------------------------------------------------------
    struct {
        ProgramArgs prog;
        std::string post = "1";
        std::size_t stack_bound = 64;
        std::string dot_file;
        bool dot = false;
        bool json = false;
    } prmc;
    {
        CLI::App* c = app.add_subcommand(
            "prmc", "bounded-stack expected reward and DOT export of the pushdown chain");
        add_program_options(c, prmc.prog);
        c->add_option("--post", prmc.post, "reward expectation at termination (default 1)");
        c->add_option("--stack-bound", prmc.stack_bound, "stack symbols above bottom (default 64)");
        c->add_flag("--dot", prmc.dot, "print the label-level graph instead of solving");
        c->add_option("--dot-file", prmc.dot_file, "write the graph to a file");
        c->add_flag("--json", prmc.json, "machine-readable output");
    }

    // check -------------------------------------------------------------------
    struct {
        ProgramArgs prog;
        std::string claim;
        std::string claim_file;
        double tol = 1e-9;
        std::string cost_model = "default";
        bool json = false;
    } chk;
    {
        CLI::App* c = app.add_subcommand("check", "check a recursion proof-rule claim");
        add_program_options(c, chk.prog);
        c->add_option("--claim", chk.claim, "claim as inline JSON");
        c->add_option("--claim-file", chk.claim_file, "claim JSON file");
        c->add_option("--tol", chk.tol, "comparison tolerance (default 1e-9)");
        c->add_option("--cost-model", chk.cost_model, "default | calls-only");
        c->add_flag("--json", chk.json, "machine-readable output");
    }

    // compare -----------------------------------------------------------------
    struct {
        ProgramArgs prog;
        std::string post = "1";
        std::size_t n = 5;
        double tol = 1e-9;
        bool json = false;
    } cmp;
    {
        CLI::App* c = app.add_subcommand(
            "compare", "bounded-stack expected reward against the level-n environments");
        add_program_options(c, cmp.prog);
        c->add_option("--post", cmp.post, "post-expectation (default 1)");
        c->add_option("--n", cmp.n, "maximum inlining depth / stack bound (default 5)");
        c->add_option("--tol", cmp.tol, "acceptable gap (default 1e-9)");
        c->add_flag("--json", cmp.json, "machine-readable output");
    }

    // list / show --------------------------------------------------------------
    CLI::App* list_cmd = app.add_subcommand("list", "list the built-in programs");
    struct {
        std::string name;
    } show;
    {
        CLI::App* c = app.add_subcommand("show", "print the source of a built-in program");
        c->add_option("name", show.name, "program name")->required();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (int i = 0; i < 3; ++i) {
            if (app.get_subcommand(tf_names[i])->parsed())
                return run_transformer(tf_names[i], tf[i].prog, tf[i].post, tf[i].max_iters,
                                       tf[i].tol, tf[i].cost_model, tf[i].json);
        }

        if (app.get_subcommand("simulate")->parsed()) {
            LoadedProgram lp = load_program(sim.prog);
            LabeledProgram labeled = label_program(lp.program);
            ExpectationExpr expr = parse_expectation(sim.post, lp.program, false);
            Expectation f = eval_expectation(expr, lp.space);
            SimulationResult r = simulate(labeled, lp.space, single_state(lp), f, sim.runs,
                                          sim.max_steps, sim.seed);
            if (sim.json) {
                std::cout << simulation_result_json(r).dump(2) << "\n";
            } else {
                std::cout << "runs " << r.runs << ", seed " << r.seed << "\n"
                          << "mean reward     " << format_value(r.mean_reward) << " +- "
                          << format_value(r.ci95) << " (95%)\n"
                          << "term. fraction  " << format_value(r.term_fraction) << "\n";
            }
            return kExitOk;
        }

        if (app.get_subcommand("prmc")->parsed()) {
            LoadedProgram lp = load_program(prmc.prog);
            LabeledProgram labeled = label_program(lp.program);
            if (prmc.dot || !prmc.dot_file.empty()) {
                std::string dot = export_dot(labeled);
                if (!prmc.dot_file.empty()) {
                    std::ofstream out(prmc.dot_file);
                    if (!out) throw AnalysisError("cannot write '" + prmc.dot_file + "'");
                    out << dot;
                } else {
                    std::cout << dot;
                }
                return kExitOk;
            }
            ExpectationExpr expr = parse_expectation(prmc.post, lp.program, false);
            Expectation f = eval_expectation(expr, lp.space);
            RewardOptions opts;
            if (const char* cap = std::getenv("PREXPECT_MAX_CONFIGS"))
                opts.max_configs = static_cast<std::size_t>(std::stoull(cap));
            RewardResult r = expected_reward_bounded(labeled, lp.space, single_state(lp), f,
                                                     prmc.stack_bound, opts);
            if (prmc.json) {
                std::cout << reward_result_json(r).dump(2) << "\n";
            } else {
                std::cout << "expected reward " << format_value(r.value) << " over " << r.configs
                          << " configurations"
                          << (r.truncated ? " (stack bound reached)" : "") << "\n";
            }
            return kExitOk;
        }

        if (app.get_subcommand("check")->parsed()) {
            LoadedProgram lp = load_program(chk.prog);
            std::string text = chk.claim;
            if (text.empty() && !chk.claim_file.empty()) {
                std::ifstream in(chk.claim_file);
                if (!in) throw AnalysisError("cannot open '" + chk.claim_file + "'");
                std::stringstream ss;
                ss << in.rdbuf();
                text = ss.str();
            }
            if (text.empty()) throw AnalysisError("check needs --claim or --claim-file");
            if (chk.cost_model != "default" && chk.cost_model != "calls-only")
                throw AnalysisError("unknown cost model '" + chk.cost_model + "'");
            CostModel cost =
                chk.cost_model == "calls-only" ? CostModel::calls_only() : CostModel::standard();
            ParsedClaim claim = parse_claim_json(json::parse(text), lp.program, lp.space);
            Verdict v = run_claim(claim, lp.program, lp.space, chk.tol, cost);
            if (chk.json) {
                std::cout << verdict_to_json(v, lp.space).dump(2) << "\n";
            } else {
                switch (v.kind) {
                    case Verdict::Kind::Accepted: std::cout << "ACCEPTED\n"; break;
                    case Verdict::Kind::CheckedUpTo:
                        std::cout << "CHECKED up to depth " << v.step << "\n";
                        break;
                    case Verdict::Kind::Rejected:
                        std::cout << "REJECTED at state " << lp.space.describe(v.witness)
                                  << ": replayed " << format_value(v.lhs) << " vs bound "
                                  << format_value(v.rhs) << "\n";
                        break;
                    case Verdict::Kind::Inconclusive:
                        std::cout << "INCONCLUSIVE: " << v.detail << "\n";
                        break;
                }
            }
            return v.accepted() ? kExitOk
                 : v.kind == Verdict::Kind::Rejected ? kExitViolated
                                                     : kExitInconclusive;
        }

        if (app.get_subcommand("compare")->parsed()) {
            LoadedProgram lp = load_program(cmp.prog);
            LabeledProgram labeled = label_program(lp.program);
            ExpectationExpr expr = parse_expectation(cmp.post, lp.program, false);
            Expectation f = eval_expectation(expr, lp.space);
            RewardOptions opts;
            if (const char* cap = std::getenv("PREXPECT_MAX_CONFIGS"))
                opts.max_configs = static_cast<std::size_t>(std::stoull(cap));
            double worst = 0.0;
            json per_level = json::array();
            for (std::size_t level = 0; level <= cmp.n; ++level) {
                double gap = correspondence_max_gap(labeled, lp.space, f, level, opts);
                worst = std::max(worst, gap);
                per_level.push_back({{"n", level}, {"gap", gap}});
                if (!cmp.json)
                    std::cout << "n = " << level << "   max gap " << format_value(gap) << "\n";
            }
            if (cmp.json)
                std::cout << json({{"levels", per_level}, {"max_gap", worst}}).dump(2) << "\n";
            else
                std::cout << (worst <= cmp.tol ? "within" : "EXCEEDS") << " tolerance "
                          << cmp.tol << "\n";
            return worst <= cmp.tol ? kExitOk : kExitViolated;
        }

        if (list_cmd->parsed()) {
            for (const auto& e : corpus())
                std::cout << "  " << e.name << std::string(14 - std::min<std::size_t>(13, e.name.size()), ' ')
                          << e.description << "\n";
            return kExitOk;
        }

        if (app.get_subcommand("show")->parsed()) {
            const CorpusEntry* e = find_corpus(show.name);
            if (!e) throw AnalysisError("no corpus program named '" + show.name + "'");
            std::cout << e->source;
            return kExitOk;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
