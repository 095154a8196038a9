// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "confrepair/config_file.hpp"
#include "confrepair/constraints.hpp"
#include "confrepair/patch.hpp"
#include "confrepair/solver.hpp"

namespace confrepair {

class SolverBudgetExhausted : public std::runtime_error {
public:
    explicit SolverBudgetExhausted(long limit)
        : std::runtime_error("solver call budget exhausted (limit " + std::to_string(limit) + ")") {}
};

struct RepairOptions {
    long max_solver_calls = 0; // 0: unlimited
};

struct RepairedConfig {
    ConfigFile config;           // deparsed, passthrough entries preserved
    Assignment values;           // complete assignment behind the config
    std::vector<PatchPair> covered;
    int options_changed = 0;
    double change_ratio = 0.0;
};

struct RepairOutcome {
    std::vector<RepairedConfig> configs;
    std::vector<std::pair<PatchPair, std::string>> uncoverable;
    long solver_calls = 0;
    long cores_removed = 0;       // unsat iterations across all repairs
    long assumptions_removed = 0; // literals dropped via cores
    long line_pc_queries = 0;
};

namespace repair_detail {

/// Unit assumptions for a configuration: y pins the option on and off-module
/// (two literals for tristates), m pins the module variable, n pins the
/// option off. Finer grain lets a core drop half of a y.
inline std::vector<Literal> config_assumptions(const KconfigSpec& spec, const Assignment& values,
                                               VarTable& table) {
    std::vector<Literal> out;
    for (const auto& d : spec.decls) {
        auto it = values.values.find(d.name);
        if (it == values.values.end()) continue;
        VarId x = table.intern(d.name);
        if (it->second == 'n') {
            out.push_back(Literal{x, false});
        } else if (it->second == 'm') {
            out.push_back(Literal{table.intern(module_var_name(d.name)), true});
        } else {
            out.push_back(Literal{x, true});
            if (d.tristate) out.push_back(Literal{table.intern(module_var_name(d.name)), false});
        }
    }
    return out;
}

/// Decision-phase preferences: the original setting when present, else the
/// option's first declared default, else n.
inline std::map<VarId, bool> preference_map(const KconfigSpec& spec, const Assignment& values,
                                            VarTable& table) {
    std::map<VarId, bool> pref;
    for (const auto& d : spec.decls) {
        char v = 'n';
        auto it = values.values.find(d.name);
        if (it != values.values.end()) v = it->second;
        else if (!d.defaults.empty()) v = d.defaults.front().value;
        pref[table.intern(d.name)] = v != 'n';
        if (d.tristate) pref[table.intern(module_var_name(d.name))] = v == 'm';
    }
    return pref;
}

inline Assignment model_to_assignment(const KconfigSpec& spec, const std::map<VarId, bool>& model,
                                      VarTable& table) {
    Assignment out;
    for (const auto& d : spec.decls) {
        bool x = false, xm = false;
        if (auto it = model.find(table.intern(d.name)); it != model.end()) x = it->second;
        if (d.tristate)
            if (auto it = model.find(table.intern(module_var_name(d.name))); it != model.end())
                xm = it->second;
        out.values[d.name] = x ? (xm ? 'm' : 'y') : 'n';
    }
    out.complete = true;
    return out;
}

/// Existential satisfiability of `f` once the declared options are fixed:
/// the leftover variables are unknown-token free variables.
inline bool holds_under(const Formula& f, const KconfigSpec& spec, const Assignment& values,
                        VarTable& table, SolverStats* stats) {
    std::unordered_map<VarId, bool, VarIdHash> fixed;
    for (const auto& [v, b] : assignment_to_vars(spec, values, table)) fixed.emplace(v, b);
    Formula residual = f.partial_eval(fixed);
    if (residual.is_true()) return true;
    if (residual.is_false()) return false;
    return solve(to_cnf(residual), {}, stats).sat;
}

} // namespace repair_detail

/// One round of configuration-file repair against a single satisfiable
/// constraint: drop the settings an unsatisfiable core implicates until the
/// rest fits, then repopulate by solving with the original settings as
/// preferences. A final pass reverts any change that turns out individually
/// unnecessary, so the changed set is locally irredundant.
inline RepairedConfig repair_one(const ConfigFile& input, const Formula& constraint,
                                 ConstraintBundle& bundle, RepairOutcome* tally = nullptr) {
    using namespace repair_detail;
    const KconfigSpec& spec = bundle.spec();
    VarTable& table = bundle.table();
    SolverStats* stats = &bundle.stats().solver;

    Diagnostics diag;
    Assignment original = config_to_assignment(spec, input, &diag);
    Formula goal = Formula::conjunction({bundle.spec_formula(), constraint});
    CnfFormula cnf = to_cnf(goal);

    std::vector<Literal> assumptions = config_assumptions(spec, original, table);
    std::map<VarId, bool> pref = preference_map(spec, original, table);

    std::map<VarId, bool> model;
    for (;;) {
        SolveOutcome out = solve_with_preference(cnf, assumptions, pref, stats);
        if (out.sat) {
            model = out.model;
            break;
        }
        if (out.core.empty())
            throw std::logic_error("repair: empty unsatisfiable core for a satisfiable constraint");
        if (tally) {
            ++tally->cores_removed;
            tally->assumptions_removed += static_cast<long>(out.core.size());
        }
        std::vector<Literal> rest;
        for (const Literal& a : assumptions) {
            bool in_core = false;
            for (const Literal& c : out.core)
                if (c == a) in_core = true;
            if (!in_core) rest.push_back(a);
        }
        if (rest.size() == assumptions.size())
            throw std::logic_error("repair: core did not shrink the assumption set");
        assumptions = std::move(rest);
    }

    Assignment repaired = model_to_assignment(spec, model, table);

    // Revert pass: restore original values one at a time where the
    // constraint still holds, in declaration order.
    for (const auto& d : spec.decls) {
        char orig = original.values.count(d.name) ? original.values.at(d.name) : 'n';
        if (repaired.values.at(d.name) == orig) continue;
        Assignment candidate = repaired;
        candidate.values[d.name] = orig;
        if (holds_under(goal, spec, candidate, table, stats)) repaired = std::move(candidate);
    }

    RepairedConfig out;
    out.values = repaired;
    out.config = parse_config(deparse_config(spec, repaired, input), input.provenance + " (repaired)");
    for (const auto& d : spec.decls) {
        char orig = original.values.count(d.name) ? original.values.at(d.name) : 'n';
        if (repaired.values.at(d.name) != orig) ++out.options_changed;
    }
    out.change_ratio = spec.decls.empty()
                           ? 0.0
                           : static_cast<double>(out.options_changed) /
                                 static_cast<double>(spec.decls.size());
    return out;
}

/// The full repair loop: greedily partition the patch lines into groups
/// whose constraints stay satisfiable together, repair the configuration
/// once per group, and classify lines nothing can cover as uncoverable.
inline RepairOutcome repair_patch(const PatchLineSet& pairs, const ConfigFile& input,
                                  ConstraintBundle& bundle, RepairOptions options = {}) {
    RepairOutcome outcome;
    const OptimizationFlags& opts = bundle.optimizations();
    SolverStats* stats = &bundle.stats().solver;

    auto check_budget = [&]() {
        if (options.max_solver_calls > 0 && stats->solver_calls > options.max_solver_calls)
            throw SolverBudgetExhausted(options.max_solver_calls);
    };

    std::vector<PatchPair> remaining = pairs.pairs;
    while (!remaining.empty()) {
        std::vector<Formula> current{bundle.spec_formula()};
        std::vector<PatchPair> covered;
        std::vector<PatchPair> dead;
        // chains proven (un)satisfiable against the group's growing
        // constraint; ancestors of accepted chains stay satisfiable,
        // descendants of rejected chains stay unsatisfiable
        std::map<std::string, std::vector<std::vector<int>>> accepted_chains;
        std::map<std::string, std::vector<std::vector<int>>> rejected_chains;

        auto is_prefix = [](const std::vector<int>& p, const std::vector<int>& of) {
            if (p.size() > of.size()) return false;
            return std::equal(p.begin(), p.end(), of.begin());
        };

        for (const PatchPair& pair : remaining) {
            Formula constraint = bundle.get_constraint(pair);
            std::optional<bool> decided;
            std::vector<int> chain;
            if (opts.chain_subsumption) {
                chain = bundle.chain_of(pair);
                for (const auto& c : accepted_chains[pair.file])
                    if (is_prefix(chain, c)) decided = true;
                if (!decided)
                    for (const auto& c : rejected_chains[pair.file])
                        if (is_prefix(c, chain)) decided = false;
            }
            bool sat;
            if (decided) {
                sat = *decided;
            } else {
                std::vector<Formula> conj = current;
                conj.push_back(constraint);
                sat = solve(to_cnf(Formula::conjunction(conj)), {}, stats).sat;
                check_budget();
            }
            if (sat) {
                current.push_back(constraint);
                covered.push_back(pair);
                if (opts.chain_subsumption) {
                    if (chain.empty()) chain = bundle.chain_of(pair);
                    accepted_chains[pair.file].push_back(chain);
                }
            } else {
                if (opts.chain_subsumption) {
                    if (chain.empty()) chain = bundle.chain_of(pair);
                    rejected_chains[pair.file].push_back(chain);
                }
                // rejected against the bare spec: no configuration covers it
                if (covered.empty()) dead.push_back(pair);
            }
        }

        if (!covered.empty()) {
            std::vector<Formula> group_parts(current.begin() + 1, current.end());
            RepairedConfig rc =
                repair_one(input, Formula::conjunction(group_parts), bundle, &outcome);
            check_budget();
            rc.covered = covered;
            outcome.configs.push_back(std::move(rc));
        }

        std::set<PatchPair> drop(covered.begin(), covered.end());
        for (const PatchPair& p : dead) {
            drop.insert(p);
            outcome.uncoverable.emplace_back(p, "unsatisfiable");
        }
        if (drop.empty()) break; // nothing coverable and nothing newly dead
        std::vector<PatchPair> next;
        for (const PatchPair& p : remaining)
            if (!drop.count(p)) next.push_back(p);
        remaining = std::move(next);
    }

    outcome.solver_calls = stats->solver_calls;
    outcome.line_pc_queries = bundle.stats().line_pc_queries;
    return outcome;
}

} // namespace confrepair
