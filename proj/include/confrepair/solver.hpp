// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "confrepair/cnf.hpp"
#include "confrepair/logic.hpp"

namespace confrepair {

struct SolverStats {
    long solver_calls = 0; // raw searches, including core-shrink probes
    long conflicts = 0;
    long propagations = 0;
};

/// Result of one satisfiability query. On Sat the model is total over the
/// queried variables (clause variables, assumption variables, preference
/// variables). On Unsat the core is a subset of the supplied assumptions,
/// shrunk by one deletion pass but not necessarily minimal.
struct SolveOutcome {
    bool sat = false;
    std::map<VarId, bool> model;
    std::vector<Literal> core;
};

namespace detail {

/// Single-use CDCL search over one CnfFormula. Assumptions are placed as the
/// first decisions; a falsified assumption triggers final-conflict analysis
/// to recover the implicated subset. Decision order is variable index order
/// and decision phase follows the preference map, so identical inputs give
/// identical runs.
class CdclSearch {
public:
    CdclSearch(const CnfFormula& cnf,
               const std::vector<Literal>& assumptions,
               const std::unordered_map<uint32_t, bool>& preferred,
               SolverStats* stats)
        : stats_(stats) {
        nvars_ = cnf.var_count;
        for (size_t i = 0; i < cnf.input_vars.size(); ++i)
            local_.emplace(cnf.input_vars[i].index, static_cast<int>(i) + 1);
        external_.assign(nvars_, VarId{}); // aux slots stay invalid
        for (size_t i = 0; i < cnf.input_vars.size(); ++i) external_[i] = cnf.input_vars[i];

        // Assumption or preference variables absent from the clauses get
        // fresh local slots so they are still decided and reported.
        for (const Literal& a : assumptions) assumptions_.push_back(local_lit(a));
        for (const auto& [v, phase] : preferred) phase_[local_var(VarId{v})] = phase;

        values_.assign(nvars_ + 1, 0);
        level_.assign(nvars_ + 1, 0);
        reason_.assign(nvars_ + 1, -1);
        watches_.assign(2 * (nvars_ + 1), {});

        for (const auto& clause : cnf.clauses)
            if (!add_clause(clause)) { root_conflict_ = true; break; }
    }

    SolveOutcome run() {
        if (stats_) ++stats_->solver_calls;
        SolveOutcome out;
        if (root_conflict_) return out; // unsat, empty core: clauses alone

        for (;;) {
            int confl = propagate();
            if (confl >= 0) {
                if (stats_) ++stats_->conflicts;
                if (decision_level() == 0) return out; // clauses alone unsat
                std::vector<int> learnt;
                int bt = analyze(confl, learnt);
                cancel_until(bt);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], -1);
                } else {
                    int ref = store_clause(learnt);
                    enqueue(learnt[0], ref);
                }
            } else if (decision_level() < static_cast<int>(assumptions_.size())) {
                int a = assumptions_[decision_level()];
                if (value(a) > 0) {
                    new_level(); // already satisfied, dummy level
                } else if (value(a) < 0) {
                    out.core = analyze_final(a);
                    return out;
                } else {
                    new_level();
                    enqueue(a, -1);
                }
            } else {
                int v = next_unassigned();
                if (v == 0) {
                    out.sat = true;
                    for (int i = 1; i <= static_cast<int>(external_.size()); ++i)
                        if (external_[i - 1].valid()) out.model[external_[i - 1]] = values_[i] > 0;
                    return out;
                }
                new_level();
                auto it = phase_.find(v);
                bool ph = it != phase_.end() && it->second;
                enqueue(ph ? v : -v, -1);
            }
        }
    }

private:
    // Literal encoding: nonzero int, sign = polarity, abs = local var.
    static int windex(int lit) { return 2 * std::abs(lit) + (lit > 0 ? 0 : 1); }

    // Only called during construction, before the value arrays are sized.
    int local_var(VarId v) {
        auto it = local_.find(v.index);
        if (it != local_.end()) return it->second;
        int loc = ++nvars_;
        local_.emplace(v.index, loc);
        external_.resize(nvars_, VarId{});
        external_[loc - 1] = v;
        return loc;
    }

    int local_lit(const Literal& l) {
        int v = local_var(l.var);
        return l.positive ? v : -v;
    }

    Literal external_lit(int lit) const {
        return Literal{external_[std::abs(lit) - 1], lit > 0};
    }

    int8_t value(int lit) const {
        int8_t v = values_[std::abs(lit)];
        return lit > 0 ? v : static_cast<int8_t>(-v);
    }

    int decision_level() const { return static_cast<int>(trail_lim_.size()); }
    void new_level() { trail_lim_.push_back(static_cast<int>(trail_.size())); }

    void enqueue(int lit, int reason) {
        int v = std::abs(lit);
        values_[v] = lit > 0 ? 1 : -1;
        level_[v] = decision_level();
        reason_[v] = reason;
        trail_.push_back(lit);
        if (stats_) ++stats_->propagations;
    }

    // False while adding: immediate top-level contradiction.
    bool add_clause(const std::vector<int>& in) {
        std::vector<int> c = in;
        std::sort(c.begin(), c.end(), [](int a, int b) {
            return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
        });
        c.erase(std::unique(c.begin(), c.end()), c.end());
        for (size_t i = 1; i < c.size(); ++i)
            if (c[i] == -c[i - 1]) return true; // tautology
        if (c.empty()) return false;
        if (c.size() == 1) {
            if (value(c[0]) < 0) return false;
            if (value(c[0]) == 0) enqueue(c[0], -1);
            return true;
        }
        store_clause(c);
        return true;
    }

    int store_clause(const std::vector<int>& c) {
        int ref = static_cast<int>(clauses_.size());
        clauses_.push_back(c);
        watches_[windex(-c[0])].push_back(ref);
        watches_[windex(-c[1])].push_back(ref);
        return ref;
    }

    // Returns conflicting clause ref or -1.
    int propagate() {
        while (qhead_ < trail_.size()) {
            int p = trail_[qhead_++]; // p is true; clauses watching -p need a look
            std::vector<int>& ws = watches_[windex(p)];
            size_t keep = 0;
            for (size_t i = 0; i < ws.size(); ++i) {
                int ref = ws[i];
                std::vector<int>& c = clauses_[ref];
                if (c[0] == -p) std::swap(c[0], c[1]);
                // now c[1] == -p (false)
                if (value(c[0]) > 0) {
                    ws[keep++] = ref;
                    continue;
                }
                bool moved = false;
                for (size_t k = 2; k < c.size(); ++k) {
                    if (value(c[k]) >= 0) {
                        std::swap(c[1], c[k]);
                        watches_[windex(-c[1])].push_back(ref);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                if (value(c[0]) < 0) {
                    // conflict: restore remaining watches and report
                    for (; i < ws.size(); ++i) ws[keep++] = ws[i];
                    ws.resize(keep);
                    return ref;
                }
                enqueue(c[0], ref);
                ws[keep++] = ref;
            }
            ws.resize(keep);
        }
        return -1;
    }

    // First-UIP conflict analysis; learnt[0] is the asserting literal.
    int analyze(int confl, std::vector<int>& learnt) {
        learnt.assign(1, 0);
        std::vector<char> seen(nvars_ + 1, 0);
        int counter = 0;
        int p = 0;
        size_t idx = trail_.size();

        for (;;) {
            const std::vector<int>& c = clauses_[confl];
            for (size_t j = (p == 0 ? 0 : 1); j < c.size(); ++j) {
                int q = c[j];
                int v = std::abs(q);
                if (!seen[v] && level_[v] > 0) {
                    seen[v] = 1;
                    if (level_[v] >= decision_level()) ++counter;
                    else learnt.push_back(q);
                }
            }
            while (!seen[std::abs(trail_[idx - 1])]) --idx;
            p = trail_[idx - 1];
            --idx;
            seen[std::abs(p)] = 0;
            if (--counter == 0) break;
            confl = reason_[std::abs(p)];
        }
        learnt[0] = -p;

        int bt = 0;
        size_t max_i = 1;
        for (size_t i = 1; i < learnt.size(); ++i) {
            int lv = level_[std::abs(learnt[i])];
            if (lv > bt) { bt = lv; max_i = i; }
        }
        if (learnt.size() > 1) std::swap(learnt[1], learnt[max_i]);
        return bt;
    }

    // Which assumptions force `a` to be false right now. Walks the trail
    // back through reasons; decisions at assumption levels are exactly the
    // earlier assumptions.
    std::vector<Literal> analyze_final(int a) {
        std::vector<Literal> core{external_lit(a)};
        if (decision_level() == 0) return core;
        std::vector<char> seen(nvars_ + 1, 0);
        seen[std::abs(a)] = 1;
        for (size_t i = trail_.size(); i-- > static_cast<size_t>(trail_lim_[0]);) {
            int v = std::abs(trail_[i]);
            if (!seen[v]) continue;
            if (reason_[v] < 0) {
                core.push_back(external_lit(trail_[i]));
            } else {
                for (int q : clauses_[reason_[v]])
                    if (std::abs(q) != v && level_[std::abs(q)] > 0) seen[std::abs(q)] = 1;
            }
            seen[v] = 0;
        }
        return core;
    }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        for (size_t i = trail_.size(); i-- > static_cast<size_t>(trail_lim_[lvl]);) {
            int v = std::abs(trail_[i]);
            values_[v] = 0;
            reason_[v] = -1;
        }
        trail_.resize(trail_lim_[lvl]);
        trail_lim_.resize(lvl);
        qhead_ = trail_.size();
    }

    int next_unassigned() const {
        for (int v = 1; v <= nvars_; ++v)
            if (values_[v] == 0) return v;
        return 0;
    }

    SolverStats* stats_;
    int nvars_ = 0;
    bool root_conflict_ = false;
    std::unordered_map<uint32_t, int> local_;
    std::vector<VarId> external_; // local var -> VarId (invalid for auxiliaries)
    std::vector<int> assumptions_;
    std::unordered_map<int, bool> phase_;

    std::vector<std::vector<int>> clauses_;
    std::vector<std::vector<int>> watches_;
    std::vector<int8_t> values_;
    std::vector<int> level_;
    std::vector<int> reason_;
    std::vector<int> trail_;
    std::vector<int> trail_lim_;
    size_t qhead_ = 0;
};

inline SolveOutcome raw_solve(const CnfFormula& cnf,
                              const std::vector<Literal>& assumptions,
                              const std::unordered_map<uint32_t, bool>& preferred,
                              SolverStats* stats) {
    CdclSearch s(cnf, assumptions, preferred, stats);
    return s.run();
}

} // namespace detail

/// Satisfiability under assumptions. Unsat cores get one deletion pass:
/// each member is dropped once and the drop kept if the rest still
/// contradicts, which bounds the extra cost at |core| searches.
inline SolveOutcome solve_with_preference(const CnfFormula& cnf,
                                          const std::vector<Literal>& assumptions,
                                          const std::map<VarId, bool>& preferred,
                                          SolverStats* stats = nullptr) {
    std::unordered_map<uint32_t, bool> phases;
    for (const auto& [v, b] : preferred) phases.emplace(v.index, b);
    SolveOutcome out = detail::raw_solve(cnf, assumptions, phases, stats);
    if (out.sat) {
        for (const auto& [v, b] : preferred)
            if (!out.model.count(v)) out.model.emplace(v, b);
        return out;
    }
    if (out.core.size() > 1) {
        std::vector<Literal> core = out.core;
        for (const Literal& drop : out.core) {
            if (core.size() <= 1) break;
            std::vector<Literal> trial;
            for (const Literal& l : core)
                if (!(l == drop)) trial.push_back(l);
            if (trial.size() == core.size()) continue; // already gone
            SolveOutcome probe = detail::raw_solve(cnf, trial, phases, stats);
            if (!probe.sat) core = probe.core;
        }
        out.core = core;
    }
    return out;
}

inline SolveOutcome solve(const CnfFormula& cnf,
                          const std::vector<Literal>& assumptions,
                          SolverStats* stats = nullptr) {
    return solve_with_preference(cnf, assumptions, {}, stats);
}

} // namespace confrepair
