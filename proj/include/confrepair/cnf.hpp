// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "confrepair/logic.hpp"

namespace confrepair {

/// Clause set in solver-local numbering. Literals are nonzero ints: +k / -k
/// for local variable k (1-based). Locals 1..input_vars.size() map back to
/// interned variables; anything above that is a Tseitin auxiliary, which
/// keeps auxiliaries distinguishable from configuration variables.
struct CnfFormula {
    std::vector<std::vector<int>> clauses;
    std::vector<VarId> input_vars; // local var k (1-based) -> input_vars[k-1]
    int var_count = 0;             // inputs + auxiliaries

    int local_of(VarId v) const {
        for (size_t i = 0; i < input_vars.size(); ++i)
            if (input_vars[i] == v) return static_cast<int>(i) + 1;
        return 0;
    }
};

/// Tseitin transformation. Equisatisfiable with `f`; restricted to f's
/// variables, every CNF model satisfies f (auxiliary definitions are full
/// biconditionals). Constant true becomes zero clauses, constant false one
/// empty clause.
inline CnfFormula to_cnf(const Formula& f) {
    CnfFormula cnf;
    if (f.is_true()) return cnf;
    if (f.is_false()) {
        cnf.clauses.push_back({});
        return cnf;
    }

    cnf.input_vars = f.vars();
    cnf.var_count = static_cast<int>(cnf.input_vars.size());
    std::map<uint32_t, int> local;
    for (size_t i = 0; i < cnf.input_vars.size(); ++i)
        local[cnf.input_vars[i].index] = static_cast<int>(i) + 1;

    // Returns the literal equivalent to the subformula, allocating an
    // auxiliary variable per internal node.
    auto encode = [&](auto&& self, const Formula& g) -> int {
        switch (g.kind()) {
        case Formula::Kind::Var:
            return local.at(g.variable().index);
        case Formula::Kind::Not:
            return -self(self, g.child(0));
        case Formula::Kind::And: {
            std::vector<int> lits;
            lits.reserve(g.child_count());
            for (size_t i = 0; i < g.child_count(); ++i) lits.push_back(self(self, g.child(i)));
            int aux = ++cnf.var_count;
            std::vector<int> back{aux};
            for (int l : lits) {
                cnf.clauses.push_back({-aux, l}); // aux -> l
                back.push_back(-l);               // all l -> aux
            }
            cnf.clauses.push_back(std::move(back));
            return aux;
        }
        case Formula::Kind::Or: {
            std::vector<int> lits;
            lits.reserve(g.child_count());
            for (size_t i = 0; i < g.child_count(); ++i) lits.push_back(self(self, g.child(i)));
            int aux = ++cnf.var_count;
            std::vector<int> fwd{-aux};
            for (int l : lits) {
                cnf.clauses.push_back({aux, -l}); // l -> aux
                fwd.push_back(l);                 // aux -> some l
            }
            cnf.clauses.push_back(std::move(fwd));
            return aux;
        }
        default:
            // Constants below the root were folded by the Formula factories.
            throw std::logic_error("to_cnf: unexpected constant node");
        }
    };

    int root = encode(encode, f);
    cnf.clauses.push_back({root});
    return cnf;
}

/// DIMACS text form, clause lines terminated by 0. Variable names for the
/// non-auxiliary range go into comment lines so external solvers can be
/// cross-checked.
inline void write_dimacs(std::ostream& out, const CnfFormula& cnf, const VarTable& table) {
    for (size_t i = 0; i < cnf.input_vars.size(); ++i)
        out << "c var " << (i + 1) << ' ' << table.name(cnf.input_vars[i]) << '\n';
    out << "p cnf " << cnf.var_count << ' ' << cnf.clauses.size() << '\n';
    for (const auto& clause : cnf.clauses) {
        for (int lit : clause) out << lit << ' ';
        out << "0\n";
    }
}

} // namespace confrepair
