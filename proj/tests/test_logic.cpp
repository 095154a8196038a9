// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "confrepair/cnf.hpp"
#include "confrepair/logic.hpp"
#include "confrepair/solver.hpp"

#include "support/fig2.hpp"
#include "support/oracles.hpp"

using namespace confrepair;

TEST_CASE("interning is stable and validated") {
    VarTable t;
    VarId a = t.intern("ARM_GIC");
    VarId b = t.intern("USB_MODULE");
    CHECK(a == t.intern("ARM_GIC"));
    CHECK(a != b);
    CHECK(t.name(b) == "USB_MODULE");
    CHECK_THROWS(t.intern(""));
    CHECK_THROWS(t.intern("A B"));
}

TEST_CASE("formula constructors fold constants") {
    VarTable t;
    Formula a = Formula::var(t.intern("A"));
    CHECK(Formula::conjunction({a, Formula::truth()}) == a);
    CHECK(Formula::conjunction({a, Formula::falsity()}).is_false());
    CHECK(Formula::disjunction({a, Formula::falsity()}) == a);
    CHECK(Formula::disjunction({a, Formula::truth()}).is_true());
    CHECK(Formula::negation(Formula::negation(a)) == a);
    CHECK(Formula::conjunction({}) == Formula::truth());
    CHECK(Formula::disjunction({}) == Formula::falsity());
}

TEST_CASE("infix printing") {
    VarTable t;
    Formula a = Formula::var(t.intern("A"));
    Formula b = Formula::var(t.intern("B"));
    Formula c = Formula::var(t.intern("C"));
    Formula f = Formula::conjunction({a, Formula::disjunction({b, Formula::negation(c)})});
    CHECK(f.to_infix(t) == "A && (B || !C)");
    CHECK(Formula::falsity().to_infix(t) == "false");
}

TEST_CASE("to_cnf: constant true gives zero clauses") {
    CnfFormula cnf = to_cnf(Formula::truth());
    CHECK(cnf.clauses.empty());
}

TEST_CASE("to_cnf: single variable gives one unit clause") {
    VarTable t;
    CnfFormula cnf = to_cnf(Formula::var(t.intern("A")));
    REQUIRE(cnf.clauses.size() == 1);
    REQUIRE(cnf.clauses[0].size() == 1);
    CHECK(cnf.input_vars.size() == 1);
    CHECK(cnf.clauses[0][0] == 1);
}

TEST_CASE("to_cnf: constant false gives the empty clause") {
    CnfFormula cnf = to_cnf(Formula::falsity());
    REQUIRE(cnf.clauses.size() == 1);
    CHECK(cnf.clauses[0].empty());
    CHECK(!solve(cnf, {}).sat);
}

TEST_CASE("to_cnf is equisatisfiable with the truth table on a generated corpus") {
    VarTable t;
    std::vector<VarId> vars;
    for (int i = 0; i < 8; ++i) vars.push_back(t.intern("V" + std::to_string(i)));
    std::mt19937 rng(7);
    for (int round = 0; round < 400; ++round) {
        Formula f = oracle::random_formula(rng, vars, 4);
        bool expect = oracle::truth_table_sat(f);
        SolveOutcome got = solve(to_cnf(f), {});
        REQUIRE(got.sat == expect);
        if (got.sat) {
            // model soundness: the CNF model restricted to f's variables satisfies f
            CHECK(f.eval([&](VarId v) { return got.model.at(v); }));
        }
    }
}

TEST_CASE("solve: direct contradiction with an assumption") {
    VarTable t;
    Formula a = Formula::var(t.intern("A"));
    CnfFormula cnf = to_cnf(a);
    SolveOutcome out = solve(cnf, {Literal{t.lookup("A"), false}});
    REQUIRE(!out.sat);
    REQUIRE(out.core.size() == 1);
    CHECK(out.core[0] == Literal{t.lookup("A"), false});
}

TEST_CASE("solve: assumptions alone form the model") {
    VarTable t;
    VarId a = t.intern("A");
    VarId b = t.intern("B");
    CnfFormula empty;
    SolveOutcome out = solve(empty, {Literal{a, true}, Literal{b, false}});
    REQUIRE(out.sat);
    CHECK(out.model.at(a) == true);
    CHECK(out.model.at(b) == false);
}

TEST_CASE("solve: fixture spec contradicts PM=n when the file option is required") {
    VarTable t;
    KconfigSpec spec = fig2::spec6(t);
    Formula f = spec_to_formula(spec, t);
    Formula query = Formula::conjunction({f, Formula::var(t.lookup("ARM_GIC"))});

    // cross-check by enumeration over the six options
    CHECK(!oracle::truth_table_sat(
        Formula::conjunction({query, Formula::negation(Formula::var(t.lookup("PM")))})));

    SolveOutcome out = solve(to_cnf(query), {Literal{t.lookup("PM"), false}});
    REQUIRE(!out.sat);
    bool has_pm = false;
    for (const Literal& l : out.core)
        if (l.var == t.lookup("PM") && !l.positive) has_pm = true;
    CHECK(has_pm);
}

TEST_CASE("solve_with_preference honors unconstrained preferences") {
    VarTable t;
    VarId a = t.intern("A");
    CnfFormula empty;
    SolveOutcome out = solve_with_preference(empty, {}, {{a, true}});
    REQUIRE(out.sat);
    CHECK(out.model.at(a) == true);
}

TEST_CASE("solve_with_preference yields to forced values") {
    VarTable t;
    VarId a = t.intern("A");
    Formula f = Formula::negation(Formula::var(a));
    SolveOutcome out = solve_with_preference(to_cnf(f), {}, {{a, true}});
    REQUIRE(out.sat);
    CHECK(out.model.at(a) == false);
}

TEST_CASE("preference distance stays close to the brute-force optimum") {
    VarTable t;
    std::vector<VarId> vars;
    for (int i = 0; i < 10; ++i) vars.push_back(t.intern("P" + std::to_string(i)));
    std::mt19937 rng(23);
    long total_gap = 0;
    int sat_rounds = 0;
    for (int round = 0; round < 60; ++round) {
        Formula f = oracle::random_formula(rng, vars, 3);
        std::map<VarId, bool> pref;
        for (VarId v : vars) pref[v] = std::uniform_int_distribution<int>(0, 1)(rng);
        SolveOutcome out = solve_with_preference(to_cnf(f), {}, pref);
        auto models = oracle::all_models(f, vars);
        REQUIRE(out.sat == !models.empty());
        if (!out.sat) continue;
        ++sat_rounds;
        REQUIRE(f.eval([&](VarId v) { return out.model.at(v); }));
        auto distance = [&](const std::map<VarId, bool>& m) {
            int d = 0;
            for (VarId v : vars)
                if (m.at(v) != pref.at(v)) ++d;
            return d;
        };
        int best = vars.size();
        for (const auto& m : models) best = std::min(best, distance(m));
        int got = distance(out.model);
        REQUIRE(got >= best);
        total_gap += got - best;
    }
    WARN("preference-vs-optimum Hamming gap over " << sat_rounds
         << " sat instances: " << total_gap);
}

TEST_CASE("core soundness and core progress on random unsat instances") {
    VarTable t;
    std::vector<VarId> vars;
    for (int i = 0; i < 9; ++i) vars.push_back(t.intern("C" + std::to_string(i)));
    std::mt19937 rng(99);
    int unsat_seen = 0;
    for (int round = 0; round < 600 && unsat_seen < 120; ++round) {
        Formula f = oracle::random_formula(rng, vars, 4);
        CnfFormula cnf = to_cnf(f);
        std::vector<Literal> assumptions;
        for (VarId v : vars)
            if (std::uniform_int_distribution<int>(0, 2)(rng) != 0)
                assumptions.push_back(Literal{v, std::uniform_int_distribution<int>(0, 1)(rng) == 1});
        SolveOutcome out = solve(cnf, assumptions);
        if (out.sat) continue;
        ++unsat_seen;
        // soundness: the core alone still contradicts the clauses
        SolveOutcome again = solve(cnf, out.core);
        REQUIRE(!again.sat);
        // progress: if the clauses alone are satisfiable the core is nonempty
        if (solve(cnf, {}).sat) REQUIRE(!out.core.empty());
        for (const Literal& l : out.core)
            REQUIRE(std::find(assumptions.begin(), assumptions.end(), l) != assumptions.end());
    }
    REQUIRE(unsat_seen >= 50);
}

TEST_CASE("dimacs dump shape") {
    VarTable t;
    Formula a = Formula::var(t.intern("A"));
    Formula b = Formula::var(t.intern("B"));
    CnfFormula cnf = to_cnf(Formula::conjunction({a, Formula::negation(b)}));
    std::ostringstream ss;
    write_dimacs(ss, cnf, t);
    std::string text = ss.str();
    CHECK(text.find("p cnf ") != std::string::npos);
    CHECK(text.find("c var 1 A") != std::string::npos);
    // every clause line is 0-terminated
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c' || line[0] == 'p') continue;
        REQUIRE(line.size() >= 1);
        CHECK(line.substr(line.size() - 1) == "0");
    }
}
