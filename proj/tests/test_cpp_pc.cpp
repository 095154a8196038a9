// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "confrepair/cpp_pc.hpp"
#include "confrepair/digest.hpp"

#include "support/fig2.hpp"
#include "support/oracles.hpp"

using namespace confrepair;

namespace {

KconfigSpec tiny_spec(VarTable& t, const std::vector<std::pair<std::string, bool>>& opts) {
    std::string text = "config MODULES\n\tbool \"modules\"\n\n";
    for (const auto& [name, tri] : opts)
        text += "config " + name + (tri ? "\n\ttristate \"x\"\n\n" : "\n\tbool \"x\"\n\n");
    return parse_kconfig("Kconfig", t, fig2::memory_loader({{"Kconfig", text}}));
}

// Naive preprocessor simulation: walks directives with concrete values and
// reports, per line, whether the line survives. Independent of BlockTree.
std::vector<bool> simulate(const std::string& text, const KconfigSpec& spec,
                           const std::function<char(const std::string&)>& value) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (!lines.empty() && lines.back().empty() && text.ends_with('\n')) lines.pop_back();

    // tiny concrete evaluator over the supported atom set
    std::function<bool(std::string_view, size_t&)> parse_or;
    std::function<bool(std::string_view, size_t&)> parse_and;
    std::function<bool(std::string_view, size_t&)> parse_not;
    auto skip = [](std::string_view s, size_t& i) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    };
    auto ident = [](std::string_view s, size_t& i) {
        size_t b = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
        return std::string(s.substr(b, i - b));
    };
    auto option_value = [&](const std::string& name) -> char {
        if (!name.starts_with("CONFIG_")) return '?';
        std::string opt = name.substr(7);
        if (!spec.declared(opt)) return 'n';
        return value(opt);
    };
    parse_not = [&](std::string_view s, size_t& i) -> bool {
        skip(s, i);
        if (i < s.size() && s[i] == '!') {
            ++i;
            return !parse_not(s, i);
        }
        if (i < s.size() && s[i] == '(') {
            ++i;
            bool v = parse_or(s, i);
            skip(s, i);
            if (i < s.size() && s[i] == ')') ++i;
            return v;
        }
        if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            size_t b = i;
            while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
            return std::strtol(std::string(s.substr(b, i - b)).c_str(), nullptr, 0) != 0;
        }
        std::string name = ident(s, i);
        skip(s, i);
        if (name == "defined") {
            bool paren = i < s.size() && s[i] == '(';
            if (paren) ++i;
            skip(s, i);
            std::string arg = ident(s, i);
            skip(s, i);
            if (paren && i < s.size() && s[i] == ')') ++i;
            return option_value(arg) != 'n' && option_value(arg) != '?';
        }
        if (name == "IS_ENABLED" || name == "IS_BUILTIN" || name == "IS_MODULE") {
            if (i < s.size() && s[i] == '(') ++i;
            skip(s, i);
            std::string arg = ident(s, i);
            skip(s, i);
            if (i < s.size() && s[i] == ')') ++i;
            char v = option_value(arg);
            if (name == "IS_ENABLED") return v == 'y' || v == 'm';
            if (name == "IS_BUILTIN") return v == 'y';
            return v == 'm';
        }
        return false; // unknown atoms read as off
    };
    parse_and = [&](std::string_view s, size_t& i) -> bool {
        bool v = parse_not(s, i);
        skip(s, i);
        while (i + 1 < s.size() && s[i] == '&' && s[i + 1] == '&') {
            i += 2;
            bool r = parse_not(s, i);
            v = v && r;
            skip(s, i);
        }
        return v;
    };
    parse_or = [&](std::string_view s, size_t& i) -> bool {
        bool v = parse_and(s, i);
        skip(s, i);
        while (i + 1 < s.size() && s[i] == '|' && s[i + 1] == '|') {
            i += 2;
            bool r = parse_and(s, i);
            v = v || r;
            skip(s, i);
        }
        return v;
    };

    struct Frame {
        bool parent_active;
        bool taken;      // some earlier branch of this group was taken
        bool active;     // current branch active
    };
    std::vector<Frame> stack;
    std::vector<bool> included(lines.size() + 1, false);
    auto active_now = [&]() { return stack.empty() || (stack.back().parent_active && stack.back().active); };

    for (size_t k = 0; k < lines.size(); ++k) {
        const std::string& l = lines[k];
        size_t i = 0;
        skip(l, i);
        if (i >= l.size() || l[i] != '#') {
            included[k + 1] = active_now();
            continue;
        }
        ++i;
        skip(l, i);
        std::string kw = ident(l, i);
        if (kw == "if" || kw == "ifdef" || kw == "ifndef") {
            bool parent = active_now();
            included[k + 1] = parent;
            bool cond;
            if (kw == "if") {
                cond = parse_or(l, i);
            } else {
                skip(l, i);
                std::string arg = ident(l, i);
                char v = option_value(arg);
                bool defined = v != 'n' && v != '?';
                cond = kw == "ifdef" ? defined : !defined;
            }
            stack.push_back(Frame{parent, cond, cond});
        } else if (kw == "elif") {
            bool parent = stack.back().parent_active;
            included[k + 1] = parent;
            bool cond = parse_or(l, i);
            bool act = !stack.back().taken && cond;
            stack.back().active = act;
            stack.back().taken = stack.back().taken || act;
        } else if (kw == "else") {
            bool parent = stack.back().parent_active;
            included[k + 1] = parent;
            stack.back().active = !stack.back().taken;
            stack.back().taken = true;
        } else if (kw == "endif") {
            bool parent = stack.back().parent_active;
            included[k + 1] = parent;
            stack.pop_back();
        } else {
            included[k + 1] = active_now();
        }
    }
    return included;
}

} // namespace

TEST_CASE("figure source: both arms and the unconditional tail") {
    VarTable t;
    KconfigSpec spec = fig2::spec6(t);
    std::string text = read_file_bytes(fig2::tree_dir() + "/drivers/irqchip/irq-gic.c");
    BlockTree tree = parse_conditionals(text, "irq-gic.c", spec, t);

    Formula gic = Formula::var(t.lookup("GIC_NON_BANKED"));
    CHECK(line_condition(tree, 4).pc == gic);
    CHECK(line_condition(tree, 6).pc == gic);
    CHECK(line_condition(tree, 9).pc == Formula::negation(gic));
    // directive lines take the outer block's condition
    CHECK(line_condition(tree, 3).pc.is_true());
    CHECK(line_condition(tree, 8).pc.is_true());
    CHECK(line_condition(tree, 10).pc.is_true());
    // second hunk region: no conditionals at all
    CHECK(line_condition(tree, 14).pc.is_true());
    CHECK_THROWS_AS(line_condition(tree, 0), std::out_of_range);
    CHECK_THROWS_AS(line_condition(tree, tree.line_count + 1), std::out_of_range);
}

TEST_CASE("no directives: a single root block, every line true") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {});
    BlockTree tree = parse_conditionals("int a;\nint b;\n", "f.c", spec, t);
    REQUIRE(tree.blocks.size() == 1);
    CHECK(tree.line_count == 2);
    CHECK(line_condition(tree, 1).pc.is_true());
    CHECK(line_condition(tree, 2).pc.is_true());
}

TEST_CASE("#if 0 blocks are never satisfiable") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {});
    BlockTree tree = parse_conditionals("#if 0\nint dead;\n#else\nint live;\n#endif\n", "f.c", spec, t);
    CHECK(line_condition(tree, 2).pc.is_false());
    CHECK(line_condition(tree, 4).pc.is_true());
}

TEST_CASE("nested conditions conjoin and match the simulation oracle") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}, {"B", false}});
    std::string text = "#ifdef CONFIG_A\n#ifdef CONFIG_B\nint ab;\n#endif\nint a;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    Formula a = Formula::var(t.lookup("A"));
    Formula b = Formula::var(t.lookup("B"));
    CHECK(line_condition(tree, 3).pc == Formula::conjunction({a, b}));
    CHECK(line_condition(tree, 5).pc == a);

    for (int bits = 0; bits < 4; ++bits) {
        auto value = [&](const std::string& n) -> char {
            if (n == "A") return bits & 1 ? 'y' : 'n';
            if (n == "B") return bits & 2 ? 'y' : 'n';
            return 'n';
        };
        std::vector<bool> inc = simulate(text, spec, value);
        for (int line = 1; line <= tree.line_count; ++line) {
            bool pc = line_condition(tree, line).pc.eval([&](VarId v) {
                return value(t.name(v)) != 'n';
            });
            REQUIRE(pc == inc[line]);
        }
    }
}

TEST_CASE("enclosing chains identify block nesting") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}});
    std::string text = "#ifdef CONFIG_A\nint x;\nint y;\n#else\nint z;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    CHECK(enclosing_chain(tree, 2) == enclosing_chain(tree, 3));
    auto then_chain = enclosing_chain(tree, 2);
    auto else_chain = enclosing_chain(tree, 5);
    REQUIRE(then_chain.size() == else_chain.size());
    CHECK(then_chain.back() != else_chain.back());
    CHECK(then_chain[0] == else_chain[0]);
}

TEST_CASE("chain length equals nesting depth plus one on random nestings") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}, {"B", false}, {"C", false},
                                     {"D", false}, {"E", false}, {"F", false}});
    std::mt19937 rng(5);
    for (int round = 0; round < 30; ++round) {
        int depth = std::uniform_int_distribution<int>(1, 6)(rng);
        std::string text;
        const char* names[] = {"A", "B", "C", "D", "E", "F"};
        for (int d = 0; d < depth; ++d)
            text += std::string("#ifdef CONFIG_") + names[d] + "\n";
        text += "int innermost;\n";
        int payload_line = depth + 1;
        for (int d = 0; d < depth; ++d) text += "#endif\n";
        BlockTree tree = parse_conditionals(text, "f.c", spec, t);
        CHECK(enclosing_chain(tree, payload_line).size() == static_cast<size_t>(depth) + 1);
    }
}

TEST_CASE("sibling branches are mutually exclusive and complete with an else") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}, {"B", false}, {"C", false}});
    std::string text =
        "#if defined(CONFIG_A)\nint a;\n#elif defined(CONFIG_B) && defined(CONFIG_C)\nint b;\n"
        "#elif !defined(CONFIG_C)\nint c;\n#else\nint d;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    const Block& root = tree.blocks[0];
    REQUIRE(root.children.size() == 4);
    std::vector<Formula> conds;
    for (int id : root.children) conds.push_back(tree.blocks[id].branch_condition);
    for (size_t i = 0; i < conds.size(); ++i)
        for (size_t j = i + 1; j < conds.size(); ++j)
            CHECK(!oracle::truth_table_sat(Formula::conjunction({conds[i], conds[j]})));
    // with an #else the disjunction of all branches is a tautology
    Formula any = Formula::disjunction(conds);
    CHECK(!oracle::truth_table_sat(Formula::negation(any)));
}

TEST_CASE("inner conditions imply every ancestor condition") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}, {"B", true}});
    std::string text =
        "#ifdef CONFIG_A\n#if IS_ENABLED(CONFIG_B)\nint ab;\n#endif\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    auto chain = enclosing_chain(tree, 3);
    Formula inner = line_condition(tree, 3).pc;
    for (int id : chain) {
        Formula anc = tree.blocks[id].branch_condition;
        CHECK(!oracle::truth_table_sat(Formula::conjunction({inner, Formula::negation(anc)})));
    }
}

TEST_CASE("tristate macros map by build mode") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"M", true}});
    std::string text =
        "#if IS_BUILTIN(CONFIG_M)\nint b;\n#elif IS_MODULE(CONFIG_M)\nint m;\n#endif\n"
        "#ifdef CONFIG_M\nint d;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    Formula m = Formula::var(t.lookup("M"));
    Formula mm = Formula::var(t.lookup("M_MODULE"));
    CHECK(line_condition(tree, 2).pc == Formula::conjunction({m, Formula::negation(mm)}));
    CHECK(line_condition(tree, 7).pc == Formula::disjunction({m, mm}));
}

TEST_CASE("unknown tokens become per-file free variables, memoized") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}});
    Diagnostics diag;
    std::string text =
        "#ifdef WEIRD_MACRO\nint a;\n#endif\n#ifdef WEIRD_MACRO\nint b;\n#endif\n"
        "#if CONFIG_A > 2\nint c;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t, &diag);
    Formula first = line_condition(tree, 2).pc;
    Formula second = line_condition(tree, 5).pc;
    CHECK(first == second); // same token, same variable
    Formula arith = line_condition(tree, 8).pc;
    CHECK(arith.kind() == Formula::Kind::Var);
    CHECK(!(arith == first));
    // both branches of an unknown-token conditional remain satisfiable
    CHECK(oracle::truth_table_sat(first));
    CHECK(oracle::truth_table_sat(Formula::negation(first)));
}

TEST_CASE("undeclared config symbols read as n") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {});
    Diagnostics diag;
    BlockTree tree =
        parse_conditionals("#ifdef CONFIG_NOT_DECLARED\nint a;\n#else\nint b;\n#endif\n", "f.c",
                           spec, t, &diag);
    CHECK(line_condition(tree, 2).pc.is_false());
    CHECK(line_condition(tree, 4).pc.is_true());
    CHECK(!diag.warnings.empty());
}

TEST_CASE("directives inside block comments are ignored") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}});
    std::string text = "/*\n#ifdef CONFIG_A\n*/\nint x;\n#ifdef CONFIG_A\nint y;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    CHECK(line_condition(tree, 4).pc.is_true());
    CHECK(line_condition(tree, 6).pc == Formula::var(t.lookup("A")));
}

TEST_CASE("directive continuations keep the whole expression") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}, {"B", false}});
    std::string text = "#if defined(CONFIG_A) && \\\n    defined(CONFIG_B)\nint ab;\n#endif\n";
    BlockTree tree = parse_conditionals(text, "f.c", spec, t);
    Formula expect =
        Formula::conjunction({Formula::var(t.lookup("A")), Formula::var(t.lookup("B"))});
    CHECK(line_condition(tree, 3).pc == expect);
    // both physical directive lines map to the outer block
    CHECK(line_condition(tree, 1).pc.is_true());
    CHECK(line_condition(tree, 2).pc.is_true());
}

TEST_CASE("defines of config symbols warn and are otherwise ignored") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {{"A", false}});
    Diagnostics diag;
    parse_conditionals("#define CONFIG_A 1\nint x;\n", "f.c", spec, t, &diag);
    REQUIRE(diag.warnings.size() == 1);
}

TEST_CASE("malformed nesting is rejected") {
    VarTable t;
    KconfigSpec spec = tiny_spec(t, {});
    CHECK_THROWS_AS(parse_conditionals("#endif\n", "f.c", spec, t), ParseError);
    CHECK_THROWS_AS(parse_conditionals("#ifdef CONFIG_X\n", "f.c", spec, t), ParseError);
    CHECK_THROWS_AS(parse_conditionals("#if 1\n#else\n#elif 1\n#endif\n", "f.c", spec, t),
                    ParseError);
}
