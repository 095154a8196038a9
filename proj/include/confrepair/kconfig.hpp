// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "confrepair/cnf.hpp"
#include "confrepair/diagnostics.hpp"
#include "confrepair/digest.hpp"
#include "confrepair/logic.hpp"
#include "confrepair/solver.hpp"

namespace confrepair {

struct KconfigDefault {
    char value = 'n'; // 'y', 'm' or 'n'
    Formula condition; // truth() when unconditional
};

struct SelectTarget {
    std::string target;
    Formula condition;
};

struct SelectEdge {
    std::string selector;
    Formula condition;
};

struct OptionDecl {
    std::string name;
    bool tristate = false;
    std::optional<std::string> prompt;
    std::vector<KconfigDefault> defaults;
    Formula depends_on = Formula::truth();   // conjunction of all depends-on lines
    Formula enclosing_if = Formula::truth(); // folded from surrounding if/endif
    std::vector<SelectTarget> selects;
    std::vector<SelectEdge> selected_by; // derived after the full parse
    std::string file;
    int line = 0;

    friend bool operator==(const OptionDecl& a, const OptionDecl& b) {
        if (a.name != b.name || a.tristate != b.tristate || a.prompt != b.prompt) return false;
        if (!(a.depends_on == b.depends_on) || !(a.enclosing_if == b.enclosing_if)) return false;
        if (a.defaults.size() != b.defaults.size() || a.selects.size() != b.selects.size()) return false;
        for (size_t i = 0; i < a.defaults.size(); ++i)
            if (a.defaults[i].value != b.defaults[i].value ||
                !(a.defaults[i].condition == b.defaults[i].condition))
                return false;
        for (size_t i = 0; i < a.selects.size(); ++i)
            if (a.selects[i].target != b.selects[i].target ||
                !(a.selects[i].condition == b.selects[i].condition))
                return false;
        return true;
    }
};

struct KconfigSpec {
    std::vector<OptionDecl> decls;
    std::string source_digest;

    const OptionDecl* find(std::string_view name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d;
        return nullptr;
    }
    bool declared(std::string_view name) const { return find(name) != nullptr; }

    friend bool operator==(const KconfigSpec& a, const KconfigSpec& b) {
        return a.decls == b.decls;
    }
};

/// Partial or complete assignment of option values.
struct Assignment {
    std::map<std::string, char> values; // 'y' | 'm' | 'n'
    bool complete = false;

    friend bool operator==(const Assignment& a, const Assignment& b) {
        return a.values == b.values && a.complete == b.complete;
    }
};

using FileLoader = std::function<std::optional<std::string>(const std::string&)>;

inline FileLoader disk_loader() {
    return [](const std::string& path) -> std::optional<std::string> {
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) return std::nullopt;
        return read_file_bytes(path);
    };
}

namespace kconfig_detail {

inline bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Boolean expressions over option names: NAME, !, &&, ||, parentheses.
class ExprParser {
public:
    ExprParser(std::string_view text, VarTable& table, const std::string& file, int line)
        : text_(text), table_(table), file_(file), line_(line) {}

    Formula parse() {
        Formula f = parse_or();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(file_, line_, "trailing characters in expression: '" + std::string(text_.substr(pos_)) + "'");
        return f;
    }

private:
    Formula parse_or() {
        std::vector<Formula> parts{parse_and()};
        while (eat("||")) parts.push_back(parse_and());
        return Formula::disjunction(parts);
    }
    Formula parse_and() {
        std::vector<Formula> parts{parse_not()};
        while (eat("&&")) parts.push_back(parse_not());
        return Formula::conjunction(parts);
    }
    Formula parse_not() {
        skip_ws();
        if (eat("!")) return Formula::negation(parse_not());
        return parse_atom();
    }
    Formula parse_atom() {
        skip_ws();
        if (eat("(")) {
            Formula f = parse_or();
            skip_ws();
            if (!eat(")")) throw ParseError(file_, line_, "expected ')' in expression");
            return f;
        }
        size_t start = pos_;
        while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
        if (pos_ == start) throw ParseError(file_, line_, "expected option name in expression");
        return Formula::var(table_.intern(text_.substr(start, pos_ - start)));
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }
    bool eat(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_).starts_with(tok)) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    std::string_view text_;
    VarTable& table_;
    std::string file_;
    int line_;
    size_t pos_ = 0;
};

struct ParserState {
    VarTable& table;
    FileLoader load;
    KconfigSpec spec;
    Digest digest;
    std::vector<std::string> include_stack;
    std::string root_dir;
};

inline std::string_view trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::optional<std::string> parse_prompt(std::string_view rest, const std::string& file, int line) {
    rest = trim(rest);
    if (rest.empty()) return std::nullopt;
    if (rest.front() != '"') throw ParseError(file, line, "expected quoted prompt");
    size_t end = rest.find('"', 1);
    if (end == std::string_view::npos) throw ParseError(file, line, "unterminated prompt string");
    return std::string(rest.substr(1, end - 1));
}

inline void parse_file(ParserState& st, const std::string& path, std::vector<Formula>& if_stack);

inline void parse_lines(ParserState& st, const std::string& path, const std::string& content,
                        std::vector<Formula>& if_stack) {
    OptionDecl* open = nullptr;
    size_t open_if_depth_at_entry = if_stack.size();
    int help_indent = -1; // >= 0 while skipping a help block

    std::vector<std::string_view> lines;
    {
        size_t start = 0;
        while (start <= content.size()) {
            size_t nl = content.find('\n', start);
            if (nl == std::string::npos) {
                lines.push_back(std::string_view(content).substr(start));
                break;
            }
            lines.push_back(std::string_view(content).substr(start, nl - start));
            start = nl + 1;
        }
    }

    auto enclosing = [&]() {
        std::vector<Formula> parts(if_stack.begin(), if_stack.end());
        return Formula::conjunction(parts);
    };

    for (size_t idx = 0; idx < lines.size(); ++idx) {
        int lineno = static_cast<int>(idx) + 1;
        std::string_view raw = lines[idx];
        std::string_view line = trim(raw);

        if (help_indent >= 0) {
            if (line.empty()) continue;
            int indent = 0;
            for (char c : raw) {
                if (c == ' ') indent += 1;
                else if (c == '\t') indent += 8;
                else break;
            }
            if (indent > help_indent) continue;
            help_indent = -1; // falls through to normal handling
        }

        if (line.empty() || line.front() == '#') continue;

        auto keyword = [&](std::string_view kw) -> std::optional<std::string_view> {
            if (!line.starts_with(kw)) return std::nullopt;
            std::string_view rest = line.substr(kw.size());
            if (!rest.empty() && is_name_char(rest.front())) return std::nullopt; // longer word
            return trim(rest);
        };

        if (auto rest = keyword("config")) {
            std::string name(*rest);
            if (name.empty()) throw ParseError(path, lineno, "missing option name after 'config'");
            for (char c : name)
                if (!is_name_char(c)) throw ParseError(path, lineno, "bad option name: '" + name + "'");
            if (st.spec.declared(name))
                throw ParseError(path, lineno, "duplicate option name: '" + name + "'");
            OptionDecl d;
            d.name = name;
            d.enclosing_if = enclosing();
            d.file = path;
            d.line = lineno;
            st.spec.decls.push_back(std::move(d));
            open = &st.spec.decls.back();
            st.table.intern(name);
            continue;
        }
        if (auto rest = keyword("if")) {
            if_stack.push_back(ExprParser(*rest, st.table, path, lineno).parse());
            continue;
        }
        if (keyword("endif")) {
            if (if_stack.size() <= open_if_depth_at_entry)
                throw ParseError(path, lineno, "'endif' without matching 'if'");
            if_stack.pop_back();
            open = nullptr;
            continue;
        }
        if (auto rest = keyword("source")) {
            auto quoted = parse_prompt(*rest, path, lineno);
            if (!quoted) throw ParseError(path, lineno, "expected quoted path after 'source'");
            std::string sub = st.root_dir.empty() ? *quoted : st.root_dir + "/" + *quoted;
            open = nullptr;
            parse_file(st, sub, if_stack);
            continue;
        }

        // Everything below is an attribute of the currently open option.
        if (!open) throw ParseError(path, lineno, "attribute outside of a config block: '" + std::string(line) + "'");

        if (auto rest = keyword("bool")) {
            open->tristate = false;
            open->prompt = parse_prompt(*rest, path, lineno);
            continue;
        }
        if (auto rest = keyword("tristate")) {
            open->tristate = true;
            open->prompt = parse_prompt(*rest, path, lineno);
            continue;
        }
        if (auto rest = keyword("depends")) {
            std::string_view r = *rest;
            if (!r.starts_with("on") || (r.size() > 2 && is_name_char(r[2])))
                throw ParseError(path, lineno, "expected 'depends on'");
            Formula f = ExprParser(trim(r.substr(2)), st.table, path, lineno).parse();
            open->depends_on = Formula::conjunction({open->depends_on, f});
            continue;
        }
        if (auto rest = keyword("select")) {
            std::string_view r = *rest;
            size_t e = 0;
            while (e < r.size() && is_name_char(r[e])) ++e;
            if (e == 0) throw ParseError(path, lineno, "expected option name after 'select'");
            SelectTarget s;
            s.target = std::string(r.substr(0, e));
            s.condition = Formula::truth();
            std::string_view tail = trim(r.substr(e));
            if (!tail.empty()) {
                if (!tail.starts_with("if") || (tail.size() > 2 && is_name_char(tail[2])))
                    throw ParseError(path, lineno, "expected 'if' after select target");
                s.condition = ExprParser(trim(tail.substr(2)), st.table, path, lineno).parse();
            }
            open->selects.push_back(std::move(s));
            continue;
        }
        if (auto rest = keyword("default")) {
            std::string_view r = *rest;
            if (r.empty()) throw ParseError(path, lineno, "missing default value");
            char v = r.front();
            if (v != 'y' && v != 'm' && v != 'n')
                throw ParseError(path, lineno,
                                 "unsupported default value (only the constants y/m/n are supported): '" +
                                     std::string(r) + "'");
            if (r.size() > 1 && is_name_char(r[1]))
                throw ParseError(path, lineno,
                                 "unsupported default value (only the constants y/m/n are supported): '" +
                                     std::string(r) + "'");
            std::string_view tail = trim(r.substr(1));
            KconfigDefault d;
            d.value = v;
            d.condition = Formula::truth();
            if (!tail.empty()) {
                if (!tail.starts_with("if") || (tail.size() > 2 && is_name_char(tail[2])))
                    throw ParseError(path, lineno, "expected 'if' after default value");
                d.condition = ExprParser(trim(tail.substr(2)), st.table, path, lineno).parse();
            }
            if (v == 'm' && !open->tristate)
                throw ParseError(path, lineno, "default m on bool option '" + open->name + "'");
            open->defaults.push_back(std::move(d));
            continue;
        }
        if (keyword("help")) {
            help_indent = 0;
            for (char c : raw) {
                if (c == ' ') help_indent += 1;
                else if (c == '\t') help_indent += 8;
                else break;
            }
            continue;
        }
        throw ParseError(path, lineno, "unsupported construct: '" + std::string(line) + "'");
    }

    if (help_indent >= 0) help_indent = -1;
    if (if_stack.size() != open_if_depth_at_entry)
        throw ParseError(path, static_cast<int>(lines.size()), "unterminated 'if' block");
}

inline void parse_file(ParserState& st, const std::string& path, std::vector<Formula>& if_stack) {
    for (const auto& p : st.include_stack)
        if (p == path)
            throw ParseError(path, 0, "cycle in source inclusion");
    auto content = st.load(path);
    if (!content) throw ParseError(path, 0, "cannot read Kconfig file");
    st.digest.update_framed(path);
    st.digest.update_framed(*content);
    st.include_stack.push_back(path);
    parse_lines(st, path, *content, if_stack);
    st.include_stack.pop_back();
}

} // namespace kconfig_detail

/// Parse the Kconfig-subset DSL starting at `root`. `source` directives are
/// resolved relative to the root file's directory, matching how the kernel
/// resolves them against the tree root.
inline KconfigSpec parse_kconfig(const std::string& root, VarTable& table,
                                 const FileLoader& load = disk_loader(),
                                 Diagnostics* diag = nullptr) {
    kconfig_detail::ParserState st{table, load, {}, {}, {}, {}};
    std::filesystem::path rp(root);
    st.root_dir = rp.has_parent_path() ? rp.parent_path().string() : std::string();
    std::vector<Formula> if_stack;
    kconfig_detail::parse_file(st, root, if_stack);

    // Post-parse validation and derived data.
    for (const auto& d : st.spec.decls) {
        for (const auto& s : d.selects) {
            if (!st.spec.declared(s.target))
                throw ParseError(d.file, d.line, "select of undeclared option '" + s.target + "'");
        }
        for (const auto& def : d.defaults) {
            for (VarId v : def.condition.vars()) {
                if (!st.spec.declared(table.name(v)))
                    throw ParseError(d.file, d.line,
                                     "default condition of '" + d.name + "' references undeclared option '" +
                                         table.name(v) + "'");
            }
        }
    }
    for (const auto& d : st.spec.decls) {
        for (const auto& s : d.selects) {
            for (auto& t : st.spec.decls) {
                if (t.name == s.target) {
                    t.selected_by.push_back(SelectEdge{d.name, s.condition});
                    break;
                }
            }
        }
    }
    if (diag) {
        for (const auto& d : st.spec.decls) {
            auto check = [&](const Formula& f, const char* what) {
                for (VarId v : f.vars())
                    if (!st.spec.declared(table.name(v)))
                        diag->warn("option '" + d.name + "': " + what + " references undeclared option '" +
                                   table.name(v) + "' (treated as n)");
            };
            check(d.depends_on, "depends on");
            check(d.enclosing_if, "enclosing if");
            for (const auto& s : d.selects) check(s.condition, "select condition");
        }
    }
    st.spec.source_digest = st.digest.hex();
    return st.spec;
}

/// Variable name used for the module-capable half of a tristate option.
inline std::string module_var_name(const std::string& option) { return option + "_MODULE"; }

namespace kconfig_detail {

/// References to options that were never declared behave like n, as in the
/// real configuration system.
inline Formula drop_undeclared(const Formula& f, const KconfigSpec& spec, const VarTable& table) {
    std::unordered_map<VarId, bool, VarIdHash> subst;
    for (VarId v : f.vars())
        if (!spec.declared(table.name(v))) subst.emplace(v, false);
    if (subst.empty()) return f;
    return f.partial_eval(subst);
}

} // namespace kconfig_detail

/// Translate the declarations into one global constraint over {X} and, for
/// tristates, {X_MODULE}. An unsatisfiable result is a load-time error.
inline Formula spec_to_formula(const KconfigSpec& spec, VarTable& table) {
    using kconfig_detail::drop_undeclared;
    bool has_modules = spec.declared("MODULES");
    std::vector<Formula> clauses;

    for (const auto& d : spec.decls) {
        Formula x = Formula::var(table.intern(d.name));
        Formula dep = drop_undeclared(d.depends_on, spec, table);
        Formula encl = drop_undeclared(d.enclosing_if, spec, table);

        clauses.push_back(Formula::implication(x, Formula::conjunction({dep, encl})));

        if (d.tristate) {
            Formula xm = Formula::var(table.intern(module_var_name(d.name)));
            clauses.push_back(Formula::implication(xm, x));
            if (has_modules)
                clauses.push_back(Formula::implication(xm, Formula::var(table.intern("MODULES"))));
        }

        for (const auto& sel : d.selected_by) {
            Formula s = Formula::var(table.intern(sel.selector));
            Formula c = drop_undeclared(sel.condition, spec, table);
            clauses.push_back(Formula::implication(Formula::conjunction({s, c}), x));
        }

        if (!d.prompt) {
            std::vector<Formula> sources;
            for (const auto& sel : d.selected_by) {
                Formula s = Formula::var(table.intern(sel.selector));
                Formula c = drop_undeclared(sel.condition, spec, table);
                sources.push_back(Formula::conjunction({s, c}));
            }
            for (const auto& def : d.defaults) {
                if (def.value == 'n') continue;
                Formula c = drop_undeclared(def.condition, spec, table);
                sources.push_back(Formula::conjunction({c, dep, encl}));
            }
            clauses.push_back(Formula::implication(x, Formula::disjunction(sources)));
        }
    }

    Formula out = Formula::conjunction(clauses);
    SolveOutcome check = solve(to_cnf(out), {});
    if (!check.sat)
        throw std::runtime_error("configuration specification is unsatisfiable");
    return out;
}

/// Complete a partial assignment: apply defaults, propagate selects, and
/// drop options whose dependencies fail (simplified `olddefconfig`).
inline Assignment normalize_config(const KconfigSpec& spec, const Assignment& partial,
                                   VarTable& table, Diagnostics* diag = nullptr) {
    using kconfig_detail::drop_undeclared;
    Diagnostics local;
    Diagnostics& dg = diag ? *diag : local;

    Assignment out;
    for (const auto& [name, v] : partial.values) {
        const OptionDecl* d = spec.find(name);
        if (!d) {
            dg.warn("unknown option '" + name + "' dropped");
            continue;
        }
        char val = v;
        if (val == 'm' && !d->tristate) {
            dg.warn("option '" + name + "': value m on bool option coerced to y");
            val = 'y';
        }
        out.values[name] = val;
    }

    // Kconfig expressions reference options by name; an option counts as on
    // for y or m.
    auto var_value = [&](VarId v) -> bool {
        auto it = out.values.find(table.name(v));
        return it != out.values.end() && it->second != 'n';
    };
    auto eval = [&](const Formula& f) {
        return drop_undeclared(f, spec, table).eval(var_value);
    };

    // Defaults, in declaration order: first default whose condition holds.
    for (const auto& d : spec.decls) {
        if (out.values.count(d.name)) continue;
        char val = 'n';
        for (const auto& def : d.defaults) {
            if (eval(def.condition)) {
                val = def.value;
                break;
            }
        }
        out.values[d.name] = val;
    }

    bool has_modules = spec.declared("MODULES");
    auto modules_on = [&]() {
        if (!has_modules) return false;
        auto it = out.values.find("MODULES");
        return it != out.values.end() && it->second != 'n';
    };

    size_t n = spec.decls.size();
    size_t bound = n * n + 1;
    bool stable = false;
    std::string last_changed;
    for (size_t iter = 0; iter < bound && !stable; ++iter) {
        stable = true;
        for (const auto& d : spec.decls) {
            char& val = out.values[d.name];
            bool selected = false;
            for (const auto& sel : d.selected_by) {
                auto it = out.values.find(sel.selector);
                if (it != out.values.end() && it->second != 'n' && eval(sel.condition)) {
                    selected = true;
                    break;
                }
            }
            char want = val;
            if (selected && val == 'n') want = 'y';
            if (!selected && val != 'n' && !(eval(d.depends_on) && eval(d.enclosing_if))) want = 'n';
            if (want == 'm' && !modules_on()) {
                dg.warn("option '" + d.name + "': m without module support, raised to y");
                want = 'y';
            }
            if (want != val) {
                val = want;
                stable = false;
                last_changed = d.name;
            }
        }
    }
    if (!stable)
        throw std::runtime_error("normalize_config did not converge; oscillating option: " + last_changed);

    // Report constraint breakage left behind (select forcing past depends).
    for (const auto& d : spec.decls) {
        char val = out.values[d.name];
        if (val != 'n' && !(eval(d.depends_on) && eval(d.enclosing_if)))
            dg.warn("option '" + d.name + "': selected despite unmet dependencies");
    }

    out.complete = true;
    return out;
}

/// Boolean view of a complete assignment: X and, for tristates, X_MODULE.
inline std::map<VarId, bool> assignment_to_vars(const KconfigSpec& spec, const Assignment& a,
                                                VarTable& table) {
    std::map<VarId, bool> out;
    for (const auto& d : spec.decls) {
        auto it = a.values.find(d.name);
        char v = it == a.values.end() ? 'n' : it->second;
        out[table.intern(d.name)] = v != 'n';
        if (d.tristate) out[table.intern(module_var_name(d.name))] = v == 'm';
    }
    return out;
}

/// Canonical text form; parsing the result reproduces an equal spec.
inline std::string spec_to_text(const KconfigSpec& spec, const VarTable& table) {
    std::string out;
    for (const auto& d : spec.decls) {
        bool wrapped = !d.enclosing_if.is_true();
        if (wrapped) out += "if " + d.enclosing_if.to_infix(table) + "\n";
        out += "config " + d.name + "\n";
        out += d.tristate ? "\ttristate" : "\tbool";
        if (d.prompt) out += " \"" + *d.prompt + "\"";
        out += "\n";
        if (!d.depends_on.is_true()) out += "\tdepends on " + d.depends_on.to_infix(table) + "\n";
        for (const auto& s : d.selects) {
            out += "\tselect " + s.target;
            if (!s.condition.is_true()) out += " if " + s.condition.to_infix(table);
            out += "\n";
        }
        for (const auto& def : d.defaults) {
            out += "\tdefault ";
            out += def.value;
            if (!def.condition.is_true()) out += " if " + def.condition.to_infix(table);
            out += "\n";
        }
        if (wrapped) out += "endif\n";
        out += "\n";
    }
    return out;
}

} // namespace confrepair
