// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "confrepair/diagnostics.hpp"
#include "confrepair/kconfig.hpp"
#include "confrepair/logic.hpp"

namespace confrepair {

enum class GuardKind { Always, Module, Var };

struct Guard {
    GuardKind kind = GuardKind::Always;
    std::string option; // for Var

    friend bool operator==(const Guard& a, const Guard& b) {
        return a.kind == b.kind && a.option == b.option;
    }
};

/// One target occurrence from a Kbuild Makefile, in file order. Targets are
/// relative to the Makefile's directory; subdirectory targets end in '/'.
struct BuildRule {
    std::string target;
    Guard guard;
    std::optional<std::string> composite_parent; // "foo.o" for entries of foo-objs/foo-y

    friend bool operator==(const BuildRule& a, const BuildRule& b) {
        return a.target == b.target && a.guard == b.guard && a.composite_parent == b.composite_parent;
    }
};

namespace kbuild_detail {

inline bool valid_target_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/';
}

struct Lhs {
    bool is_obj = false;        // obj-... vs composite name-...
    std::string composite;      // composite object name ("foo" -> parent foo.o)
    Guard guard;
    bool objs_list = false;     // name-objs
};

inline std::optional<Lhs> parse_lhs(std::string_view lhs) {
    Lhs out;
    std::string_view name;
    if (lhs.ends_with("-objs")) {
        name = lhs.substr(0, lhs.size() - 5);
        out.objs_list = true;
        out.guard = Guard{GuardKind::Always, {}};
    } else if (lhs.ends_with("-y")) {
        name = lhs.substr(0, lhs.size() - 2);
        out.guard = Guard{GuardKind::Always, {}};
    } else if (lhs.ends_with("-m")) {
        name = lhs.substr(0, lhs.size() - 2);
        out.guard = Guard{GuardKind::Module, {}};
    } else if (lhs.ends_with(")")) {
        size_t open = lhs.rfind("-$(CONFIG_");
        if (open == std::string_view::npos) return std::nullopt;
        name = lhs.substr(0, open);
        std::string_view opt = lhs.substr(open + 10, lhs.size() - open - 11);
        if (opt.empty()) return std::nullopt;
        for (char c : opt)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return std::nullopt;
        out.guard = Guard{GuardKind::Var, std::string(opt)};
    } else {
        return std::nullopt;
    }
    if (name.empty()) return std::nullopt;
    out.is_obj = name == "obj";
    if (!out.is_obj) {
        if (out.guard.kind == GuardKind::Module) return std::nullopt; // name-m not in the subset
        out.composite = std::string(name);
    } else if (out.objs_list) {
        return std::nullopt; // obj-objs is meaningless
    }
    return out;
}

} // namespace kbuild_detail

/// Parse the Makefile (or Kbuild) of one directory into build rules. A
/// missing file yields an empty rule list; anything outside the supported
/// grammar is rejected with a position, never skipped.
inline std::vector<BuildRule> parse_kbuild(const std::string& dir, const FileLoader& load = disk_loader()) {
    std::string path = dir + "/Makefile";
    std::optional<std::string> content = load(path);
    if (!content) {
        path = dir + "/Kbuild";
        content = load(path);
    }
    if (!content) return {};

    std::vector<BuildRule> rules;
    std::vector<std::pair<int, std::string>> logical; // (first line number, joined text)
    {
        int lineno = 0;
        std::string pending;
        int pending_start = 0;
        size_t pos = 0;
        while (pos <= content->size()) {
            size_t nl = content->find('\n', pos);
            std::string line = nl == std::string::npos ? content->substr(pos)
                                                       : content->substr(pos, nl - pos);
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            bool cont = !line.empty() && line.back() == '\\';
            if (cont) line.pop_back();
            if (pending.empty()) pending_start = lineno;
            pending += line;
            if (cont) {
                pending += ' ';
            } else {
                logical.emplace_back(pending_start, pending);
                pending.clear();
            }
            if (nl == std::string::npos) break;
            pos = nl + 1;
        }
        if (!pending.empty()) logical.emplace_back(pending_start, pending);
    }

    for (auto& [lineno, text] : logical) {
        size_t hash = text.find('#');
        if (hash != std::string::npos) text.resize(hash);
        std::string_view line = kconfig_detail::trim(text);
        if (line.empty()) continue;

        size_t op_pos = line.find(":=");
        size_t op_len = 2;
        if (size_t plus = line.find("+="); plus != std::string_view::npos && (op_pos == std::string_view::npos || plus < op_pos)) {
            op_pos = plus;
        }
        if (op_pos == std::string_view::npos) {
            op_pos = line.find('=');
            op_len = 1;
        }
        if (op_pos == std::string_view::npos)
            throw ParseError(path, lineno, "unsupported construct: '" + std::string(line) + "'");

        std::string_view lhs = kconfig_detail::trim(line.substr(0, op_pos));
        std::string_view rhs = kconfig_detail::trim(line.substr(op_pos + op_len));

        auto parsed = kbuild_detail::parse_lhs(lhs);
        if (!parsed)
            throw ParseError(path, lineno, "unsupported assignment target: '" + std::string(lhs) + "'");

        size_t i = 0;
        while (i < rhs.size()) {
            while (i < rhs.size() && (rhs[i] == ' ' || rhs[i] == '\t')) ++i;
            size_t start = i;
            while (i < rhs.size() && rhs[i] != ' ' && rhs[i] != '\t') ++i;
            if (i == start) break;
            std::string target(rhs.substr(start, i - start));
            for (char c : target)
                if (!kbuild_detail::valid_target_char(c))
                    throw ParseError(path, lineno, "unsupported target syntax: '" + target + "'");
            bool subdir = target.ends_with('/');
            bool object = target.ends_with(".o");
            if (!subdir && !object)
                throw ParseError(path, lineno, "target is neither an object nor a subdirectory: '" + target + "'");
            if (!parsed->is_obj && !object)
                throw ParseError(path, lineno, "composite list entry must be an object: '" + target + "'");
            BuildRule r;
            r.target = std::move(target);
            r.guard = parsed->guard;
            if (!parsed->is_obj) r.composite_parent = parsed->composite + ".o";
            rules.push_back(std::move(r));
        }
    }
    return rules;
}

struct FilePresence {
    Formula pc;
    bool referenced = false; // false: no rule anywhere builds this file
};

struct FilePresenceMap {
    std::map<std::string, Formula> by_path;
    std::map<std::string, std::string> makefile_digests;
};

namespace kbuild_detail {

inline Formula guard_formula(const Guard& g, const KconfigSpec& spec, VarTable& table,
                             Diagnostics* diag) {
    switch (g.kind) {
    case GuardKind::Always:
        return Formula::truth();
    case GuardKind::Module:
        if (!spec.declared("MODULES")) {
            if (diag) diag->warn("obj-m rule without a declared MODULES option is never built");
            return Formula::falsity();
        }
        return Formula::var(table.intern("MODULES"));
    case GuardKind::Var:
        if (!spec.declared(g.option)) {
            if (diag) diag->warn("rule guarded by undeclared option '" + g.option + "' is never built");
            return Formula::falsity();
        }
        return Formula::var(table.intern(g.option));
    }
    return Formula::falsity();
}

/// Presence of `object` among this directory's rules: direct rules take
/// their guard, composite entries conjoin the parent object's presence.
inline Formula object_presence(const std::vector<BuildRule>& rules, const std::string& object,
                               const KconfigSpec& spec, VarTable& table, Diagnostics* diag,
                               std::set<std::string>& visiting) {
    if (visiting.count(object)) return Formula::falsity(); // composite cycle
    visiting.insert(object);
    std::vector<Formula> alternatives;
    for (const auto& r : rules) {
        if (r.target != object) continue;
        Formula g = guard_formula(r.guard, spec, table, diag);
        if (r.composite_parent) {
            Formula parent = object_presence(rules, *r.composite_parent, spec, table, diag, visiting);
            g = Formula::conjunction({g, parent});
        }
        alternatives.push_back(g);
    }
    visiting.erase(object);
    return Formula::disjunction(alternatives);
}

inline std::vector<std::string> split_path(std::string_view rel, bool& ok) {
    std::vector<std::string> parts;
    ok = true;
    size_t start = 0;
    while (start <= rel.size()) {
        size_t slash = rel.find('/', start);
        std::string_view part =
            slash == std::string_view::npos ? rel.substr(start) : rel.substr(start, slash - start);
        if (part.empty() || part == "." || part == "..") {
            ok = false;
            return parts;
        }
        parts.emplace_back(part);
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return parts;
}

} // namespace kbuild_detail

/// Presence condition of a compilation unit: conjunction of the subdirectory
/// guards from the tree root down plus the file's own object rule guards.
/// `rel_path` is tree-relative and normalized.
inline FilePresence file_presence(const std::string& tree_root, const std::string& rel_path,
                                  const KconfigSpec& spec, VarTable& table,
                                  const FileLoader& load = disk_loader(),
                                  Diagnostics* diag = nullptr) {
    if (!rel_path.ends_with(".c"))
        throw std::invalid_argument("file_presence: not a compilation unit: " + rel_path);
    bool ok = false;
    std::vector<std::string> parts = kbuild_detail::split_path(rel_path, ok);
    if (!ok || parts.empty())
        throw std::invalid_argument("file_presence: path escapes the tree: " + rel_path);

    std::vector<Formula> chain;
    std::string dir = tree_root;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        std::vector<BuildRule> rules = parse_kbuild(dir, load);
        std::string sub = parts[i] + "/";
        std::vector<Formula> edges;
        for (const auto& r : rules)
            if (r.target == sub)
                edges.push_back(kbuild_detail::guard_formula(r.guard, spec, table, diag));
        if (edges.empty()) return FilePresence{Formula::falsity(), false};
        chain.push_back(Formula::disjunction(edges));
        dir += "/" + parts[i];
    }

    std::vector<BuildRule> rules = parse_kbuild(dir, load);
    std::string object = parts.back().substr(0, parts.back().size() - 2) + ".o";
    bool mentioned = false;
    for (const auto& r : rules)
        if (r.target == object) mentioned = true;
    if (!mentioned) return FilePresence{Formula::falsity(), false};

    std::set<std::string> visiting;
    Formula own = kbuild_detail::object_presence(rules, object, spec, table, diag, visiting);
    chain.push_back(own);
    return FilePresence{Formula::conjunction(chain), true};
}

} // namespace confrepair
