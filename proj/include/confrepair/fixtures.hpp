// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "confrepair/kbuild.hpp"
#include "confrepair/kconfig.hpp"

namespace confrepair::fixtures {

// ---------------------------------------------------------------------------
// Naive simulation oracle. Decides inclusion for one concrete assignment by
// walking build rules and replaying the preprocessor directly; it shares no
// code with the presence-condition construction it is used to check.
// ---------------------------------------------------------------------------

using ValueFn = std::function<char(const std::string&)>; // option -> 'y'|'m'|'n'

namespace oracle_detail {

struct ConcreteEval {
    const KconfigSpec& spec;
    const ValueFn& value;

    char option(const std::string& macro_ident) const {
        if (!macro_ident.starts_with("CONFIG_")) return '?';
        std::string opt = macro_ident.substr(7);
        if (!spec.declared(opt)) return 'n';
        return value(opt);
    }

    static void skip(std::string_view s, size_t& i) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    static std::string ident(std::string_view s, size_t& i) {
        size_t b = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
        return std::string(s.substr(b, i - b));
    }

    bool parse_or(std::string_view s, size_t& i) const {
        bool v = parse_and(s, i);
        skip(s, i);
        while (i + 1 < s.size() && s[i] == '|' && s[i + 1] == '|') {
            i += 2;
            bool r = parse_and(s, i);
            v = v || r;
            skip(s, i);
        }
        return v;
    }
    bool parse_and(std::string_view s, size_t& i) const {
        bool v = parse_not(s, i);
        skip(s, i);
        while (i + 1 < s.size() && s[i] == '&' && s[i + 1] == '&') {
            i += 2;
            bool r = parse_not(s, i);
            v = v && r;
            skip(s, i);
        }
        return v;
    }
    bool parse_not(std::string_view s, size_t& i) const {
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
            size_t save = i;
            bool paren = i < s.size() && s[i] == '(';
            if (paren) ++i;
            skip(s, i);
            std::string arg = ident(s, i);
            skip(s, i);
            if (paren) {
                if (i < s.size() && s[i] == ')') ++i;
                else i = save;
            }
            char v = option(arg);
            return v == 'y' || v == 'm';
        }
        if (name == "IS_ENABLED" || name == "IS_BUILTIN" || name == "IS_MODULE") {
            if (i < s.size() && s[i] == '(') ++i;
            skip(s, i);
            std::string arg = ident(s, i);
            skip(s, i);
            if (i < s.size() && s[i] == ')') ++i;
            char v = option(arg);
            if (name == "IS_ENABLED") return v == 'y' || v == 'm';
            if (name == "IS_BUILTIN") return v == 'y';
            return v == 'm';
        }
        return false; // unknown atoms are never on in a concrete build
    }
};

} // namespace oracle_detail

/// Per-line inclusion (1-based; index 0 unused) by replaying the directives
/// for one concrete assignment. Directive lines count as included when the
/// surrounding block is active.
inline std::vector<bool> naive_line_included(const std::string& text, const KconfigSpec& spec,
                                             const ValueFn& value) {
    std::vector<std::string> lines;
    if (!text.empty()) {
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
    }

    oracle_detail::ConcreteEval ev{spec, value};
    struct Frame {
        bool parent_active;
        bool taken;
        bool active;
    };
    std::vector<Frame> stack;
    std::vector<bool> included(lines.size() + 1, false);
    auto active_now = [&]() {
        return stack.empty() || (stack.back().parent_active && stack.back().active);
    };

    for (size_t k = 0; k < lines.size(); ++k) {
        std::string_view l = lines[k];
        size_t i = 0;
        oracle_detail::ConcreteEval::skip(l, i);
        if (i >= l.size() || l[i] != '#') {
            included[k + 1] = active_now();
            continue;
        }
        ++i;
        oracle_detail::ConcreteEval::skip(l, i);
        std::string kw = oracle_detail::ConcreteEval::ident(l, i);
        if (kw == "if" || kw == "ifdef" || kw == "ifndef") {
            bool parent = active_now();
            included[k + 1] = parent;
            bool cond;
            if (kw == "if") {
                cond = ev.parse_or(l, i);
            } else {
                oracle_detail::ConcreteEval::skip(l, i);
                char v = ev.option(oracle_detail::ConcreteEval::ident(l, i));
                bool defined = v == 'y' || v == 'm';
                cond = kw == "ifdef" ? defined : !defined;
            }
            stack.push_back(Frame{parent, cond, cond});
        } else if (kw == "elif" && !stack.empty()) {
            included[k + 1] = stack.back().parent_active;
            bool cond = ev.parse_or(l, i);
            bool act = !stack.back().taken && cond;
            stack.back().active = act;
            stack.back().taken = stack.back().taken || act;
        } else if (kw == "else" && !stack.empty()) {
            included[k + 1] = stack.back().parent_active;
            stack.back().active = !stack.back().taken;
            stack.back().taken = true;
        } else if (kw == "endif" && !stack.empty()) {
            included[k + 1] = stack.back().parent_active;
            stack.pop_back();
        } else {
            included[k + 1] = active_now();
        }
    }
    return included;
}

/// Whether one concrete assignment builds the compilation unit at all:
/// follows subdirectory rules from the root and the object rules in the
/// file's directory, including composite parents.
inline bool naive_file_included(const std::string& tree_root, const std::string& rel,
                                const KconfigSpec& spec, const ValueFn& value,
                                const FileLoader& load = disk_loader()) {
    auto guard_on = [&](const Guard& g) {
        switch (g.kind) {
        case GuardKind::Always: return true;
        case GuardKind::Module: return spec.declared("MODULES") && value("MODULES") != 'n';
        case GuardKind::Var: return spec.declared(g.option) && value(g.option) != 'n';
        }
        return false;
    };

    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t slash = rel.find('/', start);
        if (slash == std::string::npos) {
            parts.push_back(rel.substr(start));
            break;
        }
        parts.push_back(rel.substr(start, slash - start));
        start = slash + 1;
    }

    std::string dir = tree_root;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        bool entered = false;
        for (const auto& r : parse_kbuild(dir, load))
            if (r.target == parts[i] + "/" && guard_on(r.guard)) entered = true;
        if (!entered) return false;
        dir += "/" + parts[i];
    }
    auto rules = parse_kbuild(dir, load);
    std::function<bool(const std::string&, int)> obj_on = [&](const std::string& obj, int depth) {
        if (depth > 8) return false;
        for (const auto& r : rules) {
            if (r.target != obj || !guard_on(r.guard)) continue;
            if (!r.composite_parent) return true;
            if (obj_on(*r.composite_parent, depth + 1)) return true;
        }
        return false;
    };
    return obj_on(parts.back().substr(0, parts.back().size() - 2) + ".o", 0);
}

// ---------------------------------------------------------------------------
// Unified diff writer. The generator constructs edit scripts directly, so no
// diff algorithm is involved; the script is the alignment.
// ---------------------------------------------------------------------------

struct ScriptLine {
    char tag = ' '; // ' ' both, '-' old only, '+' new only
    std::string text;
};

inline std::string render_unified_diff(const std::string& old_label, const std::string& new_label,
                                       const std::vector<ScriptLine>& script, int context = 3) {
    std::string out = "--- " + old_label + "\n+++ " + new_label + "\n";
    size_t n = script.size();
    size_t i = 0;
    // old/new line numbers of script[i] (1-based position of next record)
    std::vector<int> old_no(n + 1), new_no(n + 1);
    int o = 1, w = 1;
    for (size_t k = 0; k < n; ++k) {
        old_no[k] = o;
        new_no[k] = w;
        if (script[k].tag != '+') ++o;
        if (script[k].tag != '-') ++w;
    }
    old_no[n] = o;
    new_no[n] = w;

    while (i < n) {
        while (i < n && script[i].tag == ' ') ++i;
        if (i >= n) break;
        size_t from = i >= static_cast<size_t>(context) ? i - context : 0;
        size_t to = i;
        size_t gap = 0;
        for (size_t k = i; k < n; ++k) {
            if (script[k].tag == ' ') {
                ++gap;
                if (gap > static_cast<size_t>(2 * context)) break;
            } else {
                gap = 0;
                to = k + 1;
            }
        }
        size_t end = std::min(n, to + context);
        int old_start = old_no[from], old_len = old_no[end] - old_no[from];
        int new_start = new_no[from], new_len = new_no[end] - new_no[from];
        if (old_len == 0) old_start = old_no[from] - 1;
        if (new_len == 0) new_start = new_no[from] - 1;
        out += "@@ -" + std::to_string(old_start) + "," + std::to_string(old_len) + " +" +
               std::to_string(new_start) + "," + std::to_string(new_len) + " @@\n";
        for (size_t k = from; k < end; ++k) {
            out += script[k].tag;
            out += script[k].text;
            out += '\n';
        }
        i = end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random fixture generation: a miniature tree, an applied patch, and an
// input configuration, all deterministic per seed.
// ---------------------------------------------------------------------------

struct FixtureParams {
    int max_options = 9;   // total boolean variables stay enumerable
    int max_dirs = 3;
    int max_files_per_dir = 2;
    int max_cpp_depth = 2;
    bool allow_tristate = true;
    bool with_file_edge_cases = false; // add/delete/rename deltas in the patch
};

struct FixtureTree {
    uint64_t seed = 0;
    std::map<std::string, std::string> files; // tree-relative path -> content
    std::string kconfig_root = "Kconfig";
    std::string patch_text;
    std::string config_text;
    std::vector<std::string> option_names;

    FileLoader loader(const std::string& root) const {
        auto copy = files;
        return [copy, root](const std::string& path) -> std::optional<std::string> {
            if (!path.starts_with(root + "/")) return std::nullopt;
            auto it = copy.find(path.substr(root.size() + 1));
            if (it == copy.end()) return std::nullopt;
            return it->second;
        };
    }
};

inline FixtureTree generate_random_fixture(uint64_t seed, FixtureParams params = {}) {
    std::mt19937 rng(static_cast<uint32_t>(seed ^ (seed >> 32) ^ 0x5eedu));
    auto coin = [&](int pct) { return std::uniform_int_distribution<int>(0, 99)(rng) < pct; };
    auto pick = [&](int hi) { return std::uniform_int_distribution<int>(0, hi - 1)(rng); };

    FixtureTree out;
    out.seed = seed;

    // --- configuration options ---
    int n_opts = 3 + pick(std::max(1, params.max_options - 3));
    std::vector<bool> tristate(n_opts, false);
    bool any_tristate = false;
    for (int i = 0; i < n_opts; ++i) {
        tristate[i] = params.allow_tristate && coin(20);
        any_tristate = any_tristate || tristate[i];
    }
    std::string ktext;
    if (any_tristate) {
        ktext += "config MODULES\n\tbool \"module support\"\n\n";
        out.option_names.push_back("MODULES");
    }
    for (int i = 0; i < n_opts; ++i) {
        std::string name = "OPT" + std::to_string(i);
        out.option_names.push_back(name);
        bool iffed = i > 0 && coin(15);
        if (iffed) ktext += "if OPT" + std::to_string(pick(i)) + "\n";
        ktext += "config " + name + "\n";
        ktext += tristate[i] ? "\ttristate" : "\tbool";
        if (coin(65)) ktext += " \"" + name + "\"";
        ktext += "\n";
        if (i > 0 && coin(40)) {
            std::string dep = "OPT" + std::to_string(pick(i));
            if (coin(25)) dep = "!" + dep;
            ktext += "\tdepends on " + dep + "\n";
        }
        if (i > 0 && coin(30)) {
            ktext += "\tselect OPT" + std::to_string(pick(i));
            if (coin(35)) ktext += " if OPT" + std::to_string(pick(i));
            ktext += "\n";
        }
        if (coin(35)) {
            ktext += "\tdefault ";
            ktext += tristate[i] && coin(25) ? 'm' : (coin(70) ? 'y' : 'n');
            if (i > 0 && coin(40)) ktext += " if OPT" + std::to_string(pick(i));
            ktext += "\n";
        }
        if (iffed) ktext += "endif\n";
        ktext += "\n";
    }
    out.files["Kconfig"] = ktext;

    auto opt_name = [&](int i) { return "OPT" + std::to_string(i); };
    auto random_guard = [&]() -> std::string {
        int r = pick(10);
        if (r < 5) return "obj-y";
        if (r < 6 && any_tristate) return "obj-m";
        return "obj-$(CONFIG_" + opt_name(pick(n_opts)) + ")";
    };

    // --- directory chain with makefiles and sources ---
    int n_dirs = 1 + pick(params.max_dirs);
    std::vector<std::string> dirs{""};
    std::string cur;
    for (int d = 1; d < n_dirs; ++d) {
        cur += "sub" + std::to_string(d) + "/";
        dirs.push_back(cur);
    }

    auto random_atom = [&](int opt) -> std::string {
        int r = pick(tristate[opt] ? 4 : 2);
        std::string n = "CONFIG_" + opt_name(opt);
        if (r == 0) return "defined(" + n + ")";
        if (r == 1) return "IS_ENABLED(" + n + ")";
        if (r == 2) return "IS_MODULE(" + n + ")";
        return "IS_BUILTIN(" + n + ")";
    };

    std::vector<std::string> units;
    int file_counter = 0;
    for (size_t d = 0; d < dirs.size(); ++d) {
        std::string mk;
        if (d + 1 < dirs.size()) mk += random_guard() + " += sub" + std::to_string(d + 1) + "/\n";
        int n_files = 1 + pick(params.max_files_per_dir);
        for (int f = 0; f < n_files; ++f) {
            std::string base = "unit" + std::to_string(file_counter++);
            std::string rel = dirs[d] + base + ".c";
            bool referenced = coin(90);
            if (referenced) {
                if (coin(20)) {
                    mk += base + "-objs := " + base + "_part.o\n";
                    mk += random_guard() + " += " + base + ".o\n";
                    rel = dirs[d] + base + "_part.c";
                } else {
                    mk += random_guard() + " += " + base + ".o\n";
                    if (coin(15)) mk += random_guard() + " += " + base + ".o\n";
                }
            }

            std::string src;
            int line_budget = 6 + pick(10);
            std::function<void(int)> emit = [&](int depth) {
                while (line_budget > 0) {
                    --line_budget;
                    if (depth < params.max_cpp_depth && coin(30)) {
                        std::string guard;
                        if (coin(6)) guard = "0";
                        else {
                            guard = random_atom(pick(n_opts));
                            if (coin(25)) guard = "!" + guard;
                            if (coin(25)) guard += (coin(50) ? " && " : " || ") + random_atom(pick(n_opts));
                        }
                        src += "#if " + guard + "\n";
                        emit(depth + 1);
                        if (coin(35)) {
                            src += "#else\n";
                            emit(depth + 1);
                        }
                        src += "#endif\n";
                    } else {
                        src += "int filler_" + std::to_string(pick(100000)) + "_l;\n";
                        if (coin(35)) return;
                    }
                }
            };
            emit(0);
            out.files[rel] = src;
            units.push_back(rel);
        }
        out.files[dirs[d] + "Makefile"] = mk;
    }

    // --- patch: the tree above is the after state ---
    std::string patch;
    int n_edit = 1 + pick(std::min<int>(2, units.size()));
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < n_edit) {
        int u = pick(units.size());
        if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
    }
    std::sort(chosen.begin(), chosen.end());
    for (int u : chosen) {
        const std::string& rel = units[u];
        const std::string& content = out.files[rel];
        std::vector<std::string> new_lines;
        size_t start = 0;
        while (start < content.size()) {
            size_t nl = content.find('\n', start);
            new_lines.push_back(content.substr(start, nl - start));
            start = nl + 1;
        }
        std::vector<ScriptLine> script;
        bool changed = false;
        for (size_t k = 0; k < new_lines.size(); ++k) {
            if (coin(12)) {
                script.push_back(ScriptLine{'-', "int removed_" + std::to_string(pick(1000)) + ";"});
                changed = true;
            }
            bool added = coin(15);
            script.push_back(ScriptLine{added ? '+' : ' ', new_lines[k]});
            changed = changed || added;
        }
        if (!changed && !new_lines.empty()) {
            size_t k = pick(new_lines.size());
            script.insert(script.begin() + k,
                          ScriptLine{'-', "int removed_tail;"});
        }
        patch += "diff --git a/" + rel + " b/" + rel + "\n";
        patch += render_unified_diff("a/" + rel, "b/" + rel, script, 2);
    }

    if (params.with_file_edge_cases) {
        if (coin(50)) { // added file
            std::string rel = "added_extra.c";
            std::string body = "int fresh_one;\nint fresh_two;\n";
            out.files[rel] = body;
            std::string mkroot = out.files["Makefile"];
            out.files["Makefile"] = mkroot + random_guard() + " += added_extra.o\n";
            patch += "diff --git a/" + rel + " b/" + rel + "\nnew file mode 100644\n";
            std::vector<ScriptLine> script{{'+', "int fresh_one;"}, {'+', "int fresh_two;"}};
            patch += render_unified_diff("/dev/null", "b/" + rel, script, 2);
        }
        if (coin(50)) { // deleted file (only in the before state)
            std::string rel = "gone.c";
            patch += "diff --git a/" + rel + " b/" + rel + "\ndeleted file mode 100644\n";
            std::vector<ScriptLine> script{{'-', "int was_here;"}};
            patch += render_unified_diff("a/" + rel, "/dev/null", script, 2);
        }
        if (coin(50)) { // rename only
            patch += "diff --git a/old_name.c b/renamed_name.c\n";
            patch += "similarity index 100%\nrename from old_name.c\nrename to renamed_name.c\n";
            out.files["renamed_name.c"] = "int renamed;\n";
        }
    }
    out.patch_text = patch;

    // --- input configuration ---
    std::string cfg;
    for (int i = 0; i < n_opts; ++i) {
        int r = pick(4);
        if (r == 0) continue; // absent
        std::string name = "CONFIG_" + opt_name(i);
        if (r == 1) cfg += "# " + name + " is not set\n";
        else if (r == 2 || !tristate[i]) cfg += name + "=y\n";
        else cfg += name + "=m\n";
    }
    if (any_tristate && coin(70)) cfg += "CONFIG_MODULES=y\n";
    out.config_text = cfg;
    return out;
}

/// Materialize on disk: tree under <dir>/tree, patch and config beside it.
inline void write_fixture(const FixtureTree& fx, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "tree");
    for (const auto& [rel, content] : fx.files) {
        fs::path p = dir / "tree" / rel;
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
    }
    std::ofstream(dir / "patch.diff", std::ios::binary) << fx.patch_text;
    std::ofstream(dir / "input.config", std::ios::binary) << fx.config_text;
}

} // namespace confrepair::fixtures
