// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confrepair/diagnostics.hpp"
#include "confrepair/kconfig.hpp"

namespace confrepair {

/// A configuration file as written: boolean entries in file order plus
/// verbatim non-boolean lines. Absent options are absent, not n.
struct ConfigFile {
    struct BoolEntry {
        std::string name;
        char value = 'n'; // 'y' | 'm' | 'n'
    };
    std::vector<BoolEntry> bool_entries;
    std::vector<std::string> passthrough; // verbatim CONFIG_...=<non-boolean> lines
    std::string provenance;

    std::optional<char> value_of(std::string_view name) const {
        std::optional<char> out;
        for (const auto& e : bool_entries)
            if (e.name == name) out = e.value; // last entry wins
        return out;
    }
};

namespace config_detail {

inline bool valid_option_name(std::string_view n) {
    if (n.empty()) return false;
    for (char c : n)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

} // namespace config_detail

inline ConfigFile parse_config(const std::string& text, const std::string& provenance = "<config>") {
    ConfigFile out;
    out.provenance = provenance;
    size_t start = 0;
    int lineno = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        std::string_view line = nl == std::string::npos
                                    ? std::string_view(text).substr(start)
                                    : std::string_view(text).substr(start, nl - start);
        ++lineno;
        start = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string_view trimmed = kconfig_detail::trim(line);
        if (trimmed.empty()) continue;

        if (trimmed.front() == '#') {
            // `# CONFIG_X is not set` carries a value; other comments do not
            std::string_view rest = kconfig_detail::trim(trimmed.substr(1));
            if (rest.starts_with("CONFIG_") && rest.ends_with(" is not set")) {
                std::string_view name = rest.substr(7, rest.size() - 7 - 11);
                if (!config_detail::valid_option_name(name))
                    throw ParseError(provenance, lineno, "bad option name in: '" + std::string(line) + "'");
                out.bool_entries.push_back({std::string(name), 'n'});
            }
            continue;
        }
        if (trimmed.starts_with("CONFIG_")) {
            size_t eq = trimmed.find('=');
            if (eq == std::string_view::npos)
                throw ParseError(provenance, lineno, "expected '=' in: '" + std::string(line) + "'");
            std::string_view name = trimmed.substr(7, eq - 7);
            std::string_view value = trimmed.substr(eq + 1);
            if (!config_detail::valid_option_name(name))
                throw ParseError(provenance, lineno, "bad option name in: '" + std::string(line) + "'");
            if (value == "y") out.bool_entries.push_back({std::string(name), 'y'});
            else if (value == "m") out.bool_entries.push_back({std::string(name), 'm'});
            else if (value == "n") out.bool_entries.push_back({std::string(name), 'n'});
            else out.passthrough.emplace_back(trimmed);
            continue;
        }
        throw ParseError(provenance, lineno, "unrecognized line: '" + std::string(line) + "'");
    }
    return out;
}

/// Boolean entries restricted to declared bool/tristate options.
inline Assignment config_to_assignment(const KconfigSpec& spec, const ConfigFile& config,
                                       Diagnostics* diag = nullptr) {
    Assignment out;
    for (const auto& e : config.bool_entries) {
        const OptionDecl* d = spec.find(e.name);
        if (!d) {
            if (diag) diag->warn("config option '" + e.name + "' is not declared; dropped");
            continue;
        }
        char v = e.value;
        if (v == 'm' && !d->tristate) {
            if (diag) diag->warn("option '" + e.name + "': m on a bool option coerced to y");
            v = 'y';
        }
        out.values[e.name] = v; // later entries override earlier ones
    }
    return out;
}

/// Render a complete assignment in the build system's format: options in
/// declaration order, then the original file's verbatim entries.
inline std::string deparse_config(const KconfigSpec& spec, const Assignment& values,
                                  const ConfigFile& original) {
    std::string out;
    for (const auto& d : spec.decls) {
        auto it = values.values.find(d.name);
        char v = it == values.values.end() ? 'n' : it->second;
        if (v == 'n') out += "# CONFIG_" + d.name + " is not set\n";
        else out += "CONFIG_" + d.name + "=" + std::string(1, v) + "\n";
    }
    for (const auto& p : original.passthrough) {
        out += p;
        out += '\n';
    }
    return out;
}

/// Fraction of declared bool/tristate options whose value differs, absent
/// read as n.
inline double config_diff(const ConfigFile& a, const ConfigFile& b, const KconfigSpec& spec) {
    if (spec.decls.empty()) return 0.0;
    long differing = 0;
    for (const auto& d : spec.decls) {
        char va = a.value_of(d.name).value_or('n');
        char vb = b.value_of(d.name).value_or('n');
        if (va == 'm' && !d.tristate) va = 'y';
        if (vb == 'm' && !d.tristate) vb = 'y';
        if (va != vb) ++differing;
    }
    return static_cast<double>(differing) / static_cast<double>(spec.decls.size());
}

} // namespace confrepair
