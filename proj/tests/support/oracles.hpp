// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations used to check the real code paths.
// These stay deliberately naive and independent of the library internals.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "confrepair/logic.hpp"
#include "confrepair/patch.hpp"

namespace oracle {

using confrepair::Formula;
using confrepair::VarId;

/// Enumerate all 2^n assignments over `vars`, invoking fn for each. fn
/// returning false stops the walk early.
inline void for_each_assignment(const std::vector<VarId>& vars,
                                const std::function<bool(const std::map<VarId, bool>&)>& fn) {
    if (vars.size() > 24) throw std::runtime_error("oracle: too many variables to enumerate");
    uint64_t total = uint64_t(1) << vars.size();
    for (uint64_t bits = 0; bits < total; ++bits) {
        std::map<VarId, bool> a;
        for (size_t i = 0; i < vars.size(); ++i) a[vars[i]] = (bits >> i) & 1;
        if (!fn(a)) return;
    }
}

inline bool truth_table_sat(const Formula& f, const std::vector<VarId>& vars) {
    bool sat = false;
    for_each_assignment(vars, [&](const std::map<VarId, bool>& a) {
        if (f.eval([&](VarId v) { return a.at(v); })) {
            sat = true;
            return false;
        }
        return true;
    });
    return sat;
}

inline bool truth_table_sat(const Formula& f) { return truth_table_sat(f, f.vars()); }

inline std::vector<std::map<VarId, bool>> all_models(const Formula& f, const std::vector<VarId>& vars) {
    std::vector<std::map<VarId, bool>> models;
    for_each_assignment(vars, [&](const std::map<VarId, bool>& a) {
        if (f.eval([&](VarId v) { return a.at(v); })) models.push_back(a);
        return true;
    });
    return models;
}

/// Random formula tree over the given variables; deterministic per rng state.
inline Formula random_formula(std::mt19937& rng, const std::vector<VarId>& vars, int depth) {
    std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 7);
    switch (kind(rng)) {
    case 0: {
        std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
        return Formula::var(vars[pick(rng)]);
    }
    case 1: {
        std::uniform_int_distribution<size_t> pick(0, vars.size() - 1);
        return Formula::negation(Formula::var(vars[pick(rng)]));
    }
    case 2:
        return Formula::negation(random_formula(rng, vars, depth - 1));
    case 3:
    case 4: {
        std::uniform_int_distribution<int> width(2, 3);
        std::vector<Formula> parts;
        int w = width(rng);
        for (int i = 0; i < w; ++i) parts.push_back(random_formula(rng, vars, depth - 1));
        return Formula::conjunction(parts);
    }
    case 5:
    case 6: {
        std::uniform_int_distribution<int> width(2, 3);
        std::vector<Formula> parts;
        int w = width(rng);
        for (int i = 0; i < w; ++i) parts.push_back(random_formula(rng, vars, depth - 1));
        return Formula::disjunction(parts);
    }
    default:
        return std::uniform_int_distribution<int>(0, 9)(rng) == 0 ? Formula::constant(false)
                                                                  : Formula::constant(true);
    }
}

/// Apply a parsed delta to the old file body, checking context and removed
/// lines against it. The reverse route of the diff parser.
inline std::string apply_delta(const confrepair::FileDelta& delta, const std::string& old_content) {
    std::vector<std::string> old_lines;
    size_t start = 0;
    while (start < old_content.size()) {
        size_t nl = old_content.find('\n', start);
        if (nl == std::string::npos) {
            old_lines.push_back(old_content.substr(start));
            break;
        }
        old_lines.push_back(old_content.substr(start, nl - start));
        start = nl + 1;
    }

    std::string out;
    size_t old_pos = 0; // 0-based next unconsumed old line
    for (const auto& h : delta.hunks) {
        size_t hunk_old = h.old_len == 0 ? static_cast<size_t>(h.old_start)
                                         : static_cast<size_t>(h.old_start) - 1;
        if (hunk_old < old_pos) throw std::runtime_error("hunks overlap");
        while (old_pos < hunk_old && old_pos < old_lines.size()) {
            out += old_lines[old_pos++];
            out += '\n';
        }
        for (const auto& r : h.lines) {
            if (r.tag == '+') {
                out += r.text;
                out += '\n';
                continue;
            }
            if (old_pos >= old_lines.size() || old_lines[old_pos] != r.text)
                throw std::runtime_error("hunk does not match the old file at line " +
                                         std::to_string(old_pos + 1));
            if (r.tag == ' ') {
                out += r.text;
                out += '\n';
            }
            ++old_pos;
        }
    }
    while (old_pos < old_lines.size()) {
        out += old_lines[old_pos++];
        out += '\n';
    }
    return out;
}

} // namespace oracle
