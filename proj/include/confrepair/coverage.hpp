// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "confrepair/config_file.hpp"
#include "confrepair/constraints.hpp"
#include "confrepair/patch.hpp"

namespace confrepair {

struct PairCoverage {
    PatchPair pair;
    bool covered = false;
    std::string reason; // covered | file-excluded | line-excluded
};

struct CoverageReport {
    long total_lines = 0;
    long covered_lines = 0;
    double ratio = 1.0;
    bool empty_patch = false;
    std::vector<PairCoverage> per_pair;
    std::vector<PatchPair> header_note; // pairs evaluated via a proxy unit

    friend bool operator==(const CoverageReport& a, const CoverageReport& b) {
        if (a.total_lines != b.total_lines || a.covered_lines != b.covered_lines ||
            a.empty_patch != b.empty_patch || a.per_pair.size() != b.per_pair.size())
            return false;
        for (size_t i = 0; i < a.per_pair.size(); ++i)
            if (!(a.per_pair[i].pair == b.per_pair[i].pair) ||
                a.per_pair[i].covered != b.per_pair[i].covered ||
                a.per_pair[i].reason != b.per_pair[i].reason)
                return false;
        return true;
    }
};

/// Patch coverage of one configuration, evaluated symbolically: the file's
/// presence condition and the line's condition must hold under the
/// normalized assignment. Free variables from unknown tokens stay
/// existential.
inline CoverageReport measure_coverage(const PatchLineSet& pairs, const ConfigFile& config,
                                       ConstraintBundle& bundle, Diagnostics* diag = nullptr) {
    const KconfigSpec& spec = bundle.spec();
    VarTable& table = bundle.table();

    Assignment values = normalize_config(spec, config_to_assignment(spec, config, diag),
                                         table, diag);
    std::unordered_map<VarId, bool, VarIdHash> fixed;
    for (const auto& [v, b] : assignment_to_vars(spec, values, table)) fixed.emplace(v, b);

    auto holds = [&](const Formula& f) {
        Formula residual = f.partial_eval(fixed);
        if (residual.is_true()) return true;
        if (residual.is_false()) return false;
        return solve(to_cnf(residual), {}, &bundle.stats().solver).sat;
    };

    CoverageReport report;
    report.total_lines = static_cast<long>(pairs.pairs.size());
    for (const PatchPair& pair : pairs.pairs) {
        if (!bundle.file_exists(pair.file))
            throw std::runtime_error("file missing from tree: " + pair.file);
        PairCoverage pc;
        pc.pair = pair;
        if (!holds(bundle.file_pc(pair.file))) {
            pc.covered = false;
            pc.reason = "file-excluded";
        } else if (!pair.file_level_only &&
                   !holds(line_condition(bundle.block_tree(pair.file), pair.line).pc)) {
            pc.covered = false;
            pc.reason = "line-excluded";
        } else {
            pc.covered = true;
            pc.reason = "covered";
        }
        if (pc.covered) ++report.covered_lines;
        if (pair.file_level_only) report.header_note.push_back(pair);
        report.per_pair.push_back(std::move(pc));
    }
    if (report.total_lines == 0) {
        report.empty_patch = true;
        report.ratio = 1.0;
    } else {
        report.ratio = static_cast<double>(report.covered_lines) /
                       static_cast<double>(report.total_lines);
    }
    return report;
}

/// Union coverage across several reports over the same patch-line set.
inline CoverageReport aggregate_coverage(const std::vector<CoverageReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate_coverage: no reports");
    CoverageReport out = reports.front();
    for (size_t r = 1; r < reports.size(); ++r) {
        const CoverageReport& other = reports[r];
        if (other.per_pair.size() != out.per_pair.size())
            throw std::invalid_argument("aggregate_coverage: mismatched pair sets");
        for (size_t i = 0; i < out.per_pair.size(); ++i) {
            if (!(other.per_pair[i].pair == out.per_pair[i].pair))
                throw std::invalid_argument("aggregate_coverage: mismatched pair sets");
            if (other.per_pair[i].covered && !out.per_pair[i].covered) {
                out.per_pair[i].covered = true;
                out.per_pair[i].reason = "covered";
            }
        }
    }
    out.covered_lines = 0;
    for (const auto& pc : out.per_pair)
        if (pc.covered) ++out.covered_lines;
    out.ratio = out.total_lines == 0 ? 1.0
                                     : static_cast<double>(out.covered_lines) /
                                           static_cast<double>(out.total_lines);
    return out;
}

/// Key/value summary plus a per-pair table, stable across runs.
inline std::string coverage_to_text(const CoverageReport& r) {
    std::string out;
    out += "total_lines: " + std::to_string(r.total_lines) + "\n";
    out += "covered_lines: " + std::to_string(r.covered_lines) + "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.ratio);
    out += "ratio: " + std::string(buf) + "\n";
    out += "empty_patch: " + std::string(r.empty_patch ? "true" : "false") + "\n";
    for (const auto& pc : r.per_pair) {
        out += pc.pair.file + ":" + std::to_string(pc.pair.line);
        if (pc.pair.file_level_only) out += " (file-level)";
        out += "  " + pc.reason + "\n";
    }
    return out;
}

} // namespace confrepair
