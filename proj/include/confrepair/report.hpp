// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "confrepair/constraints.hpp"
#include "confrepair/coverage.hpp"
#include "confrepair/repair.hpp"
#include "confrepair/version.hpp"

namespace confrepair {

using ordered_json = nlohmann::ordered_json;

inline ordered_json pair_json(const PatchPair& p) {
    ordered_json j;
    j["file"] = p.file;
    j["line"] = p.line;
    j["file_level_only"] = p.file_level_only;
    return j;
}

inline ordered_json coverage_json(const CoverageReport& r) {
    ordered_json j;
    j["total_lines"] = r.total_lines;
    j["covered_lines"] = r.covered_lines;
    j["ratio"] = r.ratio;
    j["empty_patch"] = r.empty_patch;
    ordered_json per = ordered_json::array();
    for (const auto& pc : r.per_pair) {
        ordered_json e = pair_json(pc.pair);
        e["covered"] = pc.covered;
        e["reason"] = pc.reason;
        per.push_back(std::move(e));
    }
    j["per_pair"] = std::move(per);
    ordered_json notes = ordered_json::array();
    for (const auto& p : r.header_note) notes.push_back(pair_json(p));
    j["header_note"] = std::move(notes);
    return j;
}

/// The repair run report: enough to recompute the coverage ratio, the
/// number of configurations, and the change ratio offline.
inline ordered_json repair_report_json(const std::string& tree_id, const PatchLineSet& pairs,
                                       const RepairOutcome& outcome,
                                       const std::vector<std::string>& config_paths) {
    ordered_json j;
    j["tool_version"] = tool_version;
    j["tree_id"] = tree_id;
    j["pairs_total"] = pairs.pairs.size();
    long covered = 0;
    for (const auto& c : outcome.configs) covered += static_cast<long>(c.covered.size());
    j["pairs_covered"] = covered;
    j["pairs_uncoverable"] = outcome.uncoverable.size();

    ordered_json configs = ordered_json::array();
    for (size_t i = 0; i < outcome.configs.size(); ++i) {
        const RepairedConfig& rc = outcome.configs[i];
        ordered_json c;
        c["path"] = i < config_paths.size() ? config_paths[i] : "";
        ordered_json cov = ordered_json::array();
        for (const auto& p : rc.covered) cov.push_back(pair_json(p));
        c["covered_pairs"] = std::move(cov);
        c["options_changed"] = rc.options_changed;
        c["change_ratio"] = rc.change_ratio;
        configs.push_back(std::move(c));
    }
    j["configs"] = std::move(configs);

    ordered_json unsupported = ordered_json::array();
    for (const auto& [path, reason] : pairs.unsupported) {
        ordered_json u;
        u["path"] = path;
        u["reason"] = reason;
        unsupported.push_back(std::move(u));
    }
    j["unsupported"] = std::move(unsupported);

    ordered_json uncoverable = ordered_json::array();
    for (const auto& [p, reason] : outcome.uncoverable) {
        ordered_json u = pair_json(p);
        u["reason"] = reason;
        uncoverable.push_back(std::move(u));
    }
    j["uncoverable"] = std::move(uncoverable);

    ordered_json stats;
    stats["solver_calls"] = outcome.solver_calls;
    stats["cores_removed"] = outcome.cores_removed;
    stats["assumptions_removed"] = outcome.assumptions_removed;
    stats["line_pc_queries"] = outcome.line_pc_queries;
    j["solver_stats"] = std::move(stats);
    return j;
}

} // namespace confrepair
