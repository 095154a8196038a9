// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confrepair/cache.hpp"
#include "confrepair/cpp_pc.hpp"
#include "confrepair/kbuild.hpp"
#include "confrepair/kconfig.hpp"
#include "confrepair/patch.hpp"
#include "confrepair/serialize.hpp"
#include "confrepair/solver.hpp"

namespace confrepair {

/// The three constraint-analysis optimizations, individually toggleable so
/// runs with and without them can be compared.
struct OptimizationFlags {
    bool skip_unconditional_lines = true; // no line query when outside any #ifdef
    bool reuse_chain_constraints = true;  // one query per (file, chain)
    bool chain_subsumption = true;        // nesting decides satisfiability for free
};

struct BundleStats {
    long line_pc_queries = 0; // line-condition computations issued
    long files_parsed = 0;    // source files parsed for conditionals
    SolverStats solver;
};

/// Everything the repair loop needs to answer GetConstraint(file, line):
/// the spec's global formula, per-file presence conditions, and per-line
/// conditionals, each backed by the on-disk cache when one is configured.
class ConstraintBundle {
public:
    ConstraintBundle(std::filesystem::path tree_root, const std::string& kconfig_rel,
                     VarTable& table, Cache cache = {}, Diagnostics* diag = nullptr,
                     OptimizationFlags opts = {})
        : root_(std::move(tree_root)), table_(table), cache_(std::move(cache)), diag_(diag),
          opts_(opts) {
        spec_ = parse_kconfig((root_ / kconfig_rel).string(), table_, disk_loader(), diag_);
        CacheKey key{"kconfig", spec_.source_digest};
        if (auto hit = cache_.get(key)) {
            spec_formula_ = decode_formula(*hit, table_);
        } else {
            spec_formula_ = spec_to_formula(spec_, table_);
            cache_put(key, encode_formula(spec_formula_, table_));
        }
        compute_tree_id();
    }

    const KconfigSpec& spec() const { return spec_; }
    const Formula& spec_formula() const { return spec_formula_; }
    VarTable& table() { return table_; }
    const std::string& tree_id() const { return tree_id_; }
    const std::filesystem::path& tree_root() const { return root_; }
    const OptimizationFlags& optimizations() const { return opts_; }
    BundleStats& stats() { return stats_; }

    bool file_exists(const std::string& rel) const {
        std::error_code ec;
        return std::filesystem::is_regular_file(root_ / rel, ec);
    }

    Formula file_pc(const std::string& rel) {
        auto it = file_pc_memo_.find(rel);
        if (it != file_pc_memo_.end()) return it->second.pc;
        FilePresence p = compute_file_presence(rel);
        file_pc_memo_.emplace(rel, p);
        if (!p.referenced && diag_)
            diag_->warn("source file is not referenced by any build rule: " + rel);
        return p.pc;
    }

    bool file_referenced(const std::string& rel) {
        file_pc(rel);
        return file_pc_memo_.at(rel).referenced;
    }

    const BlockTree& block_tree(const std::string& rel) {
        auto it = tree_memo_.find(rel);
        if (it != tree_memo_.end()) return it->second;
        if (!file_exists(rel)) throw std::runtime_error("file not found in tree: " + rel);
        std::string content = read_file_bytes(root_ / rel);
        CacheKey key{"cpp", sha256_hex(rel + "\x1f" + content)};
        BlockTree tree;
        if (auto hit = cache_.get(key)) {
            tree = decode_block_tree(*hit);
            resolve_block_conditions(tree, rel, spec_, table_, diag_, nullptr);
        } else {
            tree = parse_conditionals(content, rel, spec_, table_, diag_);
            cache_put(key, encode_block_tree(tree));
        }
        ++stats_.files_parsed;
        return tree_memo_.emplace(rel, std::move(tree)).first->second;
    }

    /// Chain identifying the line's #ifdef nesting; pairs evaluated at file
    /// level only get the root chain without touching the source.
    std::vector<int> chain_of(const PatchPair& pair) {
        if (pair.file_level_only) return {0};
        return enclosing_chain(block_tree(pair.file), pair.line);
    }

    /// GetConstraint: the file's presence condition conjoined with the
    /// line's condition. Optimization 1 skips the line condition entirely
    /// for lines outside every conditional; optimization 2 reuses one
    /// computed condition per (file, chain).
    Formula get_constraint(const PatchPair& pair) {
        Formula fpc = file_pc(pair.file);
        if (pair.file_level_only) return fpc;

        const BlockTree& tree = block_tree(pair.file);
        if (!tree.line_in_range(pair.line))
            throw std::out_of_range("line out of range: " + pair.file + ":" +
                                    std::to_string(pair.line));
        std::vector<int> chain = enclosing_chain(tree, pair.line);
        if (opts_.skip_unconditional_lines && chain.size() == 1)
            return fpc; // root block only: the file condition already covers it

        if (opts_.reuse_chain_constraints) {
            auto key = std::make_pair(pair.file, chain);
            auto it = chain_memo_.find(key);
            if (it == chain_memo_.end()) {
                ++stats_.line_pc_queries;
                it = chain_memo_.emplace(key, line_condition(tree, pair.line).pc).first;
            }
            return Formula::conjunction({fpc, it->second});
        }
        ++stats_.line_pc_queries;
        return Formula::conjunction({fpc, line_condition(tree, pair.line).pc});
    }

private:
    FilePresence compute_file_presence(const std::string& rel) {
        // Per-directory rule lists come from the cache keyed by the
        // Makefile bytes, never by the spec, so spec edits leave them valid.
        auto cached_rules = [&](const std::string& dir_rel) -> std::vector<BuildRule> {
            std::filesystem::path dir = dir_rel.empty() ? root_ : root_ / dir_rel;
            for (const char* name : {"Makefile", "Kbuild"}) {
                std::error_code ec;
                std::filesystem::path mk = dir / name;
                if (!std::filesystem::is_regular_file(mk, ec)) continue;
                std::string content = read_file_bytes(mk);
                CacheKey key{"kbuild", sha256_hex(dir_rel + "/" + name + "\x1f" + content)};
                if (auto hit = cache_.get(key)) return decode_rules(*hit);
                std::vector<BuildRule> rules = parse_kbuild(dir.string());
                cache_put(key, encode_rules(rules));
                return rules;
            }
            return {};
        };

        if (!rel.ends_with(".c"))
            throw std::invalid_argument("file_presence: not a compilation unit: " + rel);
        bool ok = false;
        std::vector<std::string> parts = kbuild_detail::split_path(rel, ok);
        if (!ok || parts.empty())
            throw std::invalid_argument("file_presence: path escapes the tree: " + rel);

        std::vector<Formula> chain;
        std::string dir_rel;
        for (size_t i = 0; i + 1 < parts.size(); ++i) {
            std::vector<BuildRule> rules = cached_rules(dir_rel);
            std::vector<Formula> edges;
            for (const auto& r : rules)
                if (r.target == parts[i] + "/")
                    edges.push_back(kbuild_detail::guard_formula(r.guard, spec_, table_, diag_));
            if (edges.empty()) return FilePresence{Formula::falsity(), false};
            chain.push_back(Formula::disjunction(edges));
            dir_rel = dir_rel.empty() ? parts[i] : dir_rel + "/" + parts[i];
        }
        std::vector<BuildRule> rules = cached_rules(dir_rel);
        std::string object = parts.back().substr(0, parts.back().size() - 2) + ".o";
        bool mentioned = false;
        for (const auto& r : rules)
            if (r.target == object) mentioned = true;
        if (!mentioned) return FilePresence{Formula::falsity(), false};
        std::set<std::string> visiting;
        chain.push_back(
            kbuild_detail::object_presence(rules, object, spec_, table_, diag_, visiting));
        return FilePresence{Formula::conjunction(chain), true};
    }

    void cache_put(const CacheKey& key, const std::string& bytes) {
        try {
            cache_.put(key, bytes);
        } catch (const std::exception& e) {
            if (diag_) diag_->warn(std::string("cache write failed, continuing uncached: ") + e.what());
        }
    }

    void compute_tree_id() {
        // Digest of the build-relevant tree contents, standing in for the
        // version identifier of the checked-out sources.
        std::vector<std::string> rels;
        for (auto it = std::filesystem::recursive_directory_iterator(root_);
             it != std::filesystem::recursive_directory_iterator(); ++it) {
            if (!it->is_regular_file()) continue;
            std::string rel = std::filesystem::relative(it->path(), root_).generic_string();
            std::string name = it->path().filename().string();
            if (name == "Makefile" || name == "Kbuild" || name.starts_with("Kconfig") ||
                rel.ends_with(".c") || rel.ends_with(".h"))
                rels.push_back(rel);
        }
        std::sort(rels.begin(), rels.end());
        Digest d;
        for (const auto& rel : rels) {
            d.update_framed(rel);
            d.update_framed(read_file_bytes(root_ / rel));
        }
        tree_id_ = d.hex();
    }

    std::filesystem::path root_;
    VarTable& table_;
    Cache cache_;
    Diagnostics* diag_;
    OptimizationFlags opts_;
    KconfigSpec spec_;
    Formula spec_formula_;
    std::string tree_id_;
    BundleStats stats_;

    std::map<std::string, FilePresence> file_pc_memo_;
    std::map<std::string, BlockTree> tree_memo_;
    std::map<std::pair<std::string, std::vector<int>>, Formula> chain_memo_;
};

} // namespace confrepair
