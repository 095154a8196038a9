// SPDX-License-Identifier: Apache-2.0
//
// confrepair: repair a build configuration to cover a patch, measure patch
// coverage, or inspect a line's build constraint.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "confrepair/coverage.hpp"
#include "confrepair/report.hpp"
#include "confrepair/repair.hpp"

namespace fs = std::filesystem;
using namespace confrepair;

namespace {

struct CommonArgs {
    std::string tree;
    std::string kconfig = "Kconfig";
    std::string patch;
    std::string cache_dir;
    std::string format = "text";
    long max_solver_calls = 0;
    bool no_optimizations = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_patch) {
    cmd->add_option("--tree", args.tree, "Source tree root (patch already applied)")
        ->required();
    cmd->add_option("--kconfig", args.kconfig,
                    "Configuration spec entry point, relative to the tree");
    auto* patch = cmd->add_option("--patch", args.patch, "Unified diff file");
    if (needs_patch) patch->required();
    cmd->add_option("--cache", args.cache_dir,
                    "Constraint cache directory (or CONFREPAIR_CACHE)");
    cmd->add_option("--format", args.format, "Output format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--max-solver-calls", args.max_solver_calls,
                    "Abort after this many solver calls (0: unlimited)");
    cmd->add_flag("--no-optimizations", args.no_optimizations,
                  "Disable the constraint-analysis optimizations");
}

Cache open_cache(const CommonArgs& args, Diagnostics* diag) {
    std::string dir = args.cache_dir;
    if (dir.empty())
        if (const char* env = std::getenv("CONFREPAIR_CACHE")) dir = env;
    if (dir.empty()) return Cache{};
    return Cache{fs::path(dir), diag};
}

ConstraintBundle make_bundle(const CommonArgs& args, VarTable& table, Diagnostics& diag) {
    if (!fs::is_directory(args.tree))
        throw std::runtime_error("tree directory does not exist: " + args.tree);
    OptimizationFlags opts;
    if (args.no_optimizations) opts = OptimizationFlags{false, false, false};
    return ConstraintBundle(fs::path(args.tree), args.kconfig, table,
                            open_cache(args, &diag), &diag, opts);
}

PatchLineSet load_pairs(const CommonArgs& args) {
    return patch_lines(parse_patch(read_file_bytes(args.patch)));
}

void write_file_atomically(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
    out.close();
    fs::rename(tmp, target);
}

void print_warnings(const Diagnostics& diag) {
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_repair(const CommonArgs& args, const std::string& config_path, const std::string& out_dir) {
    Diagnostics diag;
    VarTable table;
    ConstraintBundle bundle = make_bundle(args, table, diag);
    ConfigFile input = parse_config(read_file_bytes(config_path), config_path);
    PatchLineSet pairs = load_pairs(args);

    RepairOutcome outcome =
        repair_patch(pairs, input, bundle, RepairOptions{args.max_solver_calls});

    fs::create_directories(out_dir);
    std::vector<std::string> config_paths;
    std::vector<std::pair<fs::path, std::string>> staged;
    for (size_t i = 0; i < outcome.configs.size(); ++i) {
        fs::path p = fs::path(out_dir) / ("repaired-" + std::to_string(i + 1) + ".config");
        config_paths.push_back(p.string());
        staged.emplace_back(p, deparse_config(bundle.spec(), outcome.configs[i].values, input));
    }
    ordered_json report = repair_report_json(bundle.tree_id(), pairs, outcome, config_paths);
    staged.emplace_back(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    for (const auto& [path, content] : staged) write_file_atomically(path, content);

    print_warnings(diag);
    if (args.format == "json") {
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << "pairs: " << report["pairs_total"] << " total, " << report["pairs_covered"]
                  << " covered, " << report["pairs_uncoverable"] << " uncoverable\n";
        std::cout << "configs written: " << outcome.configs.size() << "\n";
        for (const auto& p : config_paths) std::cout << "  " << p << "\n";
        std::cout << "solver calls: " << outcome.solver_calls << "\n";
    }

    size_t accounted = static_cast<size_t>(report["pairs_covered"].get<long>()) +
                       outcome.uncoverable.size();
    return accounted == pairs.pairs.size() ? 0 : 1;
}

int cmd_coverage(const CommonArgs& args, const std::vector<std::string>& config_paths,
                 const std::string& out_dir) {
    Diagnostics diag;
    VarTable table;
    ConstraintBundle bundle = make_bundle(args, table, diag);
    PatchLineSet pairs = load_pairs(args);

    std::vector<CoverageReport> reports;
    for (const auto& path : config_paths) {
        ConfigFile config = parse_config(read_file_bytes(path), path);
        reports.push_back(measure_coverage(pairs, config, bundle, &diag));
    }
    CoverageReport total = aggregate_coverage(reports);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file_atomically(fs::path(out_dir) / "coverage.json",
                              coverage_json(total).dump(2) + "\n");
    }
    print_warnings(diag);
    if (args.format == "json") std::cout << coverage_json(total).dump(2) << "\n";
    else std::cout << coverage_to_text(total);

    return total.ratio >= 1.0 ? 0 : 1;
}

int cmd_constraints(const CommonArgs& args, const std::string& file, int line,
                    const std::string& dump_cnf) {
    Diagnostics diag;
    VarTable table;
    ConstraintBundle bundle = make_bundle(args, table, diag);
    Formula constraint = bundle.get_constraint(PatchPair{file, line, false});
    print_warnings(diag);
    std::cout << constraint.to_infix(table) << "\n";
    if (!dump_cnf.empty()) {
        std::ofstream out(dump_cnf, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + dump_cnf);
        write_dimacs(out, to_cnf(constraint), table);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repair build configurations to cover a patch"};
    app.require_subcommand(1);

    CommonArgs repair_args;
    std::string repair_config, repair_out;
    CLI::App* repair = app.add_subcommand("repair", "Repair a configuration to cover the patch");
    add_common(repair, repair_args, true);
    repair->add_option("--config", repair_config, "Configuration file to repair")->required();
    repair->add_option("--out", repair_out, "Output directory")->required();

    CommonArgs cov_args;
    std::vector<std::string> cov_configs;
    std::string cov_out;
    CLI::App* coverage = app.add_subcommand("coverage", "Measure patch coverage of configurations");
    add_common(coverage, cov_args, true);
    coverage->add_option("--config", cov_configs, "Configuration file(s)")->required();
    coverage->add_option("--out", cov_out, "Output directory for coverage.json");

    CommonArgs cons_args;
    std::string cons_file, cons_dump;
    int cons_line = 0;
    CLI::App* constraints = app.add_subcommand("constraints", "Print one line's build constraint");
    add_common(constraints, cons_args, false);
    constraints->add_option("--file", cons_file, "Tree-relative source file")->required();
    constraints->add_option("--line", cons_line, "Line number")->required();
    constraints->add_option("--dump-cnf", cons_dump, "Also dump the constraint as DIMACS CNF");

    try {
        app.parse(argc, argv);
        if (repair->parsed()) return cmd_repair(repair_args, repair_config, repair_out);
        if (coverage->parsed()) return cmd_coverage(cov_args, cov_configs, cov_out);
        if (constraints->parsed())
            return cmd_constraints(cons_args, cons_file, cons_line, cons_dump);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
