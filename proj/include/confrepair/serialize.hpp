// SPDX-License-Identifier: Apache-2.0
//
// Versioned text encodings for cached artifacts. Formulas serialize by
// variable name, build rules and block trees by structure, so entries stay
// valid across unrelated spec changes.
#pragma once

#include <sstream>
#include <string>

#include "confrepair/cpp_pc.hpp"
#include "confrepair/kbuild.hpp"
#include "confrepair/logic.hpp"

namespace confrepair {

namespace serialize_detail {

inline void formula_tokens(const Formula& f, const VarTable& table, std::string& out) {
    switch (f.kind()) {
    case Formula::Kind::True: out += "T "; return;
    case Formula::Kind::False: out += "F "; return;
    case Formula::Kind::Var:
        out += "v ";
        out += table.name(f.variable());
        out += ' ';
        return;
    case Formula::Kind::Not:
        out += "! ";
        formula_tokens(f.child(0), table, out);
        return;
    case Formula::Kind::And:
    case Formula::Kind::Or:
        out += f.kind() == Formula::Kind::And ? "& " : "| ";
        out += std::to_string(f.child_count());
        out += ' ';
        for (size_t i = 0; i < f.child_count(); ++i) formula_tokens(f.child(i), table, out);
        return;
    }
}

inline Formula parse_formula_tokens(std::istringstream& in, VarTable& table) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("formula decode: truncated input");
    if (tok == "T") return Formula::truth();
    if (tok == "F") return Formula::falsity();
    if (tok == "v") {
        std::string name;
        if (!(in >> name)) throw std::runtime_error("formula decode: missing variable name");
        return Formula::var(table.intern(name));
    }
    if (tok == "!") return Formula::negation(parse_formula_tokens(in, table));
    if (tok == "&" || tok == "|") {
        size_t n = 0;
        if (!(in >> n)) throw std::runtime_error("formula decode: missing arity");
        std::vector<Formula> parts;
        parts.reserve(n);
        for (size_t i = 0; i < n; ++i) parts.push_back(parse_formula_tokens(in, table));
        return tok == "&" ? Formula::conjunction(parts) : Formula::disjunction(parts);
    }
    throw std::runtime_error("formula decode: unknown token '" + tok + "'");
}

} // namespace serialize_detail

inline std::string encode_formula(const Formula& f, const VarTable& table) {
    std::string out = "confrepair-formula 1\n";
    serialize_detail::formula_tokens(f, table, out);
    out += '\n';
    return out;
}

inline Formula decode_formula(const std::string& bytes, VarTable& table) {
    std::istringstream in(bytes);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "confrepair-formula" || version != "1")
        throw std::runtime_error("formula decode: bad header");
    return serialize_detail::parse_formula_tokens(in, table);
}

inline std::string encode_rules(const std::vector<BuildRule>& rules) {
    std::string out = "confrepair-rules 1\n";
    for (const auto& r : rules) {
        out += "rule ";
        out += r.target;
        out += ' ';
        switch (r.guard.kind) {
        case GuardKind::Always: out += "y"; break;
        case GuardKind::Module: out += "m"; break;
        case GuardKind::Var: out += "$" + r.guard.option; break;
        }
        if (r.composite_parent) {
            out += ' ';
            out += *r.composite_parent;
        }
        out += '\n';
    }
    return out;
}

inline std::vector<BuildRule> decode_rules(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "confrepair-rules" || version != "1")
        throw std::runtime_error("rules decode: bad header");
    std::vector<BuildRule> rules;
    std::string kw;
    while (in >> kw) {
        if (kw != "rule") throw std::runtime_error("rules decode: unexpected token");
        BuildRule r;
        std::string guard;
        if (!(in >> r.target >> guard)) throw std::runtime_error("rules decode: truncated rule");
        if (guard == "y") r.guard = Guard{GuardKind::Always, {}};
        else if (guard == "m") r.guard = Guard{GuardKind::Module, {}};
        else if (guard.starts_with("$")) r.guard = Guard{GuardKind::Var, guard.substr(1)};
        else throw std::runtime_error("rules decode: bad guard '" + guard + "'");
        // optional composite parent on the same line
        std::string rest;
        std::getline(in, rest);
        std::string_view parent = kconfig_detail::trim(rest);
        if (!parent.empty()) r.composite_parent = std::string(parent);
        rules.push_back(std::move(r));
    }
    return rules;
}

/// Structure only: spans, nesting, raw guard text. Conditions are resolved
/// against the current spec after decoding.
inline std::string encode_block_tree(const BlockTree& tree) {
    std::string out = "confrepair-blocks 1\n";
    out += std::to_string(tree.blocks.size()) + " " + std::to_string(tree.line_count) + "\n";
    for (const auto& b : tree.blocks) {
        out += std::to_string(b.parent) + " " + std::to_string(b.group) + " " +
               std::to_string(b.start) + " " + std::to_string(b.end) + " " +
               std::to_string(static_cast<int>(b.directive)) + " " +
               std::to_string(b.raw_guard.size()) + "\n";
        out += b.raw_guard;
        out += '\n';
    }
    for (int v : tree.line_block) {
        out += std::to_string(v);
        out += ' ';
    }
    out += '\n';
    return out;
}

inline BlockTree decode_block_tree(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "confrepair-blocks" || version != "1")
        throw std::runtime_error("block decode: bad header");
    size_t n_blocks = 0;
    BlockTree tree;
    in >> n_blocks >> tree.line_count;
    tree.blocks.resize(n_blocks);
    for (size_t i = 0; i < n_blocks; ++i) {
        Block& b = tree.blocks[i];
        int directive = 0;
        size_t raw_len = 0;
        if (!(in >> b.parent >> b.group >> b.start >> b.end >> directive >> raw_len))
            throw std::runtime_error("block decode: truncated block");
        b.directive = static_cast<DirectiveKind>(directive);
        in.get(); // newline
        b.raw_guard.resize(raw_len);
        in.read(b.raw_guard.data(), static_cast<std::streamsize>(raw_len));
        if (in.gcount() != static_cast<std::streamsize>(raw_len))
            throw std::runtime_error("block decode: truncated guard");
    }
    tree.line_block.resize(tree.line_count + 1);
    for (int i = 0; i <= tree.line_count; ++i)
        if (!(in >> tree.line_block[i])) throw std::runtime_error("block decode: truncated line map");
    for (size_t i = 0; i < n_blocks; ++i) {
        int p = tree.blocks[i].parent;
        if (p >= 0) tree.blocks[p].children.push_back(static_cast<int>(i));
    }
    return tree;
}

} // namespace confrepair
