// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confrepair/diagnostics.hpp"
#include "confrepair/kconfig.hpp"
#include "confrepair/logic.hpp"

namespace confrepair {

enum class DirectiveKind : uint8_t { If, Ifdef, Ifndef, Else };

/// One branch of a conditional group (or the root). Spans are 1-based and
/// inclusive and cover the lines strictly between the group's directives, so
/// children nest strictly inside their parent and siblings stay disjoint.
struct Block {
    int parent = -1;
    int group = -1; // sibling-group index, -1 for the root
    int start = 1;
    int end = 0;
    DirectiveKind directive = DirectiveKind::If;
    std::string raw_guard;    // directive expression text; empty for #else
    Formula guard;            // mapped guard on its own
    Formula branch_condition; // guard ∧ negations of earlier sibling guards
    std::vector<int> children;
};

struct BlockTree {
    std::vector<Block> blocks; // blocks[0] is the root
    int line_count = 0;
    // Per line: the block whose condition governs it. Directive lines map to
    // the block enclosing their group.
    std::vector<int> line_block;

    bool line_in_range(int line) const { return line >= 1 && line <= line_count; }
};

struct LinePC {
    int line = 0;
    Formula pc;
    int innermost_block = 0;
};

namespace cpp_detail {

struct ExprContext {
    const KconfigSpec& spec;
    VarTable& table;
    std::string file_tag;
    std::map<std::string, Formula>* free_memo; // per-file, keyed by token text
    Diagnostics* diag;
};

inline Formula fresh_free_var(const ExprContext& ctx, const std::string& key) {
    auto it = ctx.free_memo->find(key);
    if (it != ctx.free_memo->end()) return it->second;
    Formula f = Formula::var(ctx.table.intern("@free:" + ctx.file_tag + ":" + key));
    ctx.free_memo->emplace(key, f);
    return f;
}

// defined(CONFIG_X): on at all. IS_ENABLED: y or m. IS_BUILTIN: y.
// IS_MODULE: m. Config symbols nobody declared behave like n.
inline Formula config_atom(const ExprContext& ctx, const std::string& macro, const std::string& ident) {
    std::string option = ident.substr(7); // strip CONFIG_
    const OptionDecl* d = ctx.spec.find(option);
    if (!d) {
        if (ctx.diag)
            ctx.diag->warn(ctx.file_tag + ": undeclared config symbol '" + ident + "' treated as n");
        return Formula::falsity();
    }
    Formula x = Formula::var(ctx.table.intern(option));
    Formula xm = d->tristate ? Formula::var(ctx.table.intern(module_var_name(option)))
                             : Formula::falsity();
    if (macro == "defined") return Formula::disjunction({x, xm});
    if (macro == "IS_ENABLED") return x;
    if (macro == "IS_BUILTIN") return Formula::conjunction({x, Formula::negation(xm)});
    if (macro == "IS_MODULE") return xm;
    return Formula::falsity();
}

class ExprParser {
public:
    ExprParser(std::string_view text, const ExprContext& ctx) : ctx_(ctx) { tokenize(text); }

    Formula parse() {
        if (tokens_.empty()) return fresh_free_var(ctx_, "<empty>");
        Formula f = parse_or();
        if (pos_ != tokens_.size()) {
            // trailing junk: abstract the whole expression instead of guessing
            return fresh_free_var(ctx_, joined(0, tokens_.size()));
        }
        return f;
    }

private:
    void tokenize(std::string_view text) {
        size_t i = 0;
        auto two = [&](char a, char b) {
            return i + 1 < text.size() && text[i] == a && text[i + 1] == b;
        };
        while (i < text.size()) {
            char c = text[i];
            if (c == ' ' || c == '\t') { ++i; continue; }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t s = i;
                while (i < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                    ++i;
                tokens_.emplace_back(text.substr(s, i - s));
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t s = i;
                while (i < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '.'))
                    ++i;
                tokens_.emplace_back(text.substr(s, i - s));
                continue;
            }
            if (two('&', '&') || two('|', '|') || two('<', '<') || two('>', '>') ||
                two('<', '=') || two('>', '=') || two('=', '=') || two('!', '=')) {
                tokens_.emplace_back(text.substr(i, 2));
                i += 2;
                continue;
            }
            tokens_.emplace_back(text.substr(i, 1));
            ++i;
        }
    }

    const std::string& tok(size_t k) const { return tokens_[k]; }
    bool at(std::string_view t) const { return pos_ < tokens_.size() && tokens_[pos_] == t; }
    bool eat(std::string_view t) {
        if (!at(t)) return false;
        ++pos_;
        return true;
    }

    std::string joined(size_t from, size_t to) const {
        std::string out;
        for (size_t k = from; k < to; ++k) out += tokens_[k];
        return out;
    }

    static bool is_ident(const std::string& t) {
        return !t.empty() && (std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_');
    }
    static bool is_number(const std::string& t) {
        return !t.empty() && std::isdigit(static_cast<unsigned char>(t[0]));
    }
    static bool boundary(const std::string& t) { return t == "&&" || t == "||" || t == ")"; }

    Formula parse_or() {
        std::vector<Formula> parts{parse_and()};
        while (eat("||")) parts.push_back(parse_and());
        return Formula::disjunction(parts);
    }
    Formula parse_and() {
        std::vector<Formula> parts{parse_unary()};
        while (eat("&&")) parts.push_back(parse_unary());
        return Formula::conjunction(parts);
    }
    Formula parse_unary() {
        if (eat("!")) return Formula::negation(parse_unary());
        return parse_operand();
    }

    // Consume tokens up to the next top-level boolean boundary and abstract
    // them as one free variable. Arithmetic never constrains the options.
    Formula blob_from(size_t mark) {
        int depth = 0;
        while (pos_ < tokens_.size()) {
            const std::string& t = tok(pos_);
            if (depth == 0 && boundary(t)) break;
            if (t == "(") ++depth;
            if (t == ")") --depth;
            ++pos_;
        }
        return fresh_free_var(ctx_, joined(mark, pos_));
    }

    Formula parse_operand() {
        size_t mark = pos_;
        std::optional<Formula> unit = parse_unit();
        if (!unit) return blob_from(mark);
        if (pos_ < tokens_.size() && !boundary(tok(pos_))) return blob_from(mark);
        return *unit;
    }

    // A self-contained boolean unit, or nullopt when the shape is not one.
    std::optional<Formula> parse_unit() {
        if (pos_ >= tokens_.size()) return std::nullopt;
        const std::string t = tok(pos_);

        if (t == "(") {
            size_t mark = pos_;
            ++pos_;
            Formula inner = parse_or();
            if (!eat(")")) {
                pos_ = mark;
                return std::nullopt;
            }
            return inner;
        }
        if (t == "defined") {
            ++pos_;
            std::string ident;
            if (eat("(")) {
                if (pos_ >= tokens_.size() || !is_ident(tok(pos_))) return std::nullopt;
                ident = tok(pos_++);
                if (!eat(")")) return std::nullopt;
            } else {
                if (pos_ >= tokens_.size() || !is_ident(tok(pos_))) return std::nullopt;
                ident = tok(pos_++);
            }
            if (ident.starts_with("CONFIG_")) return config_atom(ctx_, "defined", ident);
            return fresh_free_var(ctx_, "defined(" + ident + ")");
        }
        if (t == "IS_ENABLED" || t == "IS_BUILTIN" || t == "IS_MODULE") {
            size_t mark = pos_;
            ++pos_;
            if (eat("(") && pos_ < tokens_.size() && is_ident(tok(pos_))) {
                std::string ident = tok(pos_++);
                if (eat(")")) {
                    if (ident.starts_with("CONFIG_")) return config_atom(ctx_, t, ident);
                    return fresh_free_var(ctx_, t + "(" + ident + ")");
                }
            }
            pos_ = mark;
            return std::nullopt;
        }
        if (is_number(t)) {
            ++pos_;
            long v = std::strtol(t.c_str(), nullptr, 0);
            return Formula::constant(v != 0);
        }
        if (is_ident(t)) {
            ++pos_;
            if (at("(")) {
                --pos_;
                return std::nullopt; // function-like macro call: abstract it
            }
            return fresh_free_var(ctx_, t);
        }
        return std::nullopt;
    }

    ExprContext ctx_;
    std::vector<std::string> tokens_;
    size_t pos_ = 0;
};

/// Blank out /* ... */ contents so directives inside comments are ignored.
/// Single heuristic pass; string literals are not tracked.
inline std::string strip_block_comments(const std::string& text) {
    std::string out = text;
    bool in_comment = false;
    for (size_t i = 0; i < out.size(); ++i) {
        if (!in_comment && i + 1 < out.size() && out[i] == '/' && out[i + 1] == '*') {
            in_comment = true;
            out[i] = ' ';
            out[i + 1] = ' ';
            ++i;
        } else if (in_comment && i + 1 < out.size() && out[i] == '*' && out[i + 1] == '/') {
            in_comment = false;
            out[i] = ' ';
            out[i + 1] = ' ';
            ++i;
        } else if (in_comment && out[i] != '\n') {
            out[i] = ' ';
        }
    }
    return out;
}

struct Directive {
    std::string keyword;
    std::string rest;
    int first_line = 0;
    int last_line = 0; // > first_line with backslash continuations
};

} // namespace cpp_detail

inline void resolve_block_conditions(BlockTree& tree, const std::string& file_tag,
                                     const KconfigSpec& spec, VarTable& table,
                                     Diagnostics* diag, std::map<std::string, Formula>* memo);

/// Parse the conditional-compilation structure of one source file. The
/// option mapping needs the spec to tell tristates from bools; unknown
/// non-config tokens become per-file free variables.
inline BlockTree parse_conditionals(const std::string& text, const std::string& file_tag,
                                    const KconfigSpec& spec, VarTable& table,
                                    Diagnostics* diag = nullptr) {
    using namespace cpp_detail;

    std::string stripped = strip_block_comments(text);
    std::vector<std::string> lines;
    if (!text.empty()) {
        size_t start = 0;
        while (start <= stripped.size()) {
            size_t nl = stripped.find('\n', start);
            if (nl == std::string::npos) {
                lines.push_back(stripped.substr(start));
                break;
            }
            lines.push_back(stripped.substr(start, nl - start));
            start = nl + 1;
        }
        if (!lines.empty() && lines.back().empty() && text.ends_with('\n')) lines.pop_back();
    }

    BlockTree tree;
    tree.line_count = static_cast<int>(lines.size());
    tree.line_block.assign(tree.line_count + 1, 0);
    tree.blocks.push_back(Block{});
    tree.blocks[0].start = 1;
    tree.blocks[0].end = tree.line_count;
    tree.blocks[0].branch_condition = Formula::truth();
    tree.blocks[0].guard = Formula::truth();

    struct OpenGroup {
        int parent_block;
        int group_id;
        std::vector<int> branches;
        bool has_else = false;
    };
    std::vector<OpenGroup> stack;
    int current = 0;
    int group_count = 0;

    std::map<std::string, Formula> free_memo;
    ExprContext ctx{spec, table, file_tag, &free_memo, diag};

    auto parse_directive_line = [&](int lineno) -> std::optional<Directive> {
        const std::string& l = lines[lineno - 1];
        size_t i = 0;
        while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) ++i;
        if (i >= l.size() || l[i] != '#') return std::nullopt;
        ++i;
        while (i < l.size() && (l[i] == ' ' || l[i] == '\t')) ++i;
        size_t s = i;
        while (i < l.size() && std::isalpha(static_cast<unsigned char>(l[i]))) ++i;
        Directive d;
        d.keyword = l.substr(s, i - s);
        d.rest = l.substr(i);
        d.first_line = d.last_line = lineno;
        return d;
    };

    int lineno = 1;
    while (lineno <= tree.line_count) {
        auto dir = parse_directive_line(lineno);
        if (!dir) {
            tree.line_block[lineno] = current;
            ++lineno;
            continue;
        }
        while (!dir->rest.empty() && dir->rest.back() == '\\' && dir->last_line < tree.line_count) {
            dir->rest.pop_back();
            ++dir->last_line;
            dir->rest += ' ';
            dir->rest += lines[dir->last_line - 1];
        }
        std::string expr(kconfig_detail::trim(dir->rest));

        const std::string& kw = dir->keyword;
        bool conditional = kw == "if" || kw == "ifdef" || kw == "ifndef" || kw == "elif" ||
                           kw == "else" || kw == "endif";

        if (!conditional) {
            if ((kw == "define" || kw == "undef") && expr.starts_with("CONFIG_") && diag)
                diag->warn(file_tag + ":" + std::to_string(lineno) + ": #" + kw +
                           " of a config symbol is ignored");
            for (int k = dir->first_line; k <= dir->last_line; ++k) tree.line_block[k] = current;
            lineno = dir->last_line + 1;
            continue;
        }

        auto open_branch = [&](DirectiveKind kind, const std::string& raw) {
            Block b;
            b.parent = stack.back().parent_block;
            b.group = stack.back().group_id;
            b.directive = kind;
            b.raw_guard = raw;
            b.start = dir->last_line + 1;
            int id = static_cast<int>(tree.blocks.size());
            tree.blocks.push_back(std::move(b));
            tree.blocks[stack.back().parent_block].children.push_back(id);
            stack.back().branches.push_back(id);
            current = id;
        };
        auto close_branch = [&]() {
            Block& b = tree.blocks[stack.back().branches.back()];
            b.end = dir->first_line - 1;
        };

        if (kw == "if" || kw == "ifdef" || kw == "ifndef") {
            stack.push_back(OpenGroup{current, group_count++, {}, false});
            DirectiveKind kind = kw == "if" ? DirectiveKind::If
                               : kw == "ifdef" ? DirectiveKind::Ifdef
                                               : DirectiveKind::Ifndef;
            for (int k = dir->first_line; k <= dir->last_line; ++k)
                tree.line_block[k] = stack.back().parent_block;
            open_branch(kind, expr);
        } else if (kw == "elif") {
            if (stack.empty())
                throw ParseError(file_tag, lineno, "#elif without matching #if");
            if (stack.back().has_else)
                throw ParseError(file_tag, lineno, "#elif after #else in the same group");
            close_branch();
            for (int k = dir->first_line; k <= dir->last_line; ++k)
                tree.line_block[k] = stack.back().parent_block;
            open_branch(DirectiveKind::If, expr);
        } else if (kw == "else") {
            if (stack.empty())
                throw ParseError(file_tag, lineno, "#else without matching #if");
            if (stack.back().has_else)
                throw ParseError(file_tag, lineno, "second #else in the same group");
            close_branch();
            stack.back().has_else = true;
            for (int k = dir->first_line; k <= dir->last_line; ++k)
                tree.line_block[k] = stack.back().parent_block;
            open_branch(DirectiveKind::Else, "");
        } else { // endif
            if (stack.empty())
                throw ParseError(file_tag, lineno, "unbalanced #endif");
            close_branch();
            current = stack.back().parent_block;
            for (int k = dir->first_line; k <= dir->last_line; ++k) tree.line_block[k] = current;
            stack.pop_back();
        }
        lineno = dir->last_line + 1;
    }
    if (!stack.empty())
        throw ParseError(file_tag, tree.line_count, "unbalanced #if: missing #endif");

    resolve_block_conditions(tree, file_tag, spec, table, diag, &free_memo);
    return tree;
}

/// Map raw directive expressions to guard and branch-condition formulas.
/// Rebuilds the same formulas for a tree restored from the cache.
inline void resolve_block_conditions(BlockTree& tree, const std::string& file_tag,
                                     const KconfigSpec& spec, VarTable& table,
                                     Diagnostics* diag, std::map<std::string, Formula>* memo) {
    using namespace cpp_detail;
    std::map<std::string, Formula> local_memo;
    ExprContext ctx{spec, table, file_tag, memo ? memo : &local_memo, diag};

    for (size_t i = 1; i < tree.blocks.size(); ++i) {
        Block& b = tree.blocks[i];
        switch (b.directive) {
        case DirectiveKind::If:
            b.guard = ExprParser(b.raw_guard, ctx).parse();
            break;
        case DirectiveKind::Ifdef:
        case DirectiveKind::Ifndef: {
            Formula atom;
            std::string ident(kconfig_detail::trim(b.raw_guard));
            if (ident.starts_with("CONFIG_") ) atom = config_atom(ctx, "defined", ident);
            else if (!ident.empty()) atom = fresh_free_var(ctx, "defined(" + ident + ")");
            else atom = fresh_free_var(ctx, "<empty>");
            b.guard = b.directive == DirectiveKind::Ifdef ? atom : Formula::negation(atom);
            break;
        }
        case DirectiveKind::Else:
            b.guard = Formula::truth();
            break;
        }
    }

    // Branch condition: own guard plus the negation of every earlier sibling
    // guard, so siblings are mutually exclusive by construction.
    std::map<int, std::vector<int>> groups;
    for (size_t i = 1; i < tree.blocks.size(); ++i) groups[tree.blocks[i].group].push_back(static_cast<int>(i));
    for (auto& [g, members] : groups) {
        std::vector<Formula> earlier;
        for (int id : members) {
            Block& b = tree.blocks[id];
            std::vector<Formula> parts{b.guard};
            for (const Formula& e : earlier) parts.push_back(Formula::negation(e));
            b.branch_condition = Formula::conjunction(parts);
            earlier.push_back(b.guard);
        }
    }
}

/// Chain of block ids from the root to the line's innermost block. Equal
/// chains have identical presence conditions by construction.
inline std::vector<int> enclosing_chain(const BlockTree& tree, int line) {
    if (!tree.line_in_range(line)) throw std::out_of_range("line out of range");
    std::vector<int> chain;
    for (int b = tree.line_block[line]; b >= 0; b = tree.blocks[b].parent) chain.push_back(b);
    std::reverse(chain.begin(), chain.end());
    return chain;
}

inline LinePC line_condition(const BlockTree& tree, int line) {
    if (!tree.line_in_range(line)) throw std::out_of_range("line out of range");
    std::vector<Formula> parts;
    for (int b : enclosing_chain(tree, line)) parts.push_back(tree.blocks[b].branch_condition);
    return LinePC{line, Formula::conjunction(parts), tree.line_block[line]};
}

} // namespace confrepair
