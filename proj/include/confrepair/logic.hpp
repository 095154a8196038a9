// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace confrepair {

/// Index into a VarTable. Interning the same name twice yields the same id.
struct VarId {
    uint32_t index = UINT32_MAX;

    bool valid() const { return index != UINT32_MAX; }
    friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
    friend bool operator!=(VarId a, VarId b) { return a.index != b.index; }
    friend bool operator<(VarId a, VarId b) { return a.index < b.index; }
};

struct VarIdHash {
    size_t operator()(VarId v) const { return std::hash<uint32_t>()(v.index); }
};

/// Interning table for variable names. Ids are assigned in interning order,
/// which fixes the solver's decision order and makes runs reproducible.
class VarTable {
public:
    VarId intern(std::string_view name) {
        if (name.empty()) throw std::invalid_argument("variable name must be nonempty");
        for (char c : name)
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
                throw std::invalid_argument("variable name contains whitespace: '" + std::string(name) + "'");
        auto it = index_.find(std::string(name));
        if (it != index_.end()) return VarId{it->second};
        uint32_t id = static_cast<uint32_t>(names_.size());
        names_.emplace_back(name);
        index_.emplace(names_.back(), id);
        return VarId{id};
    }

    VarId lookup(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return VarId{};
        return VarId{it->second};
    }

    const std::string& name(VarId v) const {
        if (!v.valid() || v.index >= names_.size())
            throw std::out_of_range("VarId not in table");
        return names_[v.index];
    }

    size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, uint32_t> index_;
};

struct Literal {
    VarId var;
    bool positive = true;

    Literal negated() const { return Literal{var, !positive}; }
    friend bool operator==(Literal a, Literal b) {
        return a.var == b.var && a.positive == b.positive;
    }
    friend bool operator<(Literal a, Literal b) {
        if (a.var != b.var) return a.var < b.var;
        return a.positive < b.positive;
    }
};

/// Propositional formula over interned variables. Nodes are immutable and
/// shared; the factory functions fold constants and flatten single-child
/// and/or so structurally distinct routes to the same simplification produce
/// identical trees.
class Formula {
public:
    enum class Kind : uint8_t { True, False, Var, Not, And, Or };

    Formula() : Formula(constant(true)) {}

    static Formula constant(bool value) {
        static const std::shared_ptr<const Node> t = std::make_shared<Node>(Node{Kind::True, VarId{}, {}});
        static const std::shared_ptr<const Node> f = std::make_shared<Node>(Node{Kind::False, VarId{}, {}});
        return Formula(value ? t : f);
    }
    static Formula truth() { return constant(true); }
    static Formula falsity() { return constant(false); }

    static Formula var(VarId v) {
        assert(v.valid());
        return Formula(std::make_shared<Node>(Node{Kind::Var, v, {}}));
    }

    static Formula negation(const Formula& f) {
        switch (f.kind()) {
        case Kind::True: return falsity();
        case Kind::False: return truth();
        case Kind::Not: return Formula(f.node_->children[0]);
        default: return Formula(std::make_shared<Node>(Node{Kind::Not, VarId{}, {f.node_}}));
        }
    }

    static Formula conjunction(const std::vector<Formula>& parts) {
        std::vector<std::shared_ptr<const Node>> kept;
        for (const auto& p : parts) {
            if (p.kind() == Kind::False) return falsity();
            if (p.kind() == Kind::True) continue;
            if (p.kind() == Kind::And) {
                for (const auto& c : p.node_->children) kept.push_back(c);
            } else {
                kept.push_back(p.node_);
            }
        }
        if (kept.empty()) return truth();
        if (kept.size() == 1) return Formula(kept[0]);
        return Formula(std::make_shared<Node>(Node{Kind::And, VarId{}, std::move(kept)}));
    }

    static Formula disjunction(const std::vector<Formula>& parts) {
        std::vector<std::shared_ptr<const Node>> kept;
        for (const auto& p : parts) {
            if (p.kind() == Kind::True) return truth();
            if (p.kind() == Kind::False) continue;
            if (p.kind() == Kind::Or) {
                for (const auto& c : p.node_->children) kept.push_back(c);
            } else {
                kept.push_back(p.node_);
            }
        }
        if (kept.empty()) return falsity();
        if (kept.size() == 1) return Formula(kept[0]);
        return Formula(std::make_shared<Node>(Node{Kind::Or, VarId{}, std::move(kept)}));
    }

    static Formula implication(const Formula& a, const Formula& b) {
        return disjunction({negation(a), b});
    }

    Kind kind() const { return node_->kind; }
    VarId variable() const {
        assert(kind() == Kind::Var);
        return node_->var;
    }
    size_t child_count() const { return node_->children.size(); }
    Formula child(size_t i) const { return Formula(node_->children.at(i)); }

    bool is_true() const { return kind() == Kind::True; }
    bool is_false() const { return kind() == Kind::False; }

    /// Evaluate under a total assignment (callback must cover every variable).
    bool eval(const std::function<bool(VarId)>& value) const {
        switch (kind()) {
        case Kind::True: return true;
        case Kind::False: return false;
        case Kind::Var: return value(node_->var);
        case Kind::Not: return !child(0).eval(value);
        case Kind::And:
            for (const auto& c : node_->children)
                if (!Formula(c).eval(value)) return false;
            return true;
        case Kind::Or:
            for (const auto& c : node_->children)
                if (Formula(c).eval(value)) return true;
            return false;
        }
        return false;
    }

    /// Substitute the variables present in `known` and fold constants.
    Formula partial_eval(const std::unordered_map<VarId, bool, VarIdHash>& known) const {
        switch (kind()) {
        case Kind::True:
        case Kind::False: return *this;
        case Kind::Var: {
            auto it = known.find(node_->var);
            if (it == known.end()) return *this;
            return constant(it->second);
        }
        case Kind::Not: return negation(child(0).partial_eval(known));
        case Kind::And: {
            std::vector<Formula> parts;
            parts.reserve(child_count());
            for (size_t i = 0; i < child_count(); ++i) parts.push_back(child(i).partial_eval(known));
            return conjunction(parts);
        }
        case Kind::Or: {
            std::vector<Formula> parts;
            parts.reserve(child_count());
            for (size_t i = 0; i < child_count(); ++i) parts.push_back(child(i).partial_eval(known));
            return disjunction(parts);
        }
        }
        return *this;
    }

    void collect_vars(std::unordered_set<uint32_t>& out) const {
        switch (kind()) {
        case Kind::Var: out.insert(node_->var.index); break;
        case Kind::Not:
        case Kind::And:
        case Kind::Or:
            for (const auto& c : node_->children) Formula(c).collect_vars(out);
            break;
        default: break;
        }
    }

    std::vector<VarId> vars() const {
        std::unordered_set<uint32_t> set;
        collect_vars(set);
        std::vector<VarId> out;
        out.reserve(set.size());
        for (uint32_t i : set) out.push_back(VarId{i});
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Structural equality (after constructor normalization).
    friend bool operator==(const Formula& a, const Formula& b) {
        return node_equal(a.node_.get(), b.node_.get());
    }
    friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

    /// Canonical infix rendering: `!`, `&&`, `||`, parentheses, `true`/`false`.
    std::string to_infix(const VarTable& table) const {
        std::string out;
        print(table, out, 0);
        return out;
    }

private:
    struct Node {
        Kind kind;
        VarId var;
        std::vector<std::shared_ptr<const Node>> children;
    };

    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static bool node_equal(const Node* a, const Node* b) {
        if (a == b) return true;
        if (a->kind != b->kind) return false;
        if (a->kind == Kind::Var) return a->var == b->var;
        if (a->children.size() != b->children.size()) return false;
        for (size_t i = 0; i < a->children.size(); ++i)
            if (!node_equal(a->children[i].get(), b->children[i].get())) return false;
        return true;
    }

    // precedence: or=1, and=2, not=3; parenthesize when child binds looser.
    void print(const VarTable& table, std::string& out, int parent_prec) const {
        switch (kind()) {
        case Kind::True: out += "true"; return;
        case Kind::False: out += "false"; return;
        case Kind::Var: out += table.name(node_->var); return;
        case Kind::Not: {
            out += '!';
            bool paren = child(0).kind() == Kind::And || child(0).kind() == Kind::Or;
            if (paren) out += '(';
            child(0).print(table, out, 3);
            if (paren) out += ')';
            return;
        }
        case Kind::And: {
            bool paren = parent_prec > 2;
            if (paren) out += '(';
            for (size_t i = 0; i < child_count(); ++i) {
                if (i) out += " && ";
                child(i).print(table, out, 2);
            }
            if (paren) out += ')';
            return;
        }
        case Kind::Or: {
            bool paren = parent_prec > 1;
            if (paren) out += '(';
            for (size_t i = 0; i < child_count(); ++i) {
                if (i) out += " || ";
                child(i).print(table, out, 1);
            }
            if (paren) out += ')';
            return;
        }
        }
    }

    std::shared_ptr<const Node> node_;
};

} // namespace confrepair
