// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "confrepair/diagnostics.hpp"

namespace confrepair {

enum class DeltaKind { Modify, Add, Delete, RenameOnly };

struct HunkLine {
    char tag = ' '; // ' ' context, '-' removed, '+' added
    std::string text;
};

struct Hunk {
    int old_start = 0, old_len = 0;
    int new_start = 0, new_len = 0;
    std::vector<HunkLine> lines;
};

struct FileDelta {
    std::optional<std::string> old_path; // absent for added files
    std::optional<std::string> new_path; // absent for deleted files
    DeltaKind kind = DeltaKind::Modify;
    std::vector<Hunk> hunks;

    const std::string& target_path() const { return new_path ? *new_path : *old_path; }
};

/// One after-patch changed location. `file_level_only` marks pairs re-homed
/// from a header onto a compilation unit, where only the file's own presence
/// condition applies.
struct PatchPair {
    std::string file;
    int line = 0;
    bool file_level_only = false;

    friend bool operator==(const PatchPair& a, const PatchPair& b) {
        return a.file == b.file && a.line == b.line && a.file_level_only == b.file_level_only;
    }
    friend bool operator<(const PatchPair& a, const PatchPair& b) {
        return std::tie(a.file, a.line, a.file_level_only) <
               std::tie(b.file, b.line, b.file_level_only);
    }
};

struct PatchLineSet {
    std::vector<PatchPair> pairs; // patch order: file order, then line order
    std::vector<std::pair<std::string, std::string>> unsupported;   // (path, reason)
    std::vector<std::pair<std::string, std::string>> header_mapped; // header -> proxy unit
};

namespace patch_detail {

inline std::string strip_ab_prefix(std::string_view p) {
    if (p.starts_with("a/") || p.starts_with("b/")) p.remove_prefix(2);
    return std::string(p);
}

/// Path from a `---` / `+++` header line; absent for /dev/null.
inline std::optional<std::string> header_path(std::string_view rest) {
    size_t tab = rest.find('\t');
    if (tab != std::string_view::npos) rest = rest.substr(0, tab);
    while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
    if (rest == "/dev/null") return std::nullopt;
    return strip_ab_prefix(rest);
}

inline bool parse_hunk_header(std::string_view line, Hunk& h, const std::string& file, int lineno) {
    if (!line.starts_with("@@ -")) return false;
    size_t pos = 4;
    auto number = [&](int& out) {
        size_t start = pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == start) throw ParseError(file, lineno, "malformed hunk header");
        out = std::stoi(std::string(line.substr(start, pos - start)));
    };
    number(h.old_start);
    h.old_len = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        number(h.old_len);
    }
    if (pos + 1 >= line.size() || line[pos] != ' ' || line[pos + 1] != '+')
        throw ParseError(file, lineno, "malformed hunk header");
    pos += 2;
    number(h.new_start);
    h.new_len = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        number(h.new_len);
    }
    if (!line.substr(pos).starts_with(" @@"))
        throw ParseError(file, lineno, "malformed hunk header");
    return true;
}

} // namespace patch_detail

/// Parse a unified diff, git-style headers included. One delta per changed
/// file in patch order; `a/`-`b/` prefixes are stripped.
inline std::vector<FileDelta> parse_patch(const std::string& text) {
    using namespace patch_detail;
    const std::string file = "<patch>";

    std::vector<std::string> lines;
    {
        size_t start = 0;
        while (start <= text.size()) {
            size_t nl = text.find('\n', start);
            if (nl == std::string::npos) {
                if (start < text.size()) lines.push_back(text.substr(start));
                break;
            }
            lines.push_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }

    std::vector<FileDelta> deltas;
    std::optional<FileDelta> cur;
    bool cur_new_file = false, cur_deleted_file = false;
    std::optional<std::string> rename_from, rename_to;
    std::optional<std::string> git_old, git_new; // from the diff --git line itself

    auto finish = [&]() {
        if (!cur) return;
        FileDelta d = std::move(*cur);
        cur.reset();
        if (rename_from) d.old_path = *rename_from;
        if (rename_to) d.new_path = *rename_to;
        if (!d.old_path && !d.new_path) {
            // no ---/+++ lines (empty adds, mode-only changes): fall back to
            // the paths on the diff --git line
            d.old_path = git_old;
            d.new_path = git_new;
        }
        if (cur_new_file) d.old_path.reset();
        if (cur_deleted_file) d.new_path.reset();
        if (!d.old_path && !d.new_path)
            throw ParseError(file, 0, "file entry carries no usable path");
        if (!d.old_path) d.kind = DeltaKind::Add;
        else if (!d.new_path) d.kind = DeltaKind::Delete;
        else if (d.hunks.empty() && rename_from) d.kind = DeltaKind::RenameOnly;
        else d.kind = DeltaKind::Modify;
        rename_from.reset();
        rename_to.reset();
        git_old.reset();
        git_new.reset();
        cur_new_file = cur_deleted_file = false;
        deltas.push_back(std::move(d));
    };

    size_t i = 0;
    while (i < lines.size()) {
        const std::string& l = lines[i];
        int lineno = static_cast<int>(i) + 1;

        if (l.starts_with("diff --git ")) {
            finish();
            cur = FileDelta{};
            std::string_view rest = std::string_view(l).substr(11);
            size_t split = rest.find(" b/");
            if (split != std::string_view::npos) {
                git_old = strip_ab_prefix(rest.substr(0, split));
                git_new = strip_ab_prefix(rest.substr(split + 1));
            }
            ++i;
            continue;
        }
        if (l.starts_with("Binary files ") || l.starts_with("GIT binary patch"))
            throw ParseError(file, lineno, "binary diffs are not supported");
        if (l.starts_with("copy from ") || l.starts_with("copy to "))
            throw ParseError(file, lineno, "copy diffs are not supported");
        if (cur && l.starts_with("new file mode")) { cur_new_file = true; ++i; continue; }
        if (cur && l.starts_with("deleted file mode")) { cur_deleted_file = true; ++i; continue; }
        if (cur && l.starts_with("rename from ")) { rename_from = l.substr(12); ++i; continue; }
        if (cur && l.starts_with("rename to ")) { rename_to = l.substr(10); ++i; continue; }
        if (cur && (l.starts_with("index ") || l.starts_with("old mode") ||
                    l.starts_with("new mode") || l.starts_with("similarity index") ||
                    l.starts_with("dissimilarity index") || l.starts_with("mode "))) {
            ++i;
            continue;
        }
        if (l.starts_with("--- ")) {
            // plain unified diffs separate files with ---/+++ alone
            if (cur && (!cur->hunks.empty() || cur->old_path || cur->new_path)) finish();
            if (!cur) cur = FileDelta{};
            cur->old_path = header_path(std::string_view(l).substr(4));
            ++i;
            if (i >= lines.size() || !lines[i].starts_with("+++ "))
                throw ParseError(file, lineno + 1, "expected '+++' after '---'");
            cur->new_path = header_path(std::string_view(lines[i]).substr(4));
            ++i;
            continue;
        }
        if (l.starts_with("@@ ")) {
            if (!cur) throw ParseError(file, lineno, "hunk before any file header");
            Hunk h;
            if (!parse_hunk_header(l, h, file, lineno))
                throw ParseError(file, lineno, "malformed hunk header");
            ++i;
            int seen_old = 0, seen_new = 0;
            while (i < lines.size() && (seen_old < h.old_len || seen_new < h.new_len)) {
                const std::string& r = lines[i];
                if (r.starts_with("\\")) { ++i; continue; } // "\ No newline at end of file"
                char tag = r.empty() ? ' ' : r[0];
                if (tag != ' ' && tag != '-' && tag != '+')
                    throw ParseError(file, static_cast<int>(i) + 1,
                                     "unexpected line inside hunk: '" + r + "'");
                HunkLine hl{tag, r.empty() ? std::string() : r.substr(1)};
                if (tag != '+') ++seen_old;
                if (tag != '-') ++seen_new;
                h.lines.push_back(std::move(hl));
                ++i;
            }
            if (seen_old != h.old_len || seen_new != h.new_len)
                throw ParseError(file, lineno, "hunk line counts do not match the header");
            while (i < lines.size() && lines[i].starts_with("\\")) ++i;
            cur->hunks.push_back(std::move(h));
            continue;
        }
        if (!cur) { ++i; continue; } // commit message or mail preamble
        throw ParseError(file, lineno, "unexpected line in patch: '" + l + "'");
    }
    finish();
    return deltas;
}

/// Reduce deltas to the after-patch (file, line) pairs. Added lines map to
/// their after-patch positions; each maximal run of removed lines maps to
/// the line just preceding the removal (clamped to 1 at the head of a file);
/// deleted and rename-only files contribute nothing; header changes are
/// re-homed onto the patch's compilation units at file level.
inline PatchLineSet patch_lines(const std::vector<FileDelta>& deltas) {
    PatchLineSet out;
    std::set<PatchPair> seen;
    auto push = [&](PatchPair p) {
        if (seen.insert(p).second) out.pairs.push_back(std::move(p));
    };

    auto is_header = [](const std::string& p) { return p.ends_with(".h"); };
    auto is_unit = [](const std::string& p) { return p.ends_with(".c"); };

    std::vector<PatchPair> header_pairs;
    std::vector<std::string> header_files;
    std::vector<std::string> proxy_units;

    for (const auto& d : deltas) {
        if (d.kind == DeltaKind::Delete || d.kind == DeltaKind::RenameOnly) continue;
        const std::string& path = d.target_path();
        if (!is_unit(path) && !is_header(path)) {
            out.unsupported.emplace_back(path, "not-a-compilation-unit");
            continue;
        }
        if (is_unit(path)) proxy_units.push_back(path);

        std::vector<PatchPair> local;
        bool emptied = d.hunks.size() == 1 && d.hunks[0].new_start == 0 &&
                       d.hunks[0].new_len == 0 && d.hunks[0].old_start <= 1;
        for (const auto& h : d.hunks) {
            int new_line = h.new_start;
            int prev = h.new_start - 1; // after-patch line just before the cursor
            bool in_removed_run = false;
            for (const auto& r : h.lines) {
                if (r.tag == '-') {
                    if (!in_removed_run) {
                        in_removed_run = true;
                        if (!emptied) local.push_back(PatchPair{path, std::max(prev, 1), false});
                    }
                    continue;
                }
                in_removed_run = false;
                if (r.tag == '+') local.push_back(PatchPair{path, new_line, false});
                prev = new_line;
                ++new_line;
            }
        }

        if (is_header(path)) {
            header_files.push_back(path);
            for (auto& p : local) header_pairs.push_back(std::move(p));
        } else {
            for (auto& p : local) push(std::move(p));
        }
    }

    if (!header_pairs.empty()) {
        if (proxy_units.empty()) {
            for (const auto& h : header_files) out.unsupported.emplace_back(h, "header-only");
        } else {
            for (const auto& unit : proxy_units) {
                for (const auto& hp : header_pairs)
                    push(PatchPair{unit, hp.line, true});
            }
            for (const auto& h : header_files)
                for (const auto& unit : proxy_units) out.header_mapped.emplace_back(h, unit);
        }
    }
    return out;
}

} // namespace confrepair
