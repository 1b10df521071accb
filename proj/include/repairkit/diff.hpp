#pragma once

// Unified diff parsing and application, enough for developer-patch oracles.

#include <string>
#include <string_view>
#include <vector>

#include "repairkit/errors.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

struct DiffLine {
    char tag;  // ' ', '-', '+'
    std::string content;
};

struct Hunk {
    int old_start = 0;
    int old_count = 0;
    int new_start = 0;
    int new_count = 0;
    std::vector<DiffLine> lines;
};

struct FileDiff {
    std::string old_path;
    std::string new_path;
    std::vector<Hunk> hunks;
};

namespace detail {

inline bool parse_hunk_header(std::string_view line, Hunk& h) {
    // @@ -old_start[,old_count] +new_start[,new_count] @@
    if (!text::starts_with(line, "@@ -")) return false;
    std::size_t pos = 4;
    auto read_int = [&](int& out) {
        int v = 0;
        bool any = false;
        while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
            v = v * 10 + (line[pos] - '0');
            ++pos;
            any = true;
        }
        out = v;
        return any;
    };
    if (!read_int(h.old_start)) return false;
    h.old_count = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        if (!read_int(h.old_count)) return false;
    }
    if (pos >= line.size() || line[pos] != ' ') return false;
    ++pos;
    if (pos >= line.size() || line[pos] != '+') return false;
    ++pos;
    if (!read_int(h.new_start)) return false;
    h.new_count = 1;
    if (pos < line.size() && line[pos] == ',') {
        ++pos;
        if (!read_int(h.new_count)) return false;
    }
    return true;
}

inline std::string strip_diff_path(std::string_view p) {
    p = text::trim(p);
    // drop timestamp after a tab, and a/ b/ prefixes
    auto tab = p.find('\t');
    if (tab != std::string_view::npos) p = p.substr(0, tab);
    if (text::starts_with(p, "a/") || text::starts_with(p, "b/"))
        p = p.substr(2);
    return std::string(p);
}

}  // namespace detail

// Parses a unified diff possibly covering several files.
inline std::vector<FileDiff> parse_unified_diff(std::string_view diff_text) {
    std::vector<FileDiff> diffs;
    auto lines = text::split_lines(diff_text);
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        if (text::starts_with(line, "--- ")) {
            FileDiff fd;
            fd.old_path = detail::strip_diff_path(
                std::string_view(line).substr(4));
            ++i;
            if (i >= lines.size() || !text::starts_with(lines[i], "+++ "))
                throw MalformedReport("expected +++ after --- in diff");
            fd.new_path = detail::strip_diff_path(
                std::string_view(lines[i]).substr(4));
            ++i;
            while (i < lines.size() && text::starts_with(lines[i], "@@ ")) {
                Hunk h;
                if (!detail::parse_hunk_header(lines[i], h))
                    throw MalformedReport("bad hunk header: " + lines[i]);
                ++i;
                int seen_old = 0, seen_new = 0;
                while (i < lines.size() &&
                       (seen_old < h.old_count || seen_new < h.new_count)) {
                    const std::string& l = lines[i];
                    if (l.empty()) {
                        // blank context line with the leading space trimmed
                        h.lines.push_back({' ', ""});
                        ++seen_old;
                        ++seen_new;
                    } else if (l[0] == '\\') {
                        // "\ No newline at end of file"
                    } else if (l[0] == ' ' || l[0] == '-' || l[0] == '+') {
                        h.lines.push_back({l[0], l.substr(1)});
                        if (l[0] != '+') ++seen_old;
                        if (l[0] != '-') ++seen_new;
                    } else {
                        throw MalformedReport("unexpected diff line: " + l);
                    }
                    ++i;
                }
                fd.hunks.push_back(std::move(h));
            }
            diffs.push_back(std::move(fd));
        } else {
            ++i;  // git headers, index lines, commit message noise
        }
    }
    return diffs;
}

// Applies a single-file diff; throws PatchDoesNotApply on any mismatch.
inline std::string apply_patch(std::string_view original, const FileDiff& fd) {
    auto orig = text::split_lines(original);
    std::vector<std::string> out;
    std::size_t cursor = 0;  // 0-based index into orig
    for (const Hunk& h : fd.hunks) {
        std::size_t hunk_begin =
            h.old_count == 0 ? std::size_t(h.old_start)
                             : std::size_t(h.old_start - 1);
        if (hunk_begin < cursor || hunk_begin > orig.size())
            throw PatchDoesNotApply("hunk start out of order");
        while (cursor < hunk_begin) out.push_back(orig[cursor++]);
        for (const DiffLine& dl : h.lines) {
            if (dl.tag == '+') {
                out.push_back(dl.content);
                continue;
            }
            if (cursor >= orig.size() || orig[cursor] != dl.content)
                throw PatchDoesNotApply("context mismatch at line " +
                                        std::to_string(cursor + 1));
            if (dl.tag == ' ') out.push_back(orig[cursor]);
            ++cursor;
        }
    }
    while (cursor < orig.size()) out.push_back(orig[cursor++]);
    bool had_trailing_nl = !original.empty() && original.back() == '\n';
    return text::join_lines(out, had_trailing_nl);
}

// 1-based original line numbers touched by the diff. Pure insertions count
// the original line the insertion displaces.
inline std::vector<int> modified_original_lines(const FileDiff& fd) {
    std::vector<int> touched;
    for (const Hunk& h : fd.hunks) {
        int old_line = h.old_start;
        bool pure_insert = true;
        for (const DiffLine& dl : h.lines) {
            if (dl.tag == '-') {
                touched.push_back(old_line);
                pure_insert = false;
            }
            if (dl.tag != '+') ++old_line;
        }
        if (pure_insert) {
            // locate the first '+' run and mark the displaced original line
            int pos = h.old_start;
            for (const DiffLine& dl : h.lines) {
                if (dl.tag == '+') {
                    touched.push_back(pos);
                    break;
                }
                ++pos;
            }
        }
    }
    return touched;
}

}  // namespace repairkit
