#pragma once

// Repair-prompt templates. Seven template ids ranging from "no help" to
// fully commented-out buggy code with the analyzer message.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repairkit/bug_report.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/scenario.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

enum class TemplateId { nh, s1, s2, c, cm, ca, cn };

inline constexpr std::array<TemplateId, 7> kAllTemplates = {
    TemplateId::nh, TemplateId::s1, TemplateId::s2, TemplateId::c,
    TemplateId::cm, TemplateId::ca, TemplateId::cn};

inline std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::nh: return "nh";
        case TemplateId::s1: return "s1";
        case TemplateId::s2: return "s2";
        case TemplateId::c: return "c";
        case TemplateId::cm: return "cm";
        case TemplateId::ca: return "ca";
        case TemplateId::cn: return "cn";
    }
    return "nh";
}

inline TemplateId template_from_string(std::string_view s) {
    for (TemplateId id : kAllTemplates)
        if (to_string(id) == s) return id;
    throw UsageError("unknown template id: " + std::string(s));
}

enum class CommentStyle { line_slash, block_c, line_hash };

struct PromptTemplate {
    TemplateId id = TemplateId::nh;
    bool includes_commented_code = false;
    bool includes_message = false;
    bool includes_first_token = false;
    CommentStyle comment_style = CommentStyle::line_slash;

    static PromptTemplate make(TemplateId id, Language lang) {
        PromptTemplate t;
        t.id = id;
        t.includes_commented_code =
            id == TemplateId::c || id == TemplateId::cm ||
            id == TemplateId::ca || id == TemplateId::cn;
        t.includes_message = id == TemplateId::cm;
        t.includes_first_token = id == TemplateId::c ||
                                 id == TemplateId::cm ||
                                 id == TemplateId::ca;
        // ca/cn always use the alternative block style
        if (id == TemplateId::ca || id == TemplateId::cn)
            t.comment_style = CommentStyle::block_c;
        else
            t.comment_style = lang == Language::python
                                  ? CommentStyle::line_hash
                                  : CommentStyle::line_slash;
        return t;
    }
};

struct RenderedPrompt {
    std::string text;
    int token_count = 0;
    std::vector<std::string> stop_words;
    std::string template_id;
    std::string engine_id;
};

// Prefixes every line with the style's marker. Blank lines get a bare
// marker so the block stays visually contiguous. block_c wraps the whole
// text in /* ... */ with " * " continuations; embedded "*/" is escaped.
inline std::string comment_out(std::string_view code, CommentStyle style) {
    auto lines = text::split_lines(code);
    if (lines.empty()) lines.push_back("");
    std::string out;
    switch (style) {
        case CommentStyle::line_slash:
        case CommentStyle::line_hash: {
            const char* marker =
                style == CommentStyle::line_slash ? "//" : "#";
            for (std::size_t i = 0; i < lines.size(); ++i) {
                out += marker;
                if (!lines[i].empty()) {
                    out += ' ';
                    out += lines[i];
                }
                out += '\n';
            }
            break;
        }
        case CommentStyle::block_c: {
            for (std::size_t i = 0; i < lines.size(); ++i) {
                std::string body = text::replace_all(lines[i], "*/", "*\\/");
                out += i == 0 ? "/*" : " *";
                if (!body.empty()) {
                    out += ' ';
                    out += body;
                }
                out += '\n';
            }
            out += " */\n";
            break;
        }
    }
    return out;
}

// Inverse of comment_out; used by the echo-mutation mock engine and tests.
inline std::string uncomment(std::string_view commented, CommentStyle style) {
    auto lines = text::split_lines(commented);
    std::vector<std::string> out;
    auto strip = [](std::string_view l, std::string_view marker) {
        if (l == marker) return std::string();
        if (text::starts_with(l, std::string(marker) + " "))
            return std::string(l.substr(marker.size() + 1));
        return std::string(l);
    };
    switch (style) {
        case CommentStyle::line_slash:
            for (const auto& l : lines) out.push_back(strip(l, "//"));
            break;
        case CommentStyle::line_hash:
            for (const auto& l : lines) out.push_back(strip(l, "#"));
            break;
        case CommentStyle::block_c:
            for (std::size_t i = 0; i < lines.size(); ++i) {
                if (i == 0 && text::starts_with(lines[i], "/*")) {
                    auto rest = lines[i].substr(2);
                    out.push_back(rest.empty() ? ""
                                               : std::string(rest.substr(1)));
                } else if (i + 1 == lines.size() &&
                           text::trim(lines[i]) == "*/") {
                    // closing line carries no content
                } else {
                    out.push_back(strip(lines[i], " *"));
                }
            }
            for (auto& l : out) l = text::replace_all(l, "*\\/", "*/");
            break;
    }
    return text::join_lines(out);
}

// First whitespace-delimited lexical word of the first non-blank line:
// an identifier/keyword run, or a punctuation run.
inline std::string extract_first_token(std::string_view code) {
    for (const auto& line : text::split_lines(code)) {
        auto t = text::ltrim(line);
        if (t.empty()) continue;
        auto is_word = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        };
        std::size_t n = 1;
        if (is_word(t[0])) {
            while (n < t.size() && is_word(t[n])) ++n;
        } else {
            while (n < t.size() && !is_word(t[n]) &&
                   !std::isspace(static_cast<unsigned char>(t[n])))
                ++n;
        }
        return std::string(t.substr(0, n));
    }
    throw BlankCode("cannot take first token of blank code");
}

struct RenderOptions {
    // commented templates may include this many known-safe lines past the
    // bug span so grafting has an anchor to match against
    int extra_safe_lines = 0;
};

namespace detail {

inline std::string single_comment_line(std::string_view content,
                                       CommentStyle style) {
    switch (style) {
        case CommentStyle::line_slash:
            return "// " + std::string(content) + "\n";
        case CommentStyle::line_hash:
            return "# " + std::string(content) + "\n";
        case CommentStyle::block_c:
            return "/* " + std::string(content) + " */\n";
    }
    throw UnsupportedCommentStyle("bad comment style");
}

inline std::string indent_block(std::string_view block,
                                const std::string& indent) {
    std::string out;
    for (const auto& l : text::split_lines(block)) {
        out += indent;
        out += l;
        out += '\n';
    }
    return out;
}

}  // namespace detail

// The template block alone (comments, commented-out code, trailing first
// token), without the file prefix. context_reducer appends this verbatim.
inline std::string render_template_block(std::string_view file_text,
                                         const BugLocationOracle& oracle,
                                         const BugReport& report,
                                         const PromptTemplate& tmpl,
                                         const RenderOptions& opts = {}) {
    auto lines = text::split_lines(file_text);
    if (oracle.bug_end > static_cast<int>(lines.size()))
        throw SpanOutsideFile("bug span exceeds file");
    oracle.validate(static_cast<int>(lines.size()));

    const std::string indent =
        text::indent_of(lines[std::size_t(oracle.bug_start - 1)]);

    if (tmpl.id == TemplateId::nh) return "";
    if (tmpl.id == TemplateId::s1)
        return indent + detail::single_comment_line(
                            "bugfix: fixed " + report.error_name,
                            tmpl.comment_style);
    if (tmpl.id == TemplateId::s2)
        return indent + detail::single_comment_line(
                            "fixed " + report.error_name + " bug",
                            tmpl.comment_style);

    // commented-code family: BUG / [MESSAGE] / commented code / FIXED
    int block_end = std::min(oracle.bug_end + opts.extra_safe_lines,
                             static_cast<int>(lines.size()));
    std::string inner;
    inner += "BUG: " + report.error_name + "\n";
    if (tmpl.includes_message)
        inner += "MESSAGE: " + report.error_message + "\n";
    for (int i = oracle.bug_start; i <= block_end; ++i)
        inner += lines[std::size_t(i - 1)] + "\n";
    inner += tmpl.includes_message ? "FIXED VERSION:" : "FIXED:";

    std::string block =
        detail::indent_block(comment_out(inner, tmpl.comment_style), indent);

    if (tmpl.includes_first_token) {
        std::string buggy;
        for (int i = oracle.bug_start; i <= oracle.bug_end; ++i)
            buggy += lines[std::size_t(i - 1)] + "\n";
        block += indent + extract_first_token(buggy);
    }
    return block;
}

// Full repair prompt: the unmodified file prefix up to the bug, then the
// template block. Ends mid-line when a first token is appended.
inline std::string render_repair_prompt(std::string_view file_text,
                                        const BugLocationOracle& oracle,
                                        const BugReport& report,
                                        const PromptTemplate& tmpl,
                                        const RenderOptions& opts = {}) {
    auto lines = text::split_lines(file_text);
    oracle.validate(static_cast<int>(lines.size()));
    std::string out;
    for (int i = 1; i < oracle.bug_start; ++i)
        out += lines[std::size_t(i - 1)] + "\n";
    out += render_template_block(file_text, oracle, report, tmpl, opts);
    return out;
}

}  // namespace repairkit
