#pragma once

// Vulnerability scenarios: manifest load/store, validation, and
// bug-location oracles derived from developer patches.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "repairkit/diff.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

enum class Language { c, python, verilog };

inline std::string to_string(Language l) {
    switch (l) {
        case Language::c: return "c";
        case Language::python: return "python";
        case Language::verilog: return "verilog";
    }
    return "c";
}

inline Language language_from_string(std::string_view s) {
    if (s == "c") return Language::c;
    if (s == "python") return Language::python;
    if (s == "verilog") return Language::verilog;
    throw MalformedReport("unknown language: " + std::string(s));
}

// 1-based inclusive span of buggy lines plus the resumption point where the
// original file is known safe again.
struct BugLocationOracle {
    int bug_start = 0;
    int bug_end = 0;
    int safe_resume_line = 0;
    int enclosing_function_start = 0;

    void validate(int file_line_count) const {
        bool ok = enclosing_function_start >= 1 &&
                  enclosing_function_start <= bug_start &&
                  bug_start <= bug_end && bug_end < safe_resume_line &&
                  safe_resume_line <= file_line_count;
        if (!ok)
            throw OracleOutOfRange(
                "oracle lines violate ordering: function_start=" +
                std::to_string(enclosing_function_start) + " bug=[" +
                std::to_string(bug_start) + "," + std::to_string(bug_end) +
                "] safe_resume=" + std::to_string(safe_resume_line) +
                " lines=" + std::to_string(file_line_count));
    }
};

struct SecurityCheckSpec {
    enum class Kind { static_analysis, dynamic };
    Kind kind = Kind::dynamic;
    // static
    std::string analyzer_cmd;
    std::vector<std::string> queries;
    // dynamic
    std::string sanitizer_flags;
    std::string poc_input;
    std::string crash_signature;
};

struct RepairScenario {
    std::string id;
    Language language = Language::c;
    std::string cwe_tag;
    std::vector<std::pair<std::string, std::string>> source_files;  // path, text
    std::string target_file;
    std::string build_cmd;
    std::vector<std::string> functional_tests;
    SecurityCheckSpec security;
    std::optional<BugLocationOracle> oracle;
    std::optional<std::string> generation_prompt;
    std::string generation_prompt_file;  // manifest round-trip only

    const std::string& target_text() const {
        for (const auto& [path, body] : source_files)
            if (path == target_file) return body;
        throw DanglingSourceReference("target_file not in sources: " +
                                      target_file);
    }

    int target_line_count() const {
        return static_cast<int>(text::split_lines(target_text()).size());
    }

    void validate() const {
        bool target_found = false;
        for (const auto& [path, body] : source_files)
            if (path == target_file) target_found = true;
        if (!target_found)
            throw DanglingSourceReference("target_file not listed in sources: " +
                                          target_file);
        if (!oracle && !generation_prompt)
            throw MalformedReport(
                "scenario needs an oracle or a generation prompt: " + id);
        if (security.kind == SecurityCheckSpec::Kind::dynamic &&
            security.poc_input.empty())
            throw MalformedReport(
                "dynamic security check requires a proof-of-concept input: " +
                id);
        if (oracle) oracle->validate(target_line_count());
    }
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DanglingSourceReference("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view body) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

}  // namespace detail

// Loads a scenario directory containing scenario.json plus referenced sources.
inline RepairScenario load_scenario(const std::filesystem::path& root) {
    auto manifest_path = root / "scenario.json";
    if (!std::filesystem::exists(manifest_path))
        throw MissingManifest("no scenario.json under " + root.string());

    nlohmann::json j;
    try {
        std::ifstream in(manifest_path);
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedReport("scenario.json parse error: " +
                              std::string(e.what()));
    }

    RepairScenario s;
    s.id = j.at("id").get<std::string>();
    s.language = language_from_string(j.at("language").get<std::string>());
    s.cwe_tag = j.at("cwe").get<std::string>();
    s.target_file = j.at("target_file").get<std::string>();
    for (const auto& src : j.at("sources")) {
        auto rel = src.get<std::string>();
        auto p = root / rel;
        if (!std::filesystem::exists(p))
            throw DanglingSourceReference("missing source file: " + rel);
        s.source_files.emplace_back(rel, detail::read_file(p));
    }
    s.build_cmd = j.at("build_cmd").get<std::string>();
    for (const auto& t : j.at("functional_tests"))
        s.functional_tests.push_back(t.get<std::string>());

    const auto& sec = j.at("security");
    auto kind = sec.at("kind").get<std::string>();
    if (kind == "static") {
        s.security.kind = SecurityCheckSpec::Kind::static_analysis;
        s.security.analyzer_cmd = sec.at("analyzer_cmd").get<std::string>();
        for (const auto& q : sec.at("queries"))
            s.security.queries.push_back(q.get<std::string>());
    } else if (kind == "dynamic") {
        s.security.kind = SecurityCheckSpec::Kind::dynamic;
        s.security.sanitizer_flags =
            sec.value("sanitizer_flags", std::string());
        s.security.poc_input = sec.at("poc_input").get<std::string>();
        s.security.crash_signature = sec.at("crash_signature").get<std::string>();
    } else {
        throw MalformedReport("unknown security kind: " + kind);
    }

    if (j.contains("oracle")) {
        const auto& o = j["oracle"];
        BugLocationOracle oracle;
        oracle.bug_start = o.at("bug_start").get<int>();
        oracle.bug_end = o.at("bug_end").get<int>();
        oracle.safe_resume_line = o.at("safe_resume").get<int>();
        oracle.enclosing_function_start = o.at("function_start").get<int>();
        s.oracle = oracle;
    }
    if (j.contains("generation_prompt_file")) {
        s.generation_prompt_file =
            j["generation_prompt_file"].get<std::string>();
        auto p = root / s.generation_prompt_file;
        if (!std::filesystem::exists(p))
            throw DanglingSourceReference("missing generation prompt file: " +
                                          s.generation_prompt_file);
        s.generation_prompt = detail::read_file(p);
    }
    s.validate();
    return s;
}

// Writes scenario.json + sources so load_scenario(root) round-trips.
inline void write_scenario(const RepairScenario& s,
                           const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["language"] = to_string(s.language);
    j["cwe"] = s.cwe_tag;
    j["target_file"] = s.target_file;
    auto srcs = nlohmann::ordered_json::array();
    for (const auto& [path, body] : s.source_files) {
        srcs.push_back(path);
        detail::write_file(root / path, body);
    }
    j["sources"] = srcs;
    j["build_cmd"] = s.build_cmd;
    j["functional_tests"] = s.functional_tests;
    nlohmann::ordered_json sec;
    if (s.security.kind == SecurityCheckSpec::Kind::static_analysis) {
        sec["kind"] = "static";
        sec["analyzer_cmd"] = s.security.analyzer_cmd;
        sec["queries"] = s.security.queries;
    } else {
        sec["kind"] = "dynamic";
        sec["sanitizer_flags"] = s.security.sanitizer_flags;
        sec["poc_input"] = s.security.poc_input;
        sec["crash_signature"] = s.security.crash_signature;
    }
    j["security"] = sec;
    if (s.oracle) {
        j["oracle"] = {{"bug_start", s.oracle->bug_start},
                       {"bug_end", s.oracle->bug_end},
                       {"safe_resume", s.oracle->safe_resume_line},
                       {"function_start", s.oracle->enclosing_function_start}};
    }
    if (s.generation_prompt) {
        std::string rel = s.generation_prompt_file.empty()
                              ? "generation_prompt.txt"
                              : s.generation_prompt_file;
        j["generation_prompt_file"] = rel;
        detail::write_file(root / rel, *s.generation_prompt);
    }
    std::ofstream out(root / "scenario.json");
    out << j.dump(2) << "\n";
}

// Nearest preceding function-definition line, by language heuristic.
inline int find_enclosing_function_start(
    const std::vector<std::string>& lines, int bug_start, Language lang) {
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    for (int i = bug_start; i >= 1; --i) {
        const std::string& line = lines[std::size_t(i - 1)];
        if (line.empty()) continue;
        if (lang == Language::python) {
            auto t = text::ltrim(line);
            if (text::starts_with(t, "def ") ||
                text::starts_with(t, "async def ") ||
                text::starts_with(t, "@")) {
                // swallow a contiguous decorator block above the def
                int start = i;
                while (start > 1) {
                    auto prev = text::ltrim(lines[std::size_t(start - 2)]);
                    if (text::starts_with(prev, "@"))
                        --start;
                    else
                        break;
                }
                return start;
            }
        } else {
            // declaration-looking line at column 0, or a Verilog module
            if (lang == Language::verilog &&
                text::starts_with(text::ltrim(line), "module"))
                return i;
            if (i < bug_start && is_word_char(line[0]) &&
                !text::starts_with(line, "return"))
                return i;
        }
    }
    return 1;
}

// Derives a bug-location oracle from a developer patch that touches exactly
// one file. Multi-hunk patches merge into one span from the first to the
// last modified line.
inline BugLocationOracle derive_oracle_from_patch(std::string_view original,
                                                  std::string_view patch,
                                                  Language lang = Language::c) {
    auto diffs = parse_unified_diff(patch);
    if (diffs.empty() || diffs[0].hunks.empty())
        throw EmptyPatch("patch contains no hunks");
    if (diffs.size() > 1)
        throw MultiFilePatch("patch touches " + std::to_string(diffs.size()) +
                             " files");
    const FileDiff& fd = diffs[0];
    apply_patch(original, fd);  // throws PatchDoesNotApply on mismatch

    auto touched = modified_original_lines(fd);
    if (touched.empty()) throw EmptyPatch("patch modifies no lines");
    auto lines = text::split_lines(original);
    int line_count = static_cast<int>(lines.size());

    BugLocationOracle o;
    o.bug_start = *std::min_element(touched.begin(), touched.end());
    o.bug_end = *std::max_element(touched.begin(), touched.end());
    if (o.bug_end >= line_count)
        throw OracleOutOfRange("patch touches the last line; no safe resume");
    o.safe_resume_line = o.bug_end + 1;
    o.enclosing_function_start =
        find_enclosing_function_start(lines, o.bug_start, lang);
    o.validate(line_count);
    return o;
}

}  // namespace repairkit
