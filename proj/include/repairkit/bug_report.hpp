#pragma once

// Normalizes static-analyzer result files and sanitizer crash logs into
// the bug reports that drive prompt construction.

#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "repairkit/errors.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

enum class Detector { static_analyzer, sanitizer };

struct BugReport {
    std::string file;
    int start_line = 0;
    int end_line = 0;
    std::string error_name;
    std::string error_message;
    Detector detector = Detector::static_analyzer;
    std::string raw;
};

enum class ReportFormat { sarif_subset, csv_rows };

// "stack-buffer-overflow" / "heap_buffer_overflow" -> "Stack buffer overflow"
// style casing is left to the caller; here we only flatten separators and
// lowercase. Applying it twice is a no-op.
inline std::string normalize_error_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        if (c == '-' || c == '_')
            out += ' ';
        else
            out += static_cast<char>(
                std::tolower(static_cast<unsigned char>(c)));
    }
    auto trimmed = text::trim(out);
    return std::string(trimmed);
}

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& row) {
    // minimal CSV: double-quoted fields with "" escapes
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        char c = row[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < row.size() && row[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// SARIF subset: runs[].results[].{ruleId, message.text,
// locations[0].physicalLocation.{artifactLocation.uri,
// region.{startLine,endLine}}}. CSV rows: file,start,end,name,message.
inline std::vector<BugReport> parse_static_report(std::string_view report,
                                                  ReportFormat format) {
    std::vector<BugReport> out;
    if (format == ReportFormat::sarif_subset) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(report);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedReport("SARIF parse error: " +
                                  std::string(e.what()));
        }
        if (!j.contains("runs"))
            throw MalformedReport("SARIF report has no runs[]");
        for (const auto& run : j["runs"]) {
            for (const auto& res : run.value("results",
                                             nlohmann::json::array())) {
                BugReport r;
                r.detector = Detector::static_analyzer;
                r.error_name = res.value("ruleId", std::string());
                if (res.contains("message"))
                    r.error_message =
                        res["message"].value("text", std::string());
                if (res.contains("locations") && !res["locations"].empty()) {
                    const auto& phys =
                        res["locations"][0].value("physicalLocation",
                                                  nlohmann::json::object());
                    r.file = phys.value("artifactLocation",
                                        nlohmann::json::object())
                                 .value("uri", std::string());
                    const auto& region =
                        phys.value("region", nlohmann::json::object());
                    r.start_line = region.value("startLine", 0);
                    r.end_line = region.value("endLine", r.start_line);
                }
                if (r.end_line < r.start_line) r.end_line = r.start_line;
                if (r.error_name.empty())
                    throw MalformedReport("SARIF result without ruleId");
                r.raw = res.dump();
                out.push_back(std::move(r));
            }
        }
        return out;
    }
    if (format == ReportFormat::csv_rows) {
        for (const auto& row : text::split_lines(report)) {
            if (text::is_blank(row)) continue;
            auto fields = detail::split_csv_row(row);
            if (fields.size() < 5)
                throw MalformedReport("CSV row needs 5 fields: " + row);
            BugReport r;
            r.detector = Detector::static_analyzer;
            r.file = fields[0];
            try {
                r.start_line = std::stoi(fields[1]);
                r.end_line = std::stoi(fields[2]);
            } catch (const std::exception&) {
                throw MalformedReport("CSV row has non-numeric span: " + row);
            }
            r.error_name = fields[3];
            r.error_message = fields[4];
            if (r.error_name.empty())
                throw MalformedReport("CSV row without error name: " + row);
            r.raw = row;
            out.push_back(std::move(r));
        }
        return out;
    }
    throw UnsupportedFormat("unknown static report format");
}

// ASAN/UBSAN plain-text log -> one report. error_name comes from the error
// header; the span is the topmost stack frame inside target_file.
inline BugReport parse_sanitizer_log(std::string_view log,
                                     std::string_view target_file) {
    std::string log_s(log);
    std::string kind;

    // "ERROR: AddressSanitizer: stack-buffer-overflow on address ..."
    static const std::regex asan_hdr(
        R"(ERROR:\s*\w*Sanitizer:\s*([A-Za-z0-9_-]+))");
    // "file.c:12:3: runtime error: signed integer overflow: ..."
    static const std::regex ubsan_hdr(
        R"(runtime error:\s*([^:\n]+))");
    std::smatch m;
    if (std::regex_search(log_s, m, asan_hdr)) {
        kind = m[1];
    } else if (std::regex_search(log_s, m, ubsan_hdr)) {
        kind = text::trim(m[1].str());
    } else {
        throw NoErrorHeader("no sanitizer error header in log");
    }

    BugReport r;
    r.detector = Detector::sanitizer;
    r.error_name = normalize_error_name(kind);
    r.raw = log_s;

    // frames look like "path/file.c:123" or "... file.c:123:7"
    std::string fname(target_file);
    auto base = fname.find_last_of('/');
    if (base != std::string::npos) fname = fname.substr(base + 1);
    std::string escaped;
    for (char c : fname) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
            escaped += '\\';
        escaped += c;
    }
    std::regex frame(R"(([A-Za-z0-9_./+-]*)" + escaped + R"():(\d+))");
    auto begin =
        std::sregex_iterator(log_s.begin(), log_s.end(), frame);
    if (begin == std::sregex_iterator())
        throw NoFrameInTarget("no stack frame in " + std::string(target_file));
    // topmost frame in the target file wins; several frames may hit it
    std::smatch top = *begin;
    r.file = std::string(target_file);
    r.start_line = std::stoi(top[2]);
    r.end_line = r.start_line;
    return r;
}

}  // namespace repairkit
