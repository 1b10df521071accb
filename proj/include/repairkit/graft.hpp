#pragma once

// Splices a model suggestion back into the original file. The suggestion is
// cut where it starts overlapping the known-safe tail of the original; with
// no overlap it is truncated at its last newline instead.

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repairkit/errors.hpp"
#include "repairkit/scenario.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

struct OverlapMatch {
    std::size_t suggestion_offset = 0;
    int length = 0;
};

struct GraftTrace {
    int overlap_len_used = 0;  // 0 on the fallback path
    bool fallback_last_newline = false;
    std::size_t inserted_begin = 0;  // char range of the accepted region
    std::size_t inserted_end = 0;    // in the output file, half-open
};

struct GraftedFile {
    std::string file_text;
    GraftTrace trace;
};

// Overlap search schedule: 30 chars down to 5 in steps of 5.
inline std::optional<OverlapMatch> find_overlap(std::string_view suggestion,
                                                std::string_view safe_tail) {
    for (int len = 30; len >= 5; len -= 5) {
        std::size_t needle_len =
            std::min<std::size_t>(std::size_t(len), safe_tail.size());
        if (needle_len < 5) break;
        auto needle = safe_tail.substr(0, needle_len);
        auto pos = suggestion.find(needle);
        if (pos != std::string_view::npos)
            return OverlapMatch{pos, static_cast<int>(needle_len)};
    }
    return std::nullopt;
}

inline GraftedFile graft(std::string_view original,
                         const BugLocationOracle& oracle,
                         std::string_view suggestion) {
    auto lines = text::split_lines(original);
    oracle.validate(static_cast<int>(lines.size()));

    std::string prefix;
    for (int i = 1; i < oracle.bug_start; ++i)
        prefix += lines[std::size_t(i - 1)] + "\n";
    std::string tail;
    for (int i = oracle.safe_resume_line;
         i <= static_cast<int>(lines.size()); ++i)
        tail += lines[std::size_t(i - 1)] + "\n";

    GraftTrace trace;
    std::string accepted;
    if (auto m = find_overlap(suggestion, tail)) {
        accepted = std::string(suggestion.substr(0, m->suggestion_offset));
        trace.overlap_len_used = m->length;
    } else {
        auto nl = suggestion.rfind('\n');
        if (nl == std::string_view::npos)
            throw EmptySuggestion("suggestion has no complete line");
        accepted = std::string(suggestion.substr(0, nl + 1));
        trace.fallback_last_newline = true;
    }
    if (text::is_blank(accepted) && trace.fallback_last_newline)
        throw EmptySuggestion("suggestion blank after truncation");

    trace.inserted_begin = prefix.size();
    trace.inserted_end = prefix.size() + accepted.size();
    return GraftedFile{prefix + accepted + tail, trace};
}

// Rebalances Verilog structural keywords: surplus trailing end/endmodule
// are dropped from the end of the file, deficits appended.
inline std::string hdl_postprocess(std::string_view source) {
    auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    auto count_word = [&](std::string_view s, std::string_view w) {
        int n = 0;
        std::size_t pos = 0;
        while ((pos = s.find(w, pos)) != std::string_view::npos) {
            bool left_ok = pos == 0 || !is_word(s[pos - 1]);
            std::size_t after = pos + w.size();
            bool right_ok = after >= s.size() || !is_word(s[after]);
            if (left_ok && right_ok) ++n;
            pos = after;
        }
        return n;
    };

    std::string out(source);
    auto last_word = [&]() -> std::pair<std::size_t, std::string> {
        std::size_t end = out.size();
        while (end > 0 &&
               std::isspace(static_cast<unsigned char>(out[end - 1])))
            --end;
        std::size_t begin = end;
        while (begin > 0 && is_word(out[begin - 1])) --begin;
        return {begin, out.substr(begin, end - begin)};
    };

    // strip surplus trailing keywords
    for (;;) {
        int modules = count_word(out, "module") - count_word(out, "endmodule");
        int begins = count_word(out, "begin") - count_word(out, "end");
        auto [pos, word] = last_word();
        if (word == "endmodule" && modules < 0)
            out.erase(pos);
        else if (word == "end" && begins < 0)
            out.erase(pos);
        else
            break;
    }

    if (!out.empty() && out.back() != '\n') out += '\n';
    int missing_end = count_word(out, "begin") - count_word(out, "end");
    for (int i = 0; i < missing_end; ++i) out += "end\n";
    int missing_endmodule =
        count_word(out, "module") - count_word(out, "endmodule");
    for (int i = 0; i < missing_endmodule; ++i) out += "endmodule\n";
    return out;
}

}  // namespace repairkit
