#pragma once

// Fits oversized files into a model's token budget: keep the #define list
// and the enclosing function head, then trim whole lines from the top until
// the prompt fits. A window just before the bug and the template block are
// never trimmed.

#include <string>
#include <string_view>
#include <vector>

#include "repairkit/errors.hpp"
#include "repairkit/prompt.hpp"
#include "repairkit/scenario.hpp"
#include "repairkit/text.hpp"
#include "repairkit/tokenizer.hpp"

namespace repairkit {

struct TokenBudget {
    int engine_max_tokens = 2048;
    int reserved_for_completion = 256;

    int prompt_limit() const {
        if (reserved_for_completion <= 0 ||
            reserved_for_completion >= engine_max_tokens)
            throw Error("token budget requires 0 < reserve < max");
        return engine_max_tokens - reserved_for_completion;
    }
};

// Lines before the bug span that survive trimming no matter what.
inline constexpr int kProtectedWindowLines = 10;

inline RenderedPrompt assemble_reduced_prompt(std::string_view file_text,
                                              const BugLocationOracle& oracle,
                                              std::string_view template_block,
                                              const TokenBudget& budget,
                                              const TokenCounter& counter,
                                              Language language = Language::c) {
    auto lines = text::split_lines(file_text);
    oracle.validate(static_cast<int>(lines.size()));
    const int limit = budget.prompt_limit();

    std::vector<std::string> assembled;
    if (language == Language::c) {
        for (const auto& l : lines)
            if (text::starts_with(text::ltrim(l), "#define"))
                assembled.push_back(l);
    }
    for (int i = oracle.enclosing_function_start; i < oracle.bug_start; ++i)
        assembled.push_back(lines[std::size_t(i - 1)]);

    const std::size_t protected_from =
        assembled.size() > std::size_t(kProtectedWindowLines)
            ? assembled.size() - std::size_t(kProtectedWindowLines)
            : 0;

    auto render = [&](std::size_t first) {
        std::string out;
        for (std::size_t i = first; i < assembled.size(); ++i)
            out += assembled[i] + "\n";
        out += template_block;
        return out;
    };

    std::size_t first = 0;
    std::string prompt = render(first);
    while (count_tokens(prompt, counter) > limit) {
        if (first >= protected_from)
            throw CannotFit(
                "protected bug window and template block exceed budget");
        ++first;
        prompt = render(first);
    }

    RenderedPrompt rp;
    rp.text = std::move(prompt);
    rp.token_count = count_tokens(rp.text, counter);
    return rp;
}

}  // namespace repairkit
