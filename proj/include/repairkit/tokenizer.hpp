#pragma once

// Token counting: a chars-per-token heuristic and an exact counter driven
// by a BPE merge list loaded from file.

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "repairkit/errors.hpp"

namespace repairkit {

// Greedy lowest-rank-first BPE over whitespace-delimited chunks.
class BpeVocabulary {
  public:
    // Two-column merge list: one "left right" pair per line, rank = order.
    // Lines starting with '#' and a leading version banner are skipped.
    static BpeVocabulary from_merges_text(std::string_view merges) {
        BpeVocabulary v;
        std::istringstream in{std::string(merges)};
        std::string line;
        int rank = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto sp = line.find(' ');
            if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
                continue;
            v.ranks_[{line.substr(0, sp), line.substr(sp + 1)}] = rank++;
        }
        return v;
    }

    static BpeVocabulary from_merges_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot read merges file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_merges_text(ss.str());
    }

    int count_tokens(std::string_view text) const {
        int total = 0;
        std::size_t i = 0;
        while (i < text.size()) {
            bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isspace(static_cast<unsigned char>(text[j])) != 0) ==
                       ws)
                ++j;
            total += encode_chunk(text.substr(i, j - i));
            i = j;
        }
        return total;
    }

  private:
    int encode_chunk(std::string_view chunk) const {
        std::vector<std::string> symbols;
        symbols.reserve(chunk.size());
        for (char c : chunk) symbols.emplace_back(1, c);
        while (symbols.size() > 1) {
            int best_rank = std::numeric_limits<int>::max();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                auto it = ranks_.find({symbols[i], symbols[i + 1]});
                if (it != ranks_.end() && it->second < best_rank) {
                    best_rank = it->second;
                    best_i = i;
                }
            }
            if (best_rank == std::numeric_limits<int>::max()) break;
            symbols[best_i] += symbols[best_i + 1];
            symbols.erase(symbols.begin() +
                          static_cast<std::ptrdiff_t>(best_i) + 1);
        }
        return static_cast<int>(symbols.size());
    }

    std::map<std::pair<std::string, std::string>, int> ranks_;
};

struct TokenCounter {
    enum class Kind { heuristic_chars_per_token, exact_vocabulary };
    Kind kind = Kind::heuristic_chars_per_token;
    double chars_per_token = 4.0;
    std::shared_ptr<const BpeVocabulary> vocabulary;

    static TokenCounter heuristic(double chars_per_token = 4.0) {
        TokenCounter c;
        c.kind = Kind::heuristic_chars_per_token;
        c.chars_per_token = chars_per_token;
        return c;
    }

    static TokenCounter exact(std::shared_ptr<const BpeVocabulary> vocab) {
        TokenCounter c;
        c.kind = Kind::exact_vocabulary;
        c.vocabulary = std::move(vocab);
        return c;
    }
};

inline int count_tokens(std::string_view text, const TokenCounter& counter) {
    if (counter.kind == TokenCounter::Kind::heuristic_chars_per_token) {
        return static_cast<int>(std::ceil(
            static_cast<double>(text.size()) / counter.chars_per_token));
    }
    if (!counter.vocabulary)
        throw Error("exact token counter has no vocabulary loaded");
    return counter.vocabulary->count_tokens(text);
}

}  // namespace repairkit
