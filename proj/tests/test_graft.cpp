#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <random>

#include "repairkit/graft.hpp"

using namespace repairkit;

namespace {

const std::string kOriginal =
    "#include <stdio.h>\n"                       // 1
    "int scale(int x) {\n"                       // 2
    "    int y = x * 100;\n"                     // 3  bug
    "    return y;\n"                            // 4  bug
    "}\n"                                        // 5
    "int main(void) { return scale(3); }\n";     // 6

BugLocationOracle oracle() {
    BugLocationOracle o;
    o.bug_start = 3;
    o.bug_end = 4;
    o.safe_resume_line = 5;
    o.enclosing_function_start = 2;
    return o;
}

std::string tail() {
    return "}\nint main(void) { return scale(3); }\n";
}

}  // namespace

TEST_CASE("find_overlap prefers the longest window") {
    std::string safe = "}\nint main(void) { return scale(3); }\n";
    // suggestion contains a verbatim 30+ char copy of the tail
    std::string sugg = "    fixed();\n" + safe.substr(0, 34) + " trailing";
    auto m = find_overlap(sugg, safe);
    REQUIRE(m.has_value());
    CHECK(m->length == 30);
    CHECK(m->suggestion_offset == 13);
}

TEST_CASE("find_overlap steps down to shorter windows") {
    std::string safe = "}\nint main(void) { return scale(3); }\n";
    std::string sugg = "    fixed();\n" + safe.substr(0, 7);  // only 7 chars
    auto m = find_overlap(sugg, safe);
    REQUIRE(m.has_value());
    CHECK(m->length == 5);  // 30..10 fail, 5 matches
    CHECK(m->suggestion_offset == 13);
}

TEST_CASE("short tails clamp the needle") {
    auto m = find_overlap("x\nabcde", "abcde");
    REQUIRE(m.has_value());
    CHECK(m->length == 5);
    CHECK_FALSE(find_overlap("anything", "abc").has_value());  // tail < 5
    CHECK_FALSE(find_overlap("no match here", "abcdefgh").has_value());
}

TEST_CASE("graft with overlap keeps the whole tail exactly once") {
    std::string sugg =
        "    long y = (long)x * 100;\n    return (int)y;\n" + tail();
    auto g = graft(kOriginal, oracle(), sugg);
    CHECK(g.file_text ==
          "#include <stdio.h>\n"
          "int scale(int x) {\n"
          "    long y = (long)x * 100;\n"
          "    return (int)y;\n" +
              tail());
    CHECK(g.trace.overlap_len_used == 30);
    CHECK_FALSE(g.trace.fallback_last_newline);
    // inserted range points at the accepted region
    auto inserted = g.file_text.substr(
        g.trace.inserted_begin, g.trace.inserted_end - g.trace.inserted_begin);
    CHECK(inserted == "    long y = (long)x * 100;\n    return (int)y;\n");
}

TEST_CASE("no overlap falls back to last-newline truncation") {
    std::string sugg = "    safe();\n    also_safe();\n    int dangling = ";
    auto g = graft(kOriginal, oracle(), sugg);
    CHECK(g.trace.fallback_last_newline);
    CHECK(g.trace.overlap_len_used == 0);
    CHECK(g.file_text ==
          "#include <stdio.h>\n"
          "int scale(int x) {\n"
          "    safe();\n    also_safe();\n" +
              tail());
}

TEST_CASE("useless suggestions are rejected") {
    CHECK_THROWS_AS(graft(kOriginal, oracle(), "no newline at all"),
                    EmptySuggestion);
    CHECK_THROWS_AS(graft(kOriginal, oracle(), "   \n  \n"), EmptySuggestion);
}

// Property: for random suggestions over a corpus of synthetic files, the
// grafted output always starts with the prefix and ends with the safe tail,
// and the tail appears exactly once after the insertion point.
TEST_CASE("graft corpus property: prefix/tail preserved") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 300; ++trial) {
        int body = 6 + int(rng() % 20);
        std::vector<std::string> lines;
        lines.push_back("int f_" + std::to_string(trial) + "(void)");
        lines.push_back("{");
        for (int i = 0; i < body; ++i)
            lines.push_back("    stmt_" + std::to_string(i) + "();");
        lines.push_back("    return " + std::to_string(trial) + ";");
        lines.push_back("}");
        std::string original = text::join_lines(lines);

        BugLocationOracle o;
        o.enclosing_function_start = 1;
        o.bug_start = 3 + int(rng() % (body - 2));
        o.bug_end = o.bug_start + int(rng() % 2);
        o.safe_resume_line = o.bug_end + 1;

        std::string prefix, tail_s;
        for (int i = 1; i < o.bug_start; ++i) prefix += lines[i - 1] + "\n";
        for (int i = o.safe_resume_line; i <= int(lines.size()); ++i)
            tail_s += lines[i - 1] + "\n";

        std::string sugg = "    replacement_a();\n    replacement_b();\n";
        bool with_echo = rng() % 2 == 0;
        if (with_echo) sugg += tail_s;  // model echoed the rest of the file

        auto g = graft(original, o, sugg);
        REQUIRE(g.file_text.substr(0, prefix.size()) == prefix);
        REQUIRE(g.file_text.size() >= tail_s.size());
        CHECK(g.file_text.substr(g.file_text.size() - tail_s.size()) ==
              tail_s);
        // exactly one copy of the tail after the insertion point
        std::size_t first = g.file_text.find(tail_s, g.trace.inserted_begin);
        CHECK(first == g.file_text.size() - tail_s.size());
        CHECK(g.trace.fallback_last_newline == !with_echo);
    }
}

TEST_CASE("hdl_postprocess basic balancing") {
    // missing endmodule is appended
    CHECK(hdl_postprocess("module m(input a);\nassign b = a;\n") ==
          "module m(input a);\nassign b = a;\nendmodule\n");
    // surplus trailing endmodule is stripped
    CHECK(hdl_postprocess(
              "module m;\nendmodule\nendmodule\n") == "module m;\nendmodule\n");
    // begin without end gets an end before the endmodule
    auto out = hdl_postprocess(
        "module m;\nalways @(posedge c) begin\n  q <= d;\n");
    CHECK(out ==
          "module m;\nalways @(posedge c) begin\n  q <= d;\nend\nendmodule\n");
    // balanced input is unchanged
    std::string ok =
        "module m;\nalways @(posedge c) begin\n  q <= d;\nend\nendmodule\n";
    CHECK(hdl_postprocess(ok) == ok);
}

TEST_CASE("hdl_postprocess ignores keywords inside identifiers") {
    std::string src = "module m;\nwire endmodule_like;\nwire beginner;\n";
    auto out = hdl_postprocess(src);
    // "endmodule_like" and "beginner" are not keywords
    CHECK(out == src + "endmodule\n");
}

// Independent oracle: a separate token-scanner counts the keywords in the
// output; every output must be balanced and differ from the input only at
// the very end.
TEST_CASE("500 perturbed modules always come out balanced") {
    auto tokens_balance = [](const std::string& s) {
        int modules = 0, begins = 0;
        std::string word;
        auto flush = [&]() {
            if (word == "module") ++modules;
            else if (word == "endmodule") --modules;
            else if (word == "begin") ++begins;
            else if (word == "end") --begins;
            word.clear();
        };
        for (char c : s) {
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
                word += c;
            else
                flush();
        }
        flush();
        return std::pair<int, int>{modules, begins};
    };

    std::mt19937 rng(777);
    const std::string base =
        "module lock(input clk, input resetn, output reg locked);\n"
        "always @(posedge clk) begin\n"
        "  if (!resetn) locked <= 1;\n"
        "  else if (unlock) locked <= 0;\n"
        "end\n"
        "endmodule\n";
    for (int trial = 0; trial < 500; ++trial) {
        std::string mutated = base;
        int op = int(rng() % 5);
        switch (op) {
            case 0:  // drop the trailing endmodule
                mutated = mutated.substr(0, mutated.rfind("endmodule"));
                break;
            case 1:  // drop the end as well
                mutated = mutated.substr(0, mutated.rfind("end\n"));
                break;
            case 2:  // duplicate trailing endmodule
                mutated += "endmodule\n";
                break;
            case 3:  // spurious trailing end + endmodule
                mutated += "end\nendmodule\n";
                break;
            case 4:  // truncate mid-line somewhere in the second half
                mutated = mutated.substr(
                    0, mutated.size() / 2 + rng() % (mutated.size() / 2));
                break;
        }
        auto out = hdl_postprocess(mutated);
        auto [modules, begins] = tokens_balance(out);
        CHECK(modules == 0);
        CHECK(begins >= 0);  // never more ends than begins
        CHECK(out.substr(0, 13) == "module lock(i");
    }
}
