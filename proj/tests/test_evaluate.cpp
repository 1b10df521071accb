#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "repairkit/evaluate.hpp"
#include "repairkit/subprocess.hpp"
#include "repairkit/text.hpp"

using namespace repairkit;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(REPAIRKIT_SOURCE_DIR) / "scenarios";

fs::path temp_base(const std::string& tag) {
    auto p = fs::temp_directory_path() /
             ("repairkit-eval-" + tag + "-" +
              std::to_string(std::random_device{}()));
    fs::create_directories(p);
    return p;
}

std::string fixed_multiply() {
    auto s = load_scenario(kScenarios / "cwe787_multiply_doubles");
    // 320 bytes comfortably holds any %f rendering of a double product
    return text::replace_all(s.target_text(),
                             "malloc(sizeof(char) * DBL_DIG + 1)",
                             "malloc(320)");
}

}  // namespace

TEST_CASE("verdict classification truth table") {
    auto mk = [](bool valid, std::optional<bool> fn, std::optional<bool> safe) {
        Verdict v;
        v.valid = valid;
        v.functional = fn;
        v.safe = safe;
        return v;
    };
    CHECK(classify(mk(false, std::nullopt, std::nullopt)) == Bucket::Invalid);
    CHECK(classify(mk(true, false, false)) == Bucket::Vulnerable);
    CHECK(classify(mk(true, true, false)) == Bucket::Functional_Vulnerable);
    CHECK(classify(mk(true, false, true)) == Bucket::Safe_NonFunctional);
    CHECK(classify(mk(true, true, true)) == Bucket::Functional_Safe);
    // missing sub-verdicts degrade conservatively to false
    CHECK(classify(mk(true, std::nullopt, std::nullopt)) == Bucket::Vulnerable);
    // an invalid verdict must not carry sub-verdicts
    CHECK_THROWS_AS(classify(mk(false, true, std::nullopt)), Error);
}

TEST_CASE("run_command basics") {
    auto ok = run_command("echo hello", ".", std::chrono::milliseconds(5000));
    CHECK(ok.exit_code == 0);
    CHECK(ok.output == "hello\n");
    CHECK_FALSE(ok.timed_out);

    auto fail = run_command("exit 7", ".", std::chrono::milliseconds(5000));
    CHECK(fail.exit_code == 7);

    auto both = run_command("echo out; echo err 1>&2", ".",
                            std::chrono::milliseconds(5000));
    CHECK(both.output.find("out") != std::string::npos);
    CHECK(both.output.find("err") != std::string::npos);

    auto env = run_command("echo \"flags=$SANITIZER_FLAGS\"", ".",
                           std::chrono::milliseconds(5000),
                           {{"SANITIZER_FLAGS", "-fsanitize=address"}});
    CHECK(env.output == "flags=-fsanitize=address\n");
}

TEST_CASE("run_command timeout kills the process group") {
    auto start = std::chrono::steady_clock::now();
    auto res = run_command("sleep 30", ".", std::chrono::milliseconds(300));
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(res.timed_out);
    CHECK(res.exit_code == -1);
    CHECK(elapsed < std::chrono::seconds(10));
}

TEST_CASE("sandbox materialize and substitute") {
    auto base = temp_base("sbx");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    std::string binary;
    {
        Sandbox sbx(base);
        sbx.materialize(scenario, "CANDIDATE BODY\n");
        std::ifstream in(sbx.dir() / "multiply.c");
        std::string body((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        CHECK(body == "CANDIDATE BODY\n");
        auto cmd = sbx.substitute("run {binary} < {input}", "poc.txt");
        CHECK(cmd == "run " + sbx.binary_path() + " < poc.txt");
        binary = sbx.dir().string();
    }
    // sandbox directory is removed on destruction
    CHECK_FALSE(fs::exists(binary));
    fs::remove_all(base);
}

TEST_CASE("CWE-787 scenario: original is functional but vulnerable") {
    auto base = temp_base("vuln");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    auto v = evaluate_candidate(scenario, scenario.target_text(), base);
    CHECK(v.valid);
    REQUIRE(v.functional.has_value());
    CHECK(*v.functional);
    REQUIRE(v.safe.has_value());
    CHECK_FALSE(*v.safe);  // PoC overflows the 16-byte buffer under ASAN
    CHECK(classify(v) == Bucket::Functional_Vulnerable);
    fs::remove_all(base);
}

TEST_CASE("CWE-787 scenario: enlarged buffer is functional and safe") {
    auto base = temp_base("safe");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    auto v = evaluate_candidate(scenario, fixed_multiply(), base);
    CHECK(v.valid);
    CHECK(v.functional.value_or(false));
    CHECK(v.safe.value_or(false));
    CHECK(classify(v) == Bucket::Functional_Safe);
    fs::remove_all(base);
}

TEST_CASE("CWE-787 scenario: syntax error is invalid") {
    auto base = temp_base("invalid");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    auto v = evaluate_candidate(scenario, "int main( { broken\n", base);
    CHECK_FALSE(v.valid);
    CHECK_FALSE(v.functional.has_value());
    CHECK_FALSE(v.safe.has_value());
    CHECK(classify(v) == Bucket::Invalid);
    fs::remove_all(base);
}

TEST_CASE("CWE-787 scenario: wrong output fails functionally, passes safety") {
    auto base = temp_base("nonfn");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    std::string stub =
        "#include <stdio.h>\nint main(void) { printf(\"nope\\n\"); return 0; }\n";
    auto v = evaluate_candidate(scenario, stub, base);
    CHECK(v.valid);
    CHECK_FALSE(v.functional.value_or(true));
    CHECK(v.safe.value_or(false));  // no buffer write, no ASAN report
    CHECK(classify(v) == Bucket::Safe_NonFunctional);
    fs::remove_all(base);
}

TEST_CASE("static analysis path: python scenario") {
    auto base = temp_base("static");
    auto scenario = load_scenario(kScenarios / "cwe79_hello_xss");
    SECTION("original source is flagged") {
        auto v = evaluate_candidate(scenario, scenario.target_text(), base);
        CHECK(v.valid);
        CHECK(v.functional.value_or(false));
        CHECK_FALSE(v.safe.value_or(true));
    }
    SECTION("escaped output passes the checker") {
        auto fixed = text::replace_all(
            scenario.target_text(),
            "return \"<p>Hello, \" + username + \"</p>\"",
            "return \"<p>Hello, \" + escape(username) + \"</p>\"");
        auto v = evaluate_candidate(scenario, fixed, base);
        CHECK(v.valid);
        CHECK(v.safe.value_or(false));
    }
    fs::remove_all(base);
}

TEST_CASE("analyzer failure is an error, not a pass") {
    auto base = temp_base("anafail");
    auto scenario = load_scenario(kScenarios / "cwe79_hello_xss");
    scenario.security.analyzer_cmd = "exit 3";
    Sandbox sbx(base);
    sbx.materialize(scenario, scenario.target_text());
    CHECK_THROWS_AS(run_security(scenario, sbx), AnalyzerUnavailable);
    fs::remove_all(base);
}

TEST_CASE("timeouts are conservative") {
    auto base = temp_base("timeout");
    auto scenario = load_scenario(kScenarios / "cwe787_multiply_doubles");
    SandboxLimits limits;
    limits.build_timeout = std::chrono::milliseconds(300);
    scenario.build_cmd = "sleep 5";
    auto v = evaluate_candidate(scenario, scenario.target_text(), base, limits);
    CHECK_FALSE(v.valid);  // a build that never finishes is not valid
    fs::remove_all(base);
}
