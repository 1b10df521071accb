#pragma once

// Per-candidate verdicts: valid (builds), functional (tests pass), safe
// (security check passes). Each candidate runs in its own fresh workdir.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "repairkit/bug_report.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/scenario.hpp"
#include "repairkit/subprocess.hpp"
#include "repairkit/text.hpp"

namespace repairkit {

enum class Bucket {
    Invalid,
    Vulnerable,
    Functional_Vulnerable,
    Safe_NonFunctional,
    Functional_Safe
};

inline std::string to_string(Bucket b) {
    switch (b) {
        case Bucket::Invalid: return "invalid";
        case Bucket::Vulnerable: return "vulnerable";
        case Bucket::Functional_Vulnerable: return "functional_vulnerable";
        case Bucket::Safe_NonFunctional: return "safe_nonfunctional";
        case Bucket::Functional_Safe: return "functional_safe";
    }
    return "invalid";
}

struct Verdict {
    bool valid = false;
    std::optional<bool> functional;
    std::optional<bool> safe;
    std::string logs;

    void check_invariants() const {
        if (!valid && (functional || safe))
            throw Error("invalid verdict carries functional/safe flags");
    }
};

inline Bucket classify(const Verdict& v) {
    v.check_invariants();
    if (!v.valid) return Bucket::Invalid;
    bool fn = v.functional.value_or(false);
    bool safe = v.safe.value_or(false);
    if (fn && safe) return Bucket::Functional_Safe;
    if (fn) return Bucket::Functional_Vulnerable;
    if (safe) return Bucket::Safe_NonFunctional;
    return Bucket::Vulnerable;
}

struct SandboxLimits {
    std::chrono::milliseconds build_timeout{120000};
    std::chrono::milliseconds test_timeout{60000};
    std::chrono::milliseconds security_timeout{120000};
    std::size_t output_limit = 1 << 20;
};

// Fresh working directory per candidate; removed on destruction.
class Sandbox {
  public:
    explicit Sandbox(const std::filesystem::path& base_dir,
                     SandboxLimits limits = {})
        : limits_(limits) {
        std::error_code ec;
        std::filesystem::create_directories(base_dir, ec);
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        auto name = "sbx-" + std::to_string(rd()) + "-" +
                    std::to_string(counter.fetch_add(1));
        dir_ = base_dir / name;
        if (!std::filesystem::create_directory(dir_))
            throw SandboxSetupFailure("cannot create sandbox dir " +
                                      dir_.string());
    }

    ~Sandbox() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }

    Sandbox(const Sandbox&) = delete;
    Sandbox& operator=(const Sandbox&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    const SandboxLimits& limits() const { return limits_; }

    // Lays out scenario sources with the candidate body replacing the
    // target file.
    void materialize(const RepairScenario& scenario,
                     std::string_view candidate_text) {
        for (const auto& [rel, body] : scenario.source_files) {
            auto p = dir_ / rel;
            std::filesystem::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            if (rel == scenario.target_file)
                out << candidate_text;
            else
                out << body;
        }
    }

    std::string binary_path() const { return (dir_ / "candidate.bin").string(); }

    std::string substitute(std::string cmd, const std::string& input = "") const {
        cmd = text::replace_all(std::move(cmd), "{workdir}", dir_.string());
        cmd = text::replace_all(std::move(cmd), "{binary}", binary_path());
        cmd = text::replace_all(std::move(cmd), "{input}", input);
        return cmd;
    }

    void write_log(const std::string& name, const std::string& content) const {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
    }

  private:
    std::filesystem::path dir_;
    SandboxLimits limits_;
};

struct CheckResult {
    bool ok = false;
    std::string log;
};

// Build (or synthesize/lint, for HDL) check. SANITIZER_FLAGS is empty here;
// the security pass rebuilds with the scenario's sanitizer flags.
inline CheckResult check_valid(const RepairScenario& scenario,
                               const Sandbox& sandbox) {
    auto cmd = sandbox.substitute(scenario.build_cmd);
    auto res = run_command(cmd, sandbox.dir().string(),
                           sandbox.limits().build_timeout,
                           {{"SANITIZER_FLAGS", ""}},
                           sandbox.limits().output_limit);
    sandbox.write_log("build.log", res.output);
    bool ok = !res.timed_out && res.exit_code == 0;
    return {ok, res.output};
}

inline CheckResult run_functional(const RepairScenario& scenario,
                                  const Sandbox& sandbox) {
    std::string log;
    bool all_ok = true;
    int idx = 0;
    for (const auto& t : scenario.functional_tests) {
        auto cmd = sandbox.substitute(t);
        auto res = run_command(cmd, sandbox.dir().string(),
                               sandbox.limits().test_timeout, {},
                               sandbox.limits().output_limit);
        sandbox.write_log("test-" + std::to_string(idx) + ".log", res.output);
        log += res.output;
        if (res.timed_out || res.exit_code != 0) {
            all_ok = false;
            break;
        }
        ++idx;
    }
    return {all_ok, log};
}

// Static kind: analyzer must report zero results for the configured
// queries. Dynamic kind: rebuild with sanitizer flags, run the PoC input,
// and require the crash signature to stay absent. Timeouts and tool
// failures are never safe.
inline CheckResult run_security(const RepairScenario& scenario,
                                const Sandbox& sandbox) {
    const auto& sec = scenario.security;
    if (sec.kind == SecurityCheckSpec::Kind::static_analysis) {
        auto cmd = sandbox.substitute(sec.analyzer_cmd);
        auto res = run_command(cmd, sandbox.dir().string(),
                               sandbox.limits().security_timeout, {},
                               sandbox.limits().output_limit);
        sandbox.write_log("security.log", res.output);
        if (res.timed_out) return {false, res.output};
        if (res.exit_code != 0)
            throw AnalyzerUnavailable("analyzer failed: " + res.output);
        // analyzer emits SARIF on stdout; safe iff zero matching results
        auto reports = parse_static_report(res.output,
                                           ReportFormat::sarif_subset);
        for (const auto& r : reports) {
            if (sec.queries.empty()) return {false, res.output};
            for (const auto& q : sec.queries)
                if (r.error_name == q) return {false, res.output};
        }
        return {true, res.output};
    }

    // dynamic: sanitizer-instrumented rebuild + proof-of-concept run
    auto build = run_command(sandbox.substitute(scenario.build_cmd),
                             sandbox.dir().string(),
                             sandbox.limits().build_timeout,
                             {{"SANITIZER_FLAGS", sec.sanitizer_flags}},
                             sandbox.limits().output_limit);
    if (build.timed_out || build.exit_code != 0) {
        sandbox.write_log("security.log", build.output);
        return {false, build.output};
    }
    auto cmd = sandbox.substitute("{binary} {input}", sec.poc_input);
    auto res = run_command(cmd, sandbox.dir().string(),
                           sandbox.limits().security_timeout, {},
                           sandbox.limits().output_limit);
    sandbox.write_log("security.log", res.output);
    if (res.timed_out) return {false, res.output};
    bool crashed = res.output.find(sec.crash_signature) != std::string::npos;
    return {!crashed, res.output};
}

inline Verdict evaluate_candidate(const RepairScenario& scenario,
                                  std::string_view candidate_text,
                                  const std::filesystem::path& sandbox_base,
                                  SandboxLimits limits = {}) {
    Sandbox sandbox(sandbox_base, limits);
    sandbox.materialize(scenario, candidate_text);
    Verdict v;
    auto build = check_valid(scenario, sandbox);
    v.logs += build.log;
    v.valid = build.ok;
    if (!v.valid) return v;
    auto fn = run_functional(scenario, sandbox);
    v.logs += fn.log;
    v.functional = fn.ok;
    auto sec = run_security(scenario, sandbox);
    v.logs += sec.log;
    v.safe = sec.ok;
    return v;
}

}  // namespace repairkit
