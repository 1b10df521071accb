#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "repairkit/cli.hpp"

using namespace repairkit;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(REPAIRKIT_SOURCE_DIR) / "scenarios";
const fs::path kFixtures = fs::path(REPAIRKIT_SOURCE_DIR) / "tests/fixtures";

fs::path temp_base(const std::string& tag) {
    auto p = fs::temp_directory_path() /
             ("repairkit-cli-" + tag + "-" +
              std::to_string(std::random_device{}()));
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parse_invocation basics") {
    auto cfg = cli::parse_invocation(
        {"repairkit", "repair", "--corpus", "corpus/", "--engine", "mock",
         "--template", "nh", "--template", "cm", "--temps", "0", "--temps",
         "0.5", "--samples", "3", "--workers", "2", "--seed", "9"});
    CHECK(cfg.subcommand == "repair");
    CHECK(cfg.corpus_root == "corpus/");
    CHECK(cfg.engines == std::vector<std::string>{"mock"});
    CHECK(cfg.templates == std::vector<std::string>{"nh", "cm"});
    CHECK(cfg.grid.temperatures == std::vector<double>{0.0, 0.5});
    CHECK(cfg.grid.samples_per_point == 3);
    CHECK(cfg.workers == 2);
    CHECK(cfg.seed == 9);
}

TEST_CASE("parse errors surface as UsageError") {
    CHECK_THROWS_AS(cli::parse_invocation({"repairkit"}), UsageError);
    CHECK_THROWS_AS(cli::parse_invocation({"repairkit", "bogus-subcommand"}),
                    UsageError);
    CHECK_THROWS_AS(cli::parse_invocation({"repairkit", "repair"}),
                    UsageError);  // --corpus is required
}

TEST_CASE("config file overrides") {
    auto dir = temp_base("cfg");
    std::ofstream(dir / "cfg.json")
        << R"({"engines":["e9"],"workers":7,"seed":4,
               "grid":{"temperatures":[0.5],"top_ps":[0.25],
                       "samples_per_point":2}})";
    auto cfg = cli::parse_invocation(
        {"repairkit", "repair", "--corpus", "c", "--config",
         (dir / "cfg.json").string()});
    CHECK(cfg.engines == std::vector<std::string>{"e9"});
    CHECK(cfg.workers == 7);
    CHECK(cfg.seed == 4);
    CHECK(cfg.grid.temperatures == std::vector<double>{0.5});
    CHECK(cfg.grid.top_ps == std::vector<double>{0.25});
    CHECK(cfg.grid.samples_per_point == 2);
    fs::remove_all(dir);
}

TEST_CASE("render-prompt output matches the library rendering byte for byte") {
    auto scenario_dir = kScenarios / "cwe787_multiply_doubles";
    std::ostringstream os, err;
    int rc = cli::dispatch({"repairkit", "render-prompt", "--scenario",
                            scenario_dir.string(), "--template-id", "cm"},
                           os, err);
    CHECK(rc == cli::kExitOk);

    // reproduce through direct library calls
    auto sc = load_scenario(scenario_dir);
    auto reports = load_reports(scenario_dir, sc);
    auto [report, _] = select_report(reports, *sc.oracle);
    auto tmpl = PromptTemplate::make(TemplateId::cm, sc.language);
    RenderOptions ropts;
    ropts.extra_safe_lines = 2;
    auto block =
        render_template_block(sc.target_text(), *sc.oracle, report, tmpl, ropts);
    auto prompt = assemble_reduced_prompt(sc.target_text(), *sc.oracle, block,
                                          TokenBudget{2048, 256},
                                          TokenCounter::heuristic());
    CHECK(os.str() == prompt.text);
    CHECK(os.str().find("// BUG:") != std::string::npos);
    CHECK(os.str().find("// FIXED VERSION:") != std::string::npos);
}

TEST_CASE("evaluate subcommand emits a verdict JSON") {
    auto dir = temp_base("eval");
    std::ofstream(dir / "broken.c") << "int main( { nope\n";
    std::ostringstream os, err;
    int rc = cli::dispatch(
        {"repairkit", "evaluate", "--scenario",
         (kScenarios / "cwe787_multiply_doubles").string(), "--candidate",
         (dir / "broken.c").string()},
        os, err);
    CHECK(rc == cli::kExitOk);
    auto j = nlohmann::json::parse(os.str());
    CHECK(j["valid"] == false);
    CHECK(j["bucket"] == "invalid");
    fs::remove_all(dir);
}

TEST_CASE("report subcommand aggregates the counts fixture") {
    std::ostringstream os, err;
    int rc = cli::dispatch(
        {"repairkit", "report", "--in",
         (kFixtures / "published_counts.csv").string(), "--group-by",
         "scenario"},
        os, err);
    CHECK(rc == cli::kExitOk);
    auto lines = text::split_lines(os.str());
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "scenario,generated,valid,functional,vulnerable,fn_vuln,fn_safe,"
          "pct_valid_repair");
    CHECK(lines[1] == "cwe-787-corpus,47500,22034,20029,21020,19538,491,2.2");
    CHECK(lines[2] == "cwe-89-corpus,11000,10796,7594,5719,4397,3197,29.6");

    // the same aggregation through the library gives the same rows
    auto report = load_counts_csv(
        read_file(kFixtures / "published_counts.csv"));
    auto rows = aggregate_metrics(report, {Dimension::scenario});
    REQUIRE(rows.size() == 2);
    CHECK(format_pct(rows[0].pct_valid_repair) == "2.2");
    CHECK(format_pct(rows[1].pct_valid_repair) == "29.6");
}

TEST_CASE("repair subcommand writes run artifacts and exits zero") {
    auto out = temp_base("runout");
    std::ostringstream os, err;
    int rc = cli::dispatch(
        {"repairkit", "repair", "--corpus",
         (kScenarios / "cwe787_multiply_doubles").string(), "--engine",
         "mock-echo", "--template", "cm", "--temps", "0", "--samples", "1",
         "--out", out.string()},
        os, err);
    CHECK(rc == cli::kExitOk);
    REQUIRE(fs::exists(out / "run.json"));
    REQUIRE(fs::exists(out / "cells.csv"));
    REQUIRE(fs::exists(out / "heatmap_fn_safe.csv"));
    REQUIRE(fs::exists(out / "heatmap_valid.csv"));

    auto run = nlohmann::json::parse(read_file(out / "run.json"));
    CHECK(run["invocation"]["subcommand"] == "repair");
    REQUIRE(run["report"]["cells"].size() == 1);
    const auto& cell = run["report"]["cells"][0];
    CHECK(cell["generated"] == 1);
    // the echo engine reintroduces the original bug: valid + functional but
    // still vulnerable
    CHECK(cell["valid"] == 1);
    CHECK(cell["fn_vuln"] == 1);
    CHECK(cell["fn_safe"] == 0);
    CHECK(run["report"]["repaired"]["cwe787-multiply-doubles"] == false);
    fs::remove_all(out);
}

TEST_CASE("usage failures map to exit code 2") {
    std::ostringstream os, err;
    CHECK(cli::dispatch({"repairkit", "nope"}, os, err) == cli::kExitUsage);
    CHECK(cli::dispatch({"repairkit", "report", "--in",
                         "/definitely/missing.csv"},
                        os, err) == cli::kExitUsage);
    CHECK(err.str().find("usage error") != std::string::npos);
}

TEST_CASE("engines-config registers extra mock engines") {
    auto dir = temp_base("engcfg");
    std::ofstream(dir / "engines.json") << R"({"engines":[
        {"id":"fixer","kind":"mock","mode":"scripted","max_tokens":4096,
         "script":{"*":["fixed\n"]},
         "rate_limit":{"tokens_per_interval":150000,"interval_ms":60000}}
    ]})";
    ModelGateway gw;
    cli::configure_engines(gw, (dir / "engines.json").string(), Language::c);
    auto ids = gw.engine_ids();
    CHECK(std::find(ids.begin(), ids.end(), "fixer") != ids.end());
    CHECK(std::find(ids.begin(), ids.end(), "mock-echo") != ids.end());
    CHECK(std::find(ids.begin(), ids.end(), "mock") != ids.end());
    CHECK(gw.engine("fixer").max_tokens() == 4096);

    RenderedPrompt p;
    p.text = "x\n";
    p.token_count = 1;
    auto out = gw.complete(p, GenerationConfig{}, "fixer");
    REQUIRE(out.size() == 1);
    CHECK(out[0].text == "fixed\n");
    fs::remove_all(dir);
}

TEST_CASE("load_corpus on a directory of scenarios is sorted and complete") {
    auto inputs = cli::load_corpus(kScenarios);
    REQUIRE(inputs.size() == 3);
    CHECK(inputs[0].scenario.id == "cwe1271-lock-register");
    CHECK(inputs[1].scenario.id == "cwe787-multiply-doubles");
    CHECK(inputs[2].scenario.id == "cwe79-hello-xss");
    for (const auto& in : inputs) CHECK_FALSE(in.reports.empty());
}
