#pragma once

// Command-line pipeline: each stage runs standalone (render-prompt,
// evaluate, report) and the two campaign types run end to end.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "repairkit/campaign.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/evaluate.hpp"
#include "repairkit/gateway.hpp"
#include "repairkit/http_engine.hpp"

namespace repairkit::cli {

// Exit codes: 0 success, 1 campaign had cell errors, 2 usage error,
// 3 environment error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCellErrors = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEnvironment = 3;

struct InvocationConfig {
    std::string subcommand;
    std::string corpus_root;
    std::string scenario_dir;
    std::string candidate_file;
    std::vector<std::string> engines;
    std::vector<std::string> templates;
    ParameterGrid grid = ParameterGrid::ensemble_default();
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    std::string cache_dir;
    std::string output_dir = "out";
    std::string engines_config;
    std::string report_in;
    std::vector<std::string> group_by;
    std::string template_id = "cm";
    int engine_max_tokens = 2048;
    int reserve_tokens = 256;
    double chars_per_token = 4.0;
    std::string merges_file;
    int extra_safe_lines = 2;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, std::string_view body) {
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

}  // namespace detail

// Builds a gateway from an engines-config JSON file. Mock engines need no
// config file: "mock" and "mock-echo" are always available.
inline void configure_engines(ModelGateway& gateway,
                              const std::string& engines_config,
                              Language lang) {
    auto echo = std::make_shared<MockEngine>("mock-echo",
                                             MockEngine::Mode::echo_uncomment);
    echo->set_comment_style(lang == Language::python
                                ? CommentStyle::line_hash
                                : CommentStyle::line_slash);
    gateway.register_engine(echo);
    gateway.register_engine(
        std::make_shared<MockEngine>("mock", MockEngine::Mode::scripted));

    if (engines_config.empty()) return;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::slurp(engines_config));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("engines config parse error: " +
                         std::string(e.what()));
    }
    for (const auto& ej : j.value("engines", nlohmann::json::array())) {
        auto kind = ej.value("kind", std::string("mock"));
        auto id = ej.at("id").get<std::string>();
        int max_tokens = ej.value("max_tokens", 2048);
        std::optional<RateLimit> limit;
        if (ej.contains("rate_limit")) {
            RateLimit rl;
            rl.tokens_per_interval =
                ej["rate_limit"].value("tokens_per_interval", 150000);
            rl.interval = std::chrono::milliseconds(
                ej["rate_limit"].value("interval_ms", 60000));
            limit = rl;
        }
        if (kind == "mock") {
            auto mode_s = ej.value("mode", std::string("scripted"));
            MockEngine::Mode mode = MockEngine::Mode::scripted;
            if (mode_s == "echo_uncomment")
                mode = MockEngine::Mode::echo_uncomment;
            else if (mode_s == "corpus")
                mode = MockEngine::Mode::corpus;
            auto eng = std::make_shared<MockEngine>(id, mode, max_tokens);
            if (ej.contains("script")) {
                for (auto it = ej["script"].begin(); it != ej["script"].end();
                     ++it) {
                    std::vector<std::string> completions;
                    for (const auto& c : it.value())
                        completions.push_back(c.get<std::string>());
                    eng->script(it.key(), completions);
                }
            }
            if (ej.contains("script_files")) {
                for (auto it = ej["script_files"].begin();
                     it != ej["script_files"].end(); ++it) {
                    std::vector<std::string> completions;
                    for (const auto& f : it.value())
                        completions.push_back(
                            detail::slurp(f.get<std::string>()));
                    eng->script(it.key(), completions);
                }
            }
            if (ej.contains("corpus")) {
                std::vector<std::string> corpus;
                for (const auto& c : ej["corpus"])
                    corpus.push_back(c.get<std::string>());
                eng->set_corpus(corpus);
            }
            gateway.register_engine(eng, limit);
        } else if (kind == "http") {
            ProviderConfig pc;
            pc.id = id;
            pc.max_tokens = max_tokens;
            pc.endpoint_host = ej.at("endpoint_host").get<std::string>();
            pc.endpoint_path = ej.value("endpoint_path",
                                        std::string("/v1/completions"));
            pc.auth_env_var = ej.value("auth_env_var", std::string());
            pc.model_name = ej.value("model", std::string());
            gateway.register_engine(std::make_shared<HttpEngine>(pc), limit);
        } else {
            throw UsageError("unknown engine kind: " + kind);
        }
    }
}

inline std::vector<ScenarioInput> load_corpus(
    const std::filesystem::path& root) {
    std::vector<ScenarioInput> out;
    if (std::filesystem::exists(root / "scenario.json")) {
        auto sc = load_scenario(root);
        out.push_back({sc, load_reports(root, sc)});
        return out;
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(root))
        if (e.is_directory() &&
            std::filesystem::exists(e.path() / "scenario.json"))
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        auto sc = load_scenario(d);
        out.push_back({sc, load_reports(d, sc)});
    }
    if (out.empty())
        throw UsageError("no scenarios found under " + root.string());
    return out;
}

inline TokenCounter make_counter(const InvocationConfig& cfg) {
    if (!cfg.merges_file.empty())
        return TokenCounter::exact(std::make_shared<BpeVocabulary>(
            BpeVocabulary::from_merges_file(cfg.merges_file)));
    return TokenCounter::heuristic(cfg.chars_per_token);
}

inline nlohmann::ordered_json invocation_to_json(const InvocationConfig& c) {
    nlohmann::ordered_json j;
    j["subcommand"] = c.subcommand;
    j["corpus_root"] = c.corpus_root;
    j["engines"] = c.engines;
    j["templates"] = c.templates;
    j["grid"] = {{"temperatures", c.grid.temperatures},
                 {"top_ps", c.grid.top_ps},
                 {"samples_per_point", c.grid.samples_per_point}};
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    j["extra_safe_lines"] = c.extra_safe_lines;
    j["reserve_tokens"] = c.reserve_tokens;
    return j;
}

inline int run_repair(const InvocationConfig& cfg) {
    auto inputs = load_corpus(cfg.corpus_root);
    GatewayOptions gopts;
    if (!cfg.cache_dir.empty()) gopts.cache_dir = cfg.cache_dir;
    ModelGateway gateway(gopts);
    configure_engines(gateway, cfg.engines_config,
                      inputs.front().scenario.language);

    std::vector<TemplateId> templates;
    for (const auto& t : cfg.templates)
        templates.push_back(template_from_string(t));
    if (templates.empty())
        templates.assign(kAllTemplates.begin(), kAllTemplates.end());
    std::vector<std::string> engines =
        cfg.engines.empty() ? std::vector<std::string>{"mock-echo"}
                            : cfg.engines;

    CampaignOptions opts;
    opts.workers = cfg.workers;
    opts.counter = make_counter(cfg);
    opts.reserved_for_completion = cfg.reserve_tokens;
    opts.extra_safe_lines = cfg.extra_safe_lines;
    opts.seed = cfg.seed;

    auto report =
        run_repair_campaign(inputs, gateway, engines, templates, cfg.grid, opts);
    report.validate();

    std::filesystem::path out(cfg.output_dir);
    nlohmann::ordered_json run;
    run["invocation"] = invocation_to_json(cfg);
    run["report"] = report_to_json(report);
    detail::spit(out / "run.json", run.dump(2) + "\n");
    detail::spit(out / "cells.csv", export_cells_csv(report));
    detail::spit(out / "heatmap_fn_safe.csv",
                 export_heatmap_csv(report, "fn_safe"));
    detail::spit(out / "heatmap_valid.csv",
                 export_heatmap_csv(report, "valid"));

    bool had_errors = false;
    for (const auto& [_, c] : report.cells)
        if (!c.errors.empty()) had_errors = true;
    return had_errors ? kExitCellErrors : kExitOk;
}

inline int run_generate(const InvocationConfig& cfg) {
    auto inputs = load_corpus(cfg.corpus_root);
    GatewayOptions gopts;
    if (!cfg.cache_dir.empty()) gopts.cache_dir = cfg.cache_dir;
    ModelGateway gateway(gopts);
    configure_engines(gateway, cfg.engines_config,
                      inputs.front().scenario.language);
    std::vector<std::string> engines =
        cfg.engines.empty() ? std::vector<std::string>{"mock"} : cfg.engines;

    CampaignOptions opts;
    opts.workers = cfg.workers;
    opts.counter = make_counter(cfg);
    opts.seed = cfg.seed;

    std::filesystem::path out(cfg.output_dir);
    bool had_errors = false;
    nlohmann::ordered_json run;
    run["invocation"] = invocation_to_json(cfg);
    auto reports_json = nlohmann::ordered_json::array();
    for (const auto& input : inputs) {
        auto outcome =
            run_generation_campaign(input, gateway, engines, cfg.grid, opts);
        outcome.report.validate();
        for (const auto& [_, c] : outcome.report.cells)
            if (!c.errors.empty()) had_errors = true;
        int i = 0;
        for (const auto& derived : outcome.derived_scenarios)
            write_scenario(derived,
                           out / "derived" / (input.scenario.id + "-" +
                                              std::to_string(i++)));
        reports_json.push_back(report_to_json(outcome.report));
    }
    run["reports"] = reports_json;
    detail::spit(out / "run.json", run.dump(2) + "\n");
    return had_errors ? kExitCellErrors : kExitOk;
}

inline int run_render_prompt(const InvocationConfig& cfg, std::ostream& os) {
    auto input = load_corpus(cfg.scenario_dir).front();
    const auto& sc = input.scenario;
    if (!sc.oracle) throw UsageError("scenario has no oracle");
    auto [report, _] = select_report(input.reports, *sc.oracle);
    auto tmpl = PromptTemplate::make(template_from_string(cfg.template_id),
                                     sc.language);
    RenderOptions ropts;
    if (tmpl.includes_commented_code)
        ropts.extra_safe_lines = cfg.extra_safe_lines;
    auto block =
        render_template_block(sc.target_text(), *sc.oracle, report, tmpl, ropts);
    TokenBudget budget{cfg.engine_max_tokens, cfg.reserve_tokens};
    auto prompt = assemble_reduced_prompt(sc.target_text(), *sc.oracle, block,
                                          budget, make_counter(cfg),
                                          sc.language);
    os << prompt.text;
    return kExitOk;
}

inline int run_evaluate(const InvocationConfig& cfg, std::ostream& os) {
    auto sc = load_scenario(cfg.scenario_dir);
    auto candidate = detail::slurp(cfg.candidate_file);
    auto verdict = evaluate_candidate(
        sc, candidate, std::filesystem::temp_directory_path() /
                           "repairkit-sandboxes");
    nlohmann::ordered_json j;
    j["valid"] = verdict.valid;
    if (verdict.functional) j["functional"] = *verdict.functional;
    if (verdict.safe) j["safe"] = *verdict.safe;
    j["bucket"] = to_string(classify(verdict));
    os << j.dump(2) << "\n";
    return kExitOk;
}

inline int run_report(const InvocationConfig& cfg, std::ostream& os) {
    auto report = load_counts_csv(detail::slurp(cfg.report_in));
    report.validate();
    std::vector<Dimension> dims;
    for (const auto& g : cfg.group_by)
        dims.push_back(dimension_from_string(g));
    if (dims.empty()) dims.push_back(Dimension::scenario);
    auto rows = aggregate_metrics(report, dims);
    for (const auto& [name, _] : rows.front().group) os << name << ",";
    os << "generated,valid,functional,vulnerable,fn_vuln,fn_safe,"
          "pct_valid_repair\n";
    for (const auto& row : rows) {
        for (const auto& [_, value] : row.group) os << value << ",";
        os << row.counts.generated << "," << row.counts.valid << ","
           << row.counts.functional << "," << row.counts.vulnerable << ","
           << row.counts.fn_vuln << "," << row.counts.fn_safe << ","
           << format_pct(row.pct_valid_repair) << "\n";
    }
    return kExitOk;
}

inline void apply_config_file(InvocationConfig& cfg,
                              const std::string& config_file) {
    if (config_file.empty()) return;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::slurp(config_file));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file parse error: " + std::string(e.what()));
    }
    if (j.contains("engines"))
        cfg.engines = j["engines"].get<std::vector<std::string>>();
    if (j.contains("templates"))
        cfg.templates = j["templates"].get<std::vector<std::string>>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("temperatures"))
            cfg.grid.temperatures =
                g["temperatures"].get<std::vector<double>>();
        if (g.contains("top_ps"))
            cfg.grid.top_ps = g["top_ps"].get<std::vector<double>>();
        if (g.contains("samples_per_point"))
            cfg.grid.samples_per_point = g["samples_per_point"].get<int>();
    }
}

inline InvocationConfig parse_invocation(const std::vector<std::string>& argv) {
    CLI::App app{"zero-shot security bug repair pipeline"};
    app.require_subcommand(1);
    InvocationConfig cfg;
    std::string config_file;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config override");
        sub->add_option("--workers", cfg.workers);
        sub->add_option("--seed", cfg.seed);
        sub->add_option("--cache-dir", cfg.cache_dir);
        sub->add_option("--out", cfg.output_dir);
        sub->add_option("--engines-config", cfg.engines_config);
        sub->add_option("--engine", cfg.engines)->allow_extra_args(false);
        sub->add_option("--template", cfg.templates)
            ->allow_extra_args(false);
        sub->add_option("--temps", cfg.grid.temperatures);
        sub->add_option("--top-ps", cfg.grid.top_ps);
        sub->add_option("--samples", cfg.grid.samples_per_point);
        sub->add_option("--chars-per-token", cfg.chars_per_token);
        sub->add_option("--merges", cfg.merges_file);
        sub->add_option("--reserve", cfg.reserve_tokens);
        sub->add_option("--extra-safe-lines", cfg.extra_safe_lines);
    };

    auto* repair = app.add_subcommand("repair", "run a repair campaign");
    repair->add_option("--corpus", cfg.corpus_root)->required();
    add_common(repair);

    auto* generate =
        app.add_subcommand("generate", "run a generation campaign");
    generate->add_option("--corpus", cfg.corpus_root)->required();
    add_common(generate);

    auto* render = app.add_subcommand("render-prompt",
                                      "render one repair prompt");
    render->add_option("--scenario", cfg.scenario_dir)->required();
    render->add_option("--template-id", cfg.template_id);
    render->add_option("--engine-max", cfg.engine_max_tokens);
    add_common(render);

    auto* evaluate = app.add_subcommand("evaluate",
                                        "evaluate one candidate file");
    evaluate->add_option("--scenario", cfg.scenario_dir)->required();
    evaluate->add_option("--candidate", cfg.candidate_file)->required();
    add_common(evaluate);

    auto* report = app.add_subcommand("report", "aggregate campaign counts");
    report->add_option("--in", cfg.report_in)->required();
    report->add_option("--group-by", cfg.group_by);
    add_common(report);

    std::vector<std::string> args(argv.rbegin(), argv.rend());
    if (!args.empty()) args.pop_back();  // program name
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    apply_config_file(cfg, config_file);
    if (cfg.workers < 1) cfg.workers = 1;
    return cfg;
}

inline int dispatch(const std::vector<std::string>& argv, std::ostream& os,
                    std::ostream& err) {
    try {
        auto cfg = parse_invocation(argv);
        if (cfg.subcommand == "repair") return run_repair(cfg);
        if (cfg.subcommand == "generate") return run_generate(cfg);
        if (cfg.subcommand == "render-prompt")
            return run_render_prompt(cfg, os);
        if (cfg.subcommand == "evaluate") return run_evaluate(cfg, os);
        if (cfg.subcommand == "report") return run_report(cfg, os);
        err << "unknown subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SandboxSetupFailure& e) {
        err << "environment error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const AnalyzerUnavailable& e) {
        err << "environment error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitCellErrors;
    }
}

}  // namespace repairkit::cli
