#pragma once

// Campaign orchestration: parameter grids, generation and repair sweeps,
// metric aggregation, and report export.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "repairkit/bug_report.hpp"
#include "repairkit/errors.hpp"
#include "repairkit/evaluate.hpp"
#include "repairkit/gateway.hpp"
#include "repairkit/graft.hpp"
#include "repairkit/prompt.hpp"
#include "repairkit/reduce.hpp"
#include "repairkit/scenario.hpp"
#include "repairkit/tokenizer.hpp"

namespace repairkit {

struct ParameterGrid {
    std::vector<double> temperatures;
    std::vector<double> top_ps;
    int samples_per_point = 10;

    // Ensemble default: sweep temperature, pin top_p at 1.0.
    static ParameterGrid ensemble_default() {
        return {{0.0, 0.25, 0.5, 0.75, 1.0}, {1.0}, 10};
    }

    static ParameterGrid full_sweep() {
        return {{0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 0.25, 0.5, 0.75, 1.0}, 10};
    }

    void validate() const {
        for (double t : temperatures)
            if (t < 0.0 || t > 1.0) throw Error("temperature out of [0,1]");
        for (double p : top_ps)
            if (p < 0.0 || p > 1.0) throw Error("top_p out of [0,1]");
        if (samples_per_point < 1) throw Error("samples_per_point < 1");
    }
};

// Temperature-major Cartesian product.
inline std::vector<GenerationConfig> build_grid(const ParameterGrid& grid,
                                                int max_tokens = 256) {
    grid.validate();
    std::vector<GenerationConfig> out;
    for (double t : grid.temperatures) {
        for (double p : grid.top_ps) {
            GenerationConfig c;
            c.temperature = t;
            c.top_p = p;
            c.num_samples = grid.samples_per_point;
            c.max_tokens = max_tokens;
            out.push_back(c);
        }
    }
    return out;
}

// Uniqueness ignores trailing whitespace per line and trailing blank lines.
inline std::string normalize_for_dedup(std::string_view program) {
    auto lines = text::split_lines(program);
    for (auto& l : lines) l = std::string(text::rtrim(l));
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return text::join_lines(lines);
}

inline std::set<std::string> dedup_unique(
    const std::vector<std::string>& completions) {
    std::set<std::string> out;
    for (const auto& c : completions) out.insert(normalize_for_dedup(c));
    return out;
}

struct CellKey {
    std::string scenario;
    std::string engine;
    std::string template_id;
    double temperature = 0.0;
    double top_p = 1.0;

    auto tie() const {
        return std::tie(scenario, engine, template_id, temperature, top_p);
    }
    bool operator<(const CellKey& o) const { return tie() < o.tie(); }
    bool operator==(const CellKey& o) const { return tie() == o.tie(); }
};

struct CellCounts {
    long generated = 0;
    long valid = 0;
    long functional = 0;
    long vulnerable = 0;
    long fn_vuln = 0;
    long fn_safe = 0;
    std::vector<std::string> errors;

    void add(Bucket b) {
        ++generated;
        switch (b) {
            case Bucket::Invalid:
                break;
            case Bucket::Vulnerable:
                ++valid;
                ++vulnerable;
                break;
            case Bucket::Functional_Vulnerable:
                ++valid;
                ++functional;
                ++vulnerable;
                ++fn_vuln;
                break;
            case Bucket::Safe_NonFunctional:
                ++valid;
                break;
            case Bucket::Functional_Safe:
                ++valid;
                ++functional;
                ++fn_safe;
                break;
        }
    }

    void merge(const CellCounts& o) {
        generated += o.generated;
        valid += o.valid;
        functional += o.functional;
        vulnerable += o.vulnerable;
        fn_vuln += o.fn_vuln;
        fn_safe += o.fn_safe;
        errors.insert(errors.end(), o.errors.begin(), o.errors.end());
    }
};

// Half-up rounding to one decimal, the table style used for % Vld. Repair.
inline double round_one_decimal_half_up(double x) {
    return std::floor(x * 10.0 + 0.5) / 10.0;
}

inline std::optional<double> pct_valid_repair(const CellCounts& c) {
    if (c.valid == 0) return std::nullopt;
    return round_one_decimal_half_up(100.0 * static_cast<double>(c.fn_safe) /
                                     static_cast<double>(c.valid));
}

struct CandidateRecord {
    CellKey cell;
    int sample_index = 0;
    Bucket bucket = Bucket::Invalid;
    double confidence = 0.0;
    GraftTrace trace;
    bool report_intersected_oracle = true;
    std::string error;  // non-empty when the pipeline failed for this one
};

struct CampaignReport {
    std::map<CellKey, CellCounts> cells;
    std::map<std::string, bool> repaired;  // per scenario
    std::vector<CandidateRecord> candidates;

    void record(const CellKey& key, Bucket b) {
        cells[key].add(b);
        bool& r = repaired[key.scenario];
        r = r || b == Bucket::Functional_Safe;
    }

    void validate() const {
        for (const auto& [key, c] : cells) {
            bool ok = c.generated >= c.valid && c.valid >= c.functional &&
                      c.functional >= c.fn_safe &&
                      c.fn_safe + c.fn_vuln == c.functional &&
                      c.fn_safe <= c.valid;
            if (!ok)
                throw Error("cell count invariants violated for scenario " +
                            key.scenario);
        }
    }
};

enum class Dimension { scenario, engine, template_id, temperature, top_p };

inline std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::scenario: return "scenario";
        case Dimension::engine: return "engine";
        case Dimension::template_id: return "template";
        case Dimension::temperature: return "temperature";
        case Dimension::top_p: return "top_p";
    }
    return "scenario";
}

inline Dimension dimension_from_string(std::string_view s) {
    if (s == "scenario") return Dimension::scenario;
    if (s == "engine") return Dimension::engine;
    if (s == "template") return Dimension::template_id;
    if (s == "temperature") return Dimension::temperature;
    if (s == "top_p") return Dimension::top_p;
    throw UsageError("unknown group-by dimension: " + std::string(s));
}

namespace detail {

inline std::string format_number(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

}  // namespace detail

struct AggregateRow {
    std::vector<std::pair<std::string, std::string>> group;  // dim -> value
    CellCounts counts;
    std::optional<double> pct_valid_repair;
};

// Sums counts over every dimension not listed in group_by.
inline std::vector<AggregateRow> aggregate_metrics(
    const CampaignReport& report, const std::vector<Dimension>& group_by) {
    std::map<std::vector<std::string>, CellCounts> grouped;
    for (const auto& [key, counts] : report.cells) {
        std::vector<std::string> gk;
        for (Dimension d : group_by) {
            switch (d) {
                case Dimension::scenario: gk.push_back(key.scenario); break;
                case Dimension::engine: gk.push_back(key.engine); break;
                case Dimension::template_id:
                    gk.push_back(key.template_id);
                    break;
                case Dimension::temperature:
                    gk.push_back(detail::format_number(key.temperature));
                    break;
                case Dimension::top_p:
                    gk.push_back(detail::format_number(key.top_p));
                    break;
            }
        }
        grouped[gk].merge(counts);
    }
    std::vector<AggregateRow> rows;
    for (const auto& [gk, counts] : grouped) {
        AggregateRow row;
        for (std::size_t i = 0; i < group_by.size(); ++i)
            row.group.emplace_back(to_string(group_by[i]), gk[i]);
        row.counts = counts;
        row.pct_valid_repair = pct_valid_repair(counts);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// campaign execution

struct ScenarioInput {
    RepairScenario scenario;
    std::vector<BugReport> reports;
};

// Loads bug reports sitting next to the manifest: report.sarif, report.csv,
// or sanitizer.log.
inline std::vector<BugReport> load_reports(const std::filesystem::path& root,
                                           const RepairScenario& scenario) {
    std::vector<BugReport> out;
    auto sarif = root / "report.sarif";
    auto csv = root / "report.csv";
    auto log = root / "sanitizer.log";
    if (std::filesystem::exists(sarif)) {
        auto body = detail::read_file(sarif);
        auto rs = parse_static_report(body, ReportFormat::sarif_subset);
        out.insert(out.end(), rs.begin(), rs.end());
    }
    if (std::filesystem::exists(csv)) {
        auto rs = parse_static_report(detail::read_file(csv),
                                      ReportFormat::csv_rows);
        out.insert(out.end(), rs.begin(), rs.end());
    }
    if (std::filesystem::exists(log)) {
        out.push_back(parse_sanitizer_log(detail::read_file(log),
                                          scenario.target_file));
    }
    return out;
}

// The report whose span intersects the oracle wins; otherwise the first in
// file order, flagged on the candidate records.
inline std::pair<BugReport, bool> select_report(
    const std::vector<BugReport>& reports, const BugLocationOracle& oracle) {
    if (reports.empty()) throw MalformedReport("scenario has no bug report");
    for (const auto& r : reports)
        if (r.start_line <= oracle.bug_end && r.end_line >= oracle.bug_start)
            return {r, true};
    auto best = reports.front();
    for (const auto& r : reports)
        if (r.start_line < best.start_line) best = r;
    return {best, false};
}

struct CampaignOptions {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    std::filesystem::path sandbox_base =
        std::filesystem::temp_directory_path() / "repairkit-sandboxes";
    SandboxLimits limits;
    TokenCounter counter = TokenCounter::heuristic();
    int reserved_for_completion = 256;
    int extra_safe_lines = 2;  // anchor lines for graft matching
    std::uint64_t seed = 0;
};

namespace detail {

template <typename Task>
inline void parallel_for(const std::vector<Task>& tasks, int workers) {
    if (workers < 1) workers = 1;
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            tasks[i]();
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Full repair pipeline for every (scenario, engine, template, grid point).
inline CampaignReport run_repair_campaign(
    const std::vector<ScenarioInput>& scenarios, ModelGateway& gateway,
    const std::vector<std::string>& engine_ids,
    const std::vector<TemplateId>& templates, const ParameterGrid& grid,
    const CampaignOptions& opts = {}) {
    grid.validate();

    struct Task {
        const ScenarioInput* input;
        std::string engine_id;
        TemplateId template_id;
        GenerationConfig config;
    };
    std::vector<Task> tasks;
    for (const auto& input : scenarios) {
        if (!input.scenario.oracle)
            throw MalformedReport("repair scenario lacks an oracle: " +
                                  input.scenario.id);
        for (const auto& eid : engine_ids) {
            int engine_max = gateway.engine(eid).max_tokens();
            int completion_budget =
                std::min(opts.reserved_for_completion, engine_max / 2);
            for (TemplateId tid : templates) {
                for (auto config : build_grid(grid, completion_budget)) {
                    config.seed = opts.seed;
                    tasks.push_back({&input, eid, tid, config});
                }
            }
        }
    }

    std::vector<std::vector<CandidateRecord>> results(tasks.size());
    std::vector<std::function<void()>> bodies;
    bodies.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        bodies.emplace_back([&, i] {
            const Task& task = tasks[i];
            const RepairScenario& sc = task.input->scenario;
            const BugLocationOracle& oracle = *sc.oracle;
            CellKey key{sc.id, task.engine_id, to_string(task.template_id),
                        task.config.temperature, task.config.top_p};
            auto& out = results[i];

            auto record_cell_error = [&](const std::string& what) {
                // every requested sample counts as generated-but-invalid
                for (int s = 0; s < task.config.num_samples; ++s) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = s;
                    rec.bucket = Bucket::Invalid;
                    rec.error = what;
                    out.push_back(rec);
                }
            };

            try {
                auto [report, intersected] =
                    select_report(task.input->reports, oracle);
                auto tmpl =
                    PromptTemplate::make(task.template_id, sc.language);
                RenderOptions ropts;
                if (tmpl.includes_commented_code)
                    ropts.extra_safe_lines = opts.extra_safe_lines;
                auto block = render_template_block(sc.target_text(), oracle,
                                                   report, tmpl, ropts);
                TokenBudget budget{gateway.engine(task.engine_id).max_tokens(),
                                   task.config.max_tokens};
                auto prompt = assemble_reduced_prompt(
                    sc.target_text(), oracle, block, budget, opts.counter,
                    sc.language);
                prompt.template_id = to_string(task.template_id);
                prompt.engine_id = task.engine_id;

                auto suggestions =
                    gateway.complete(prompt, task.config, task.engine_id);
                int sample = 0;
                for (const auto& sug : suggestions) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = sample++;
                    rec.confidence = sug.confidence;
                    rec.report_intersected_oracle = intersected;
                    try {
                        auto grafted =
                            graft(sc.target_text(), oracle, sug.text);
                        rec.trace = grafted.trace;
                        std::string body = sc.language == Language::verilog
                                               ? hdl_postprocess(
                                                     grafted.file_text)
                                               : grafted.file_text;
                        auto verdict = evaluate_candidate(
                            sc, body, opts.sandbox_base, opts.limits);
                        rec.bucket = classify(verdict);
                    } catch (const Error& e) {
                        rec.bucket = Bucket::Invalid;
                        rec.error = e.what();
                    }
                    out.push_back(rec);
                }
                // unanswered samples count as generated-but-invalid
                for (; sample < task.config.num_samples; ++sample) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = sample;
                    rec.bucket = Bucket::Invalid;
                    rec.error = "no completion returned";
                    out.push_back(rec);
                }
            } catch (const Error& e) {
                record_cell_error(e.what());
            }
        });
    }
    detail::parallel_for(bodies, opts.workers);

    CampaignReport report;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (const auto& rec : results[i]) {
            report.record(rec.cell, rec.bucket);
            if (!rec.error.empty())
                report.cells[rec.cell].errors.push_back(rec.error);
            report.candidates.push_back(rec);
        }
    }
    return report;
}

struct GenerationOutcome {
    CampaignReport report;
    std::vector<RepairScenario> derived_scenarios;  // unique fn-vulnerable
};

// Synthetic vulnerable-program generation: complete the scenario's
// generation prompt, evaluate prompt+completion as a whole program, and
// keep the unique functional-but-vulnerable ones as repair scenarios.
inline GenerationOutcome run_generation_campaign(
    const ScenarioInput& input, ModelGateway& gateway,
    const std::vector<std::string>& engine_ids, const ParameterGrid& grid,
    const CampaignOptions& opts = {}) {
    const RepairScenario& sc = input.scenario;
    if (!sc.generation_prompt)
        throw MalformedReport("scenario has no generation prompt: " + sc.id);
    grid.validate();

    GenerationOutcome outcome;
    std::vector<std::pair<std::string, Verdict>> fn_vuln_programs;
    std::mutex mu;

    struct Task {
        std::string engine_id;
        GenerationConfig config;
    };
    std::vector<Task> tasks;
    for (const auto& eid : engine_ids) {
        int engine_max = gateway.engine(eid).max_tokens();
        int completion_budget =
            std::min(opts.reserved_for_completion, engine_max / 2);
        for (auto config : build_grid(grid, completion_budget)) {
            config.seed = opts.seed;
            tasks.push_back({eid, config});
        }
    }

    std::vector<std::vector<std::pair<CandidateRecord, std::string>>> results(
        tasks.size());
    std::vector<std::function<void()>> bodies;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        bodies.emplace_back([&, i] {
            const Task& task = tasks[i];
            CellKey key{sc.id, task.engine_id, "generation",
                        task.config.temperature, task.config.top_p};
            auto& out = results[i];
            try {
                RenderedPrompt prompt;
                prompt.text = *sc.generation_prompt;
                prompt.token_count =
                    count_tokens(prompt.text, opts.counter);
                prompt.engine_id = task.engine_id;
                auto suggestions =
                    gateway.complete(prompt, task.config, task.engine_id);
                int sample = 0;
                for (const auto& sug : suggestions) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = sample++;
                    rec.confidence = sug.confidence;
                    std::string program = *sc.generation_prompt + sug.text;
                    try {
                        auto verdict = evaluate_candidate(
                            sc, program, opts.sandbox_base, opts.limits);
                        rec.bucket = classify(verdict);
                        if (rec.bucket == Bucket::Functional_Vulnerable) {
                            std::lock_guard lock(mu);
                            fn_vuln_programs.emplace_back(program, verdict);
                        }
                    } catch (const Error& e) {
                        rec.bucket = Bucket::Invalid;
                        rec.error = e.what();
                    }
                    out.emplace_back(rec, std::string());
                }
                for (; sample < task.config.num_samples; ++sample) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = sample;
                    rec.bucket = Bucket::Invalid;
                    rec.error = "no completion returned";
                    out.emplace_back(rec, std::string());
                }
            } catch (const Error& e) {
                for (int s = 0; s < task.config.num_samples; ++s) {
                    CandidateRecord rec;
                    rec.cell = key;
                    rec.sample_index = s;
                    rec.bucket = Bucket::Invalid;
                    rec.error = e.what();
                    out.emplace_back(rec, std::string());
                }
            }
        });
    }
    detail::parallel_for(bodies, opts.workers);

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (const auto& [rec, _] : results[i]) {
            outcome.report.record(rec.cell, rec.bucket);
            if (!rec.error.empty())
                outcome.report.cells[rec.cell].errors.push_back(rec.error);
            outcome.report.candidates.push_back(rec);
        }
    }

    // unique functional-but-vulnerable corpus -> derived repair scenarios
    std::vector<std::string> programs;
    for (const auto& [p, _] : fn_vuln_programs) programs.push_back(p);
    auto unique = dedup_unique(programs);
    int idx = 0;
    for (const auto& program : unique) {
        RepairScenario derived = sc;
        derived.id = sc.id + "-gen-" + std::to_string(idx++);
        derived.generation_prompt.reset();
        derived.generation_prompt_file.clear();
        for (auto& [path, body] : derived.source_files)
            if (path == derived.target_file) body = program;

        auto lines = text::split_lines(program);
        int line_count = static_cast<int>(lines.size());
        int prompt_lines = static_cast<int>(
            text::split_lines(*sc.generation_prompt).size());
        BugLocationOracle o;
        o.bug_start = std::min(prompt_lines + 1, std::max(1, line_count - 1));
        o.bug_end = std::max(o.bug_start, line_count - 1);
        o.safe_resume_line = o.bug_end + 1;
        o.enclosing_function_start =
            find_enclosing_function_start(lines, o.bug_start, sc.language);
        derived.oracle = o;
        derived.validate();
        outcome.derived_scenarios.push_back(std::move(derived));
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// report serialization

inline std::string format_pct(std::optional<double> pct) {
    if (!pct) return "";
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(1);
    ss << *pct;
    return ss.str();
}

inline std::string export_cells_csv(const CampaignReport& report) {
    std::string out =
        "scenario,engine,template,temperature,top_p,generated,valid,"
        "functional,vulnerable,fn_vuln,fn_safe,pct_valid_repair\n";
    for (const auto& [key, c] : report.cells) {
        out += key.scenario + "," + key.engine + "," + key.template_id + "," +
               detail::format_number(key.temperature) + "," +
               detail::format_number(key.top_p) + "," +
               std::to_string(c.generated) + "," + std::to_string(c.valid) +
               "," + std::to_string(c.functional) + "," +
               std::to_string(c.vulnerable) + "," +
               std::to_string(c.fn_vuln) + "," + std::to_string(c.fn_safe) +
               "," + format_pct(pct_valid_repair(c)) + "\n";
    }
    return out;
}

// Heatmap matrix (rows = temperature, cols = top_p) of one counter summed
// over all other dimensions.
inline std::string export_heatmap_csv(const CampaignReport& report,
                                      const std::string& counter_name) {
    std::set<double> temps, tops;
    std::map<std::pair<double, double>, long> sums;
    for (const auto& [key, c] : report.cells) {
        temps.insert(key.temperature);
        tops.insert(key.top_p);
        long v = 0;
        if (counter_name == "fn_safe") v = c.fn_safe;
        else if (counter_name == "valid") v = c.valid;
        else if (counter_name == "functional") v = c.functional;
        else if (counter_name == "generated") v = c.generated;
        else throw UsageError("unknown heatmap counter: " + counter_name);
        sums[{key.temperature, key.top_p}] += v;
    }
    std::string out = "temperature";
    for (double p : tops) out += "," + detail::format_number(p);
    out += "\n";
    for (double t : temps) {
        out += detail::format_number(t);
        for (double p : tops) {
            auto it = sums.find({t, p});
            out += "," + std::to_string(it == sums.end() ? 0 : it->second);
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::ordered_json report_to_json(const CampaignReport& report) {
    nlohmann::ordered_json j;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& [key, c] : report.cells) {
        nlohmann::ordered_json cj;
        cj["scenario"] = key.scenario;
        cj["engine"] = key.engine;
        cj["template"] = key.template_id;
        cj["temperature"] = key.temperature;
        cj["top_p"] = key.top_p;
        cj["generated"] = c.generated;
        cj["valid"] = c.valid;
        cj["functional"] = c.functional;
        cj["vulnerable"] = c.vulnerable;
        cj["fn_vuln"] = c.fn_vuln;
        cj["fn_safe"] = c.fn_safe;
        auto pct = pct_valid_repair(c);
        if (pct)
            cj["pct_valid_repair"] = *pct;
        else
            cj["pct_valid_repair"] = nullptr;
        cj["errors"] = c.errors;
        cells.push_back(cj);
    }
    j["cells"] = cells;
    j["repaired"] = report.repaired;
    auto cands = nlohmann::ordered_json::array();
    for (const auto& rec : report.candidates) {
        nlohmann::ordered_json rj;
        rj["scenario"] = rec.cell.scenario;
        rj["engine"] = rec.cell.engine;
        rj["template"] = rec.cell.template_id;
        rj["temperature"] = rec.cell.temperature;
        rj["top_p"] = rec.cell.top_p;
        rj["sample"] = rec.sample_index;
        rj["bucket"] = to_string(rec.bucket);
        rj["confidence"] = rec.confidence;
        rj["graft"] = {{"overlap_len_used", rec.trace.overlap_len_used},
                       {"fallback_last_newline",
                        rec.trace.fallback_last_newline},
                       {"inserted_begin", rec.trace.inserted_begin},
                       {"inserted_end", rec.trace.inserted_end}};
        rj["report_intersected_oracle"] = rec.report_intersected_oracle;
        rj["error"] = rec.error;
        cands.push_back(rj);
    }
    j["candidates"] = cands;
    return j;
}

// Loads cell counts from a cells.csv-shaped fixture (pct column ignored;
// it is recomputed).
inline CampaignReport load_counts_csv(std::string_view csv) {
    CampaignReport report;
    auto lines = text::split_lines(csv);
    if (lines.empty()) throw MalformedReport("empty counts fixture");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (text::is_blank(lines[i])) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char ch : lines[i]) {
            if (ch == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        f.push_back(cur);
        if (f.size() < 11)
            throw MalformedReport("counts row needs 11+ fields: " + lines[i]);
        CellKey key{f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4])};
        CellCounts c;
        c.generated = std::stol(f[5]);
        c.valid = std::stol(f[6]);
        c.functional = std::stol(f[7]);
        c.vulnerable = std::stol(f[8]);
        c.fn_vuln = std::stol(f[9]);
        c.fn_safe = std::stol(f[10]);
        report.cells[key] = c;
        report.repaired[key.scenario] =
            report.repaired[key.scenario] || c.fn_safe > 0;
    }
    return report;
}

}  // namespace repairkit
