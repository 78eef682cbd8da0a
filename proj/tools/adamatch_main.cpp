// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: match two schemas, analyze their features,
// evaluate or benchmark strategies against gold mappings, and export the
// constructed matching process as DOT.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adamatch/engine.hpp"
#include "adamatch/errors.hpp"
#include "adamatch/eval.hpp"

namespace {

using namespace adamatch;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEngine = 3;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Schema load_schema_any(const std::string& path) {
    return ends_with(path, ".xml") ? load_xml_tree(path) : load_schema(path);
}

void write_or_print(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + out_path);
    out << content;
}

/// Gold ids must resolve against the scenario's schema pair.
void validate_gold(const Scenario& sc) {
    for (const auto& [s, t] : sc.gold.correspondences) {
        if (!sc.source.find(s))
            throw ValidationError("gold mapping references unknown source id '" + s + "'");
        if (!sc.target.find(t))
            throw ValidationError("gold mapping references unknown target id '" + t + "'");
    }
}

struct CommonFlags {
    std::string config_path;
    int jobs = 0;  // 0 = take the config value
};

EngineConfig make_config(const CommonFlags& flags) {
    EngineConfig cfg;
    std::string path = flags.config_path;
    if (path.empty())
        if (const char* env = std::getenv("ADAMATCH_CONFIG")) path = env;
    if (!path.empty()) cfg = load_engine_config(path);
    if (flags.jobs > 0) cfg.jobs = flags.jobs;
    return cfg;
}

Mapping match_once(const Schema& source, const Schema& target, const std::string& strategy_path,
                   const EngineConfig& cfg, std::string* trace_out, std::string* dot_out,
                   bool dot_steps) {
    if (!strategy_path.empty()) {
        if (trace_out) *trace_out = "";
        return run_process_strategy(load_process(strategy_path), source, target, cfg);
    }
    AdaptiveResult result = run_adaptive(source, target, cfg, dot_out && dot_steps);
    if (trace_out) *trace_out = trace_to_jsonl(result.trace, result.features);
    if (dot_out) {
        if (dot_steps) {
            dot_out->clear();
            for (const auto& dot : result.dot_steps) *dot_out += dot;
        } else {
            *dot_out = result.process.export_dot();
        }
    }
    return result.mapping;
}

int cmd_match(const std::string& source_path, const std::string& target_path,
              const std::string& strategy, const std::string& out_path,
              const std::string& trace_path, const CommonFlags& flags) {
    EngineConfig cfg = make_config(flags);
    Schema source = load_schema_any(source_path);
    Schema target = load_schema_any(target_path);
    std::string trace;
    Mapping mapping = match_once(source, target, strategy, cfg,
                                 trace_path.empty() ? nullptr : &trace, nullptr, false);
    if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw ParseError("cannot write file: " + trace_path);
        out << trace;
    }
    write_or_print(serialize_mapping(mapping), out_path);
    return kExitOk;
}

int cmd_analyze(const std::string& source_path, const std::string& target_path,
                const CommonFlags& flags) {
    EngineConfig cfg = make_config(flags);
    Schema source = load_schema_any(source_path);
    Schema target = load_schema_any(target_path);
    std::set<std::string> wordlist = cfg.wordlist_path.empty() ? builtin_wordlist()
                                                               : load_wordlist(cfg.wordlist_path);
    FeatureReport report = compute_feature_report(source, target, wordlist, cfg.depth_cap);
    char line[128];
    for (const auto& key : schema_feature_order()) {
        std::snprintf(line, sizeof line, "source %-22s %.4f\n", key.c_str(),
                      report.source.at(key));
        std::cout << line;
    }
    for (const auto& key : schema_feature_order()) {
        std::snprintf(line, sizeof line, "target %-22s %.4f\n", key.c_str(),
                      report.target.at(key));
        std::cout << line;
    }
    for (const auto& key : pair_feature_order()) {
        std::snprintf(line, sizeof line, "pair   %-22s %.4f\n", key.c_str(), report.pair.at(key));
        std::cout << line;
    }
    return kExitOk;
}

int cmd_explain(const std::string& source_path, const std::string& target_path, bool steps,
                const std::string& out_path, const CommonFlags& flags) {
    EngineConfig cfg = make_config(flags);
    Schema source = load_schema_any(source_path);
    Schema target = load_schema_any(target_path);
    std::string dot;
    match_once(source, target, "", cfg, nullptr, &dot, steps);
    write_or_print(dot, out_path);
    return kExitOk;
}

int cmd_evaluate(const std::string& scenario_dir, const std::string& strategy,
                 const std::string& format, const CommonFlags& flags) {
    EngineConfig cfg = make_config(flags);
    Scenario sc = load_scenario(scenario_dir);
    validate_gold(sc);
    Mapping found = match_once(sc.source, sc.target, strategy, cfg, nullptr, nullptr, false);
    EvalReport report = evaluate(found, sc.gold);
    std::string strategy_name = strategy.empty() ? "adaptive" : strategy;
    std::cout << (format == "json" ? eval_report_to_json(report)
                                   : eval_report_to_text(sc.name, strategy_name, report));
    return kExitOk;
}

int cmd_bench(const std::string& dataset_dir, const std::vector<std::string>& strategy_files,
              const std::string& format, const CommonFlags& flags) {
    EngineConfig cfg = make_config(flags);
    std::vector<Scenario> scenarios = load_scenarios(dataset_dir);
    for (const auto& sc : scenarios) validate_gold(sc);
    std::vector<Strategy> strategies;
    strategies.push_back(Strategy{"adaptive", ""});
    for (const auto& file : strategy_files) {
        std::string name = file;
        auto slash = name.find_last_of('/');
        if (slash != std::string::npos) name = name.substr(slash + 1);
        strategies.push_back(Strategy{name, file});
    }
    BenchmarkReport report = run_benchmark(scenarios, strategies, cfg);
    std::cout << (format == "json" ? benchmark_to_json(report) : benchmark_to_text(report));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adamatch: self-configuring schema matching"};
    app.require_subcommand(1);
    CommonFlags flags;
    app.add_option("--config", flags.config_path,
                   "engine configuration file (or $ADAMATCH_CONFIG)");
    app.add_option("--jobs", flags.jobs, "worker threads for matcher rows");

    std::string source_path, target_path, strategy, out_path, trace_path;
    std::string scenario_dir, dataset_dir, format = "text";
    std::vector<std::string> strategy_files;
    bool steps = false;

    CLI::App* match = app.add_subcommand("match", "match two schemas and emit a mapping");
    match->add_option("source", source_path, "source schema (.json or .xml)")->required();
    match->add_option("target", target_path, "target schema (.json or .xml)")->required();
    match->add_option("--strategy", strategy, "run a fixed process file instead of adapting");
    match->add_option("--out", out_path, "write the mapping here instead of stdout");
    match->add_option("--trace", trace_path, "write the rule trace (JSON lines)");

    CLI::App* analyze = app.add_subcommand("analyze", "print schema and pair features");
    analyze->add_option("source", source_path, "source schema")->required();
    analyze->add_option("target", target_path, "target schema")->required();

    CLI::App* explain = app.add_subcommand("explain", "print the constructed process as DOT");
    explain->add_option("source", source_path, "source schema")->required();
    explain->add_option("target", target_path, "target schema")->required();
    explain->add_flag("--steps", steps, "one DOT document per construction step");
    explain->add_option("--out", out_path, "write DOT here instead of stdout");

    CLI::App* evaluate = app.add_subcommand("evaluate", "run a strategy against one scenario");
    evaluate->add_option("scenario", scenario_dir, "scenario directory")->required();
    evaluate->add_option("--strategy", strategy, "process file (default: adaptive engine)");
    evaluate->add_option("--format", format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI::App* bench = app.add_subcommand("bench", "benchmark strategies over a dataset");
    bench->add_option("dataset", dataset_dir, "dataset directory of scenarios")->required();
    bench->add_option("--strategy", strategy_files, "process file(s) to compare with adaptive");
    bench->add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;  // bad usage is an input error
    }

    try {
        if (*match) return cmd_match(source_path, target_path, strategy, out_path, trace_path, flags);
        if (*analyze) return cmd_analyze(source_path, target_path, flags);
        if (*explain) return cmd_explain(source_path, target_path, steps, out_path, flags);
        if (*evaluate) return cmd_evaluate(scenario_dir, strategy, format, flags);
        if (*bench) return cmd_bench(dataset_dir, strategy_files, format, flags);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEngine;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEngine;
    }
    return kExitOk;
}
