// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adamatch/engine.hpp"
#include "adamatch/matrix.hpp"
#include "adamatch/schema.hpp"

namespace adamatch {

struct GoldMapping {
    std::vector<std::pair<std::string, std::string>> correspondences;  // (s, t)
};

GoldMapping load_gold(const std::string& path);
std::string serialize_gold(const GoldMapping& g);
void save_gold(const GoldMapping& g, const std::string& path);

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    int true_positives = 0;
    int found = 0;
    int gold = 0;
    long long runtime_ms = 0;  // not serialized: reports stay byte-identical
};

/// Set intersection on (s,t) pairs. Conventions: empty found and empty gold
/// -> P = 1; empty found with nonempty gold -> P = 0; empty gold -> R = 1;
/// F = 0 when P + R = 0.
EvalReport evaluate(const Mapping& found, const GoldMapping& gold);

struct PerturbOp {
    enum Kind { RenameToken, Abbreviate, DropAnnotation, ShuffleSiblings, DeleteLeaf } kind;
    double p = 0.0;
};

/// Derives a perturbed copy plus the gold mapping (identity over surviving
/// elements). Deterministic for a given seed.
struct PerturbResult {
    Schema schema;
    GoldMapping gold;
};
PerturbResult perturb(const Schema& s, const std::vector<PerturbOp>& ops, uint64_t seed);

struct Scenario {
    std::string name;
    Schema source;
    Schema target;
    GoldMapping gold;
};

/// Dataset layout: <dir>/<scenario>/{source.json,target.json,gold.json}.
Scenario load_scenario(const std::string& dir);
std::vector<Scenario> load_scenarios(const std::string& dataset_dir);
void save_scenario(const Scenario& sc, const std::string& dir);

/// A strategy is either the adaptive engine ("adaptive") or a process file.
struct Strategy {
    std::string name;
    std::string process_path;  // empty -> adaptive
};

/// Executes a fixed process on a schema pair and reads the mapping off its
/// terminal node (the last dangling matrix-producing node).
Mapping run_process_strategy(const MatchProcess& p, const Schema& source, const Schema& target,
                             const EngineConfig& config = {});

struct BenchmarkRow {
    std::string scenario;
    std::string strategy;
    EvalReport report;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;                          // scenario-major
    std::vector<std::pair<std::string, double>> average_f;   // per strategy
};

BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios,
                              const std::vector<Strategy>& strategies,
                              const EngineConfig& config = {});

std::string benchmark_to_json(const BenchmarkReport& r);
std::string benchmark_to_text(const BenchmarkReport& r);

std::string eval_report_to_json(const EvalReport& r);
std::string eval_report_to_text(const std::string& scenario, const std::string& strategy,
                                const EvalReport& r);

/// Replaces the terminal selection's threshold/delta with each grid value,
/// re-executes (incrementally) and reports (value, monogamy of the selected
/// matrix, F against gold).
struct SweepRow {
    double value = 0.0;
    double monogamy = 0.0;
    double f_measure = 0.0;
};
enum class SweepParam { Threshold, Delta };
std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& grid,
                            const MatchProcess& process, const Scenario& scenario,
                            const EngineConfig& config = {});

} // namespace adamatch
