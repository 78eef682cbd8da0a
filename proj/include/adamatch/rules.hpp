// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "adamatch/features.hpp"
#include "adamatch/process.hpp"

namespace adamatch {

enum class Stage { Start, Aggregation, Rewrite, Select, Refine };

std::string stage_name(Stage s);

struct RuleConfig {
    bool enabled = true;
    std::optional<double> relevance_threshold;
    std::optional<double> check_threshold;
};

struct EngineConfig {
    std::map<std::string, RuleConfig> rules;
    int max_refine_iterations = 3;
    double delta_grid_start = 0.0;
    double delta_grid_stop = 0.20;
    double delta_grid_step = 0.01;
    long long cell_budget = 1000000;  // |S|*|T| above which rewrites go sequential
    double depth_cap = 20.0;
    std::string wordlist_path;        // empty -> builtin wordlist
    std::string datatype_table_path;  // empty -> built-in rules only
    int jobs = 1;

    std::vector<double> delta_grid() const;
};

EngineConfig load_engine_config(const std::string& path);
EngineConfig parse_engine_config(const std::string& json_text, const std::string& origin);

class EngineState;  // engine.hpp

/// What a rule application did, for checks and the trace.
struct ApplyResult {
    std::vector<std::string> added_nodes;
    std::string primary_node;  // node whose output the check inspects
    std::string detail;        // free-form note ("delta=0.03"), shows in trace
};

/// Pattern/action rule. relevance() gates and ranks (0 = not applicable);
/// action() transforms the process; check(), when present, scores the
/// executed result and the engine reverts if the score is below
/// check_threshold.
struct MatchingRule {
    std::string name;
    Stage stage = Stage::Start;
    double relevance_threshold = 0.0;  // applied iff relevance > threshold
    double check_threshold = 0.0;      // reverted iff check < threshold
    bool check_uses_monogamy = false;  // subject to the non-1:1 gate

    std::function<std::vector<std::string>(const EngineState&)> pattern;  // optional
    std::function<double(const EngineState&)> relevance;
    std::function<ApplyResult(EngineState&)> action;
    std::function<double(const EngineState&, const ApplyResult&)> check;  // optional
};

/// All built-in rules in declaration order (the tie-break order).
std::vector<MatchingRule> default_registry();

/// Sweeps the delta grid on a matrix and returns the delta whose
/// select_delta(m, 1, delta, Both) result has the highest monogamy
/// (ties -> smallest delta).
double choose_delta_by_monogamy(const SimilarityMatrix& m, const std::vector<double>& grid);

} // namespace adamatch
