// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adamatch/rules.hpp"

namespace adamatch {

struct TraceRecord {
    int step = 0;
    Stage stage = Stage::Start;
    std::string rule;
    double relevance = 0.0;
    std::string decision;  // "applied" | "reverted" | "skipped"
    std::optional<double> check;
    std::vector<std::string> nodes;  // nodes added by the action
    std::string detail;
};

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace,
                           const FeatureReport& features);

/// Mutable state threaded through run_stage/run_adaptive. Rules read features
/// and matrices through the helpers and mutate the process through
/// add/insert operations plus the id generator.
class EngineState {
public:
    EngineState(const Schema& source, const Schema& target, EngineConfig config,
                const DatatypeTable& table, const std::set<std::string>& wordlist);

    const Schema& source() const { return source_; }
    const Schema& target() const { return target_; }
    const EngineConfig& config() const { return config_; }
    const FeatureReport& features() const { return features_; }
    const DatatypeTable& datatype_table() const { return table_; }

    MatchProcess& process() { return process_; }
    const MatchProcess& process() const { return process_; }
    ExecutionCache& cache() { return cache_; }
    const ExecutionCache& cache() const { return cache_; }
    std::vector<TraceRecord>& trace() { return trace_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }

    /// Executes the current process (incremental).
    void run_process();

    std::string fresh_id(const std::string& hint);

    /// The dangling matrix-producing node the next operator should read;
    /// with several candidates, the most recently inserted one.
    std::optional<std::string> terminal_node() const;
    const SimilarityMatrix* terminal_matrix() const;

    /// Output of the most recently added selection node; before any selection
    /// exists, a provisional top-1 (Both) selection of the terminal matrix.
    std::shared_ptr<const SimilarityMatrix> current_selected_matrix() const;

    /// Non-1:1 gate: monogamy checks are skipped while the current selected
    /// matrix has multi_matches > 0.5 and the schemas' size ratio is < 0.5.
    bool monogamy_checks_disabled() const;

    // bookkeeping written by rules
    std::string last_selection_node;   // most recent final selection node id
    std::string refine_agg_node;       // max-aggregation of the open refine pass
    std::string refine_constituent;    // constituent for refine matchers
    std::vector<SelectionParams> selection_recipe;  // params of the last select pass

    /// Re-applies the last selection recipe to a matrix (used by refine
    /// checks to compare like with like).
    SimilarityMatrix apply_selection_recipe(const SimilarityMatrix& m) const;

    // exposed for rule implementations
    double rule_relevance_threshold(const MatchingRule& r) const;
    double rule_check_threshold(const MatchingRule& r) const;
    bool rule_enabled(const MatchingRule& r) const;

    /// Collected process renderings: the initial process plus one entry per
    /// kept rule application (cmd_explain --steps).
    std::vector<std::string> dot_steps;
    bool collect_dot_steps = false;

private:
    const Schema& source_;
    const Schema& target_;
    EngineConfig config_;
    const DatatypeTable& table_;
    const std::set<std::string>& wordlist_;
    FeatureReport features_;
    MatchProcess process_;
    ExecutionCache cache_;
    std::vector<TraceRecord> trace_;
    int id_counter_ = 0;
};

/// One pass over the rules of a stage: repeatedly applies the most relevant
/// remaining rule above its threshold, reverting applications whose check
/// fails. Returns the number of kept applications.
int run_stage(EngineState& state, Stage stage, std::vector<MatchingRule>& registry);

struct AdaptiveResult {
    MatchProcess process;
    Mapping mapping;
    std::vector<TraceRecord> trace;
    FeatureReport features;
    std::vector<std::string> dot_steps;
    long long evaluations = 0;
};

/// Full pipeline: analyze -> start -> aggregation -> rewrite -> select ->
/// iterated refine (refine + re-select), bounded by max_refine_iterations.
AdaptiveResult run_adaptive(const Schema& source, const Schema& target,
                            const EngineConfig& config = {},
                            bool collect_dot_steps = false);

} // namespace adamatch
