// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adamatch/matchers.hpp"
#include "adamatch/matrix.hpp"

namespace adamatch {

enum class OpKind { Input, Matcher, Aggregation, Selection };

enum class SelectStrategy { Threshold, MaxN, Delta };

struct SelectionParams {
    SelectStrategy strategy = SelectStrategy::Threshold;
    double threshold = 0.0;                          // Threshold
    int n = 1;                                       // MaxN / Delta
    double delta = 0.0;                              // Delta
    SelectDirection direction = SelectDirection::Both;
};

struct AggregationParams {
    AggStrategy strategy = AggStrategy::Average;
    std::vector<double> weights;  // Weighted only
};

/// One operator of a matching process. Arity invariants:
///   input       -- no inputs; exactly one per process
///   matcher     -- exactly 1 input: the input node (element matchers), a
///                  constituent matrix (structural matchers), or a mask
///                  matrix (element matchers running after a pre-selection)
///   aggregation -- >= 1 matrix inputs
///   selection   -- exactly 1 matrix input
struct OperatorNode {
    std::string id;
    OpKind op = OpKind::Input;
    MatcherKind matcher = MatcherKind::Name;  // OpKind::Matcher only
    AggregationParams agg;                    // OpKind::Aggregation only
    SelectionParams sel;                      // OpKind::Selection only
    std::vector<std::string> inputs;
};

/// Acyclic operator graph with exactly one input node; every node is
/// reachable from it. Node order is insertion order and is the stable
/// iteration order for everything observable (dot export, dangling list).
class MatchProcess {
public:
    MatchProcess() = default;
    static MatchProcess with_input(const std::string& input_id = "input");

    /// Validates arity/type constraints; inputs must already exist.
    void add_node(const OperatorNode& node);
    /// Appends an input to an existing aggregation node.
    void add_input(const std::string& agg_id, const std::string& new_input);
    /// Rewires every consumer of `after_id` to read the new node, which
    /// itself reads `after_id`. The node must be single-input.
    void insert_after(const std::string& after_id, OperatorNode node);
    /// Repoints a single-input node at a different upstream node (used by the
    /// sequential rewrite to route matchers through a pre-selection).
    void rewire_input(const std::string& id, const std::string& new_input);
    void remove_node(const std::string& id);  // node must have no consumers

    bool has(const std::string& id) const;
    const OperatorNode& node(const std::string& id) const;
    const std::vector<OperatorNode>& nodes() const { return nodes_; }
    std::vector<std::string> consumers(const std::string& id) const;
    /// Nodes without consumers, in insertion order.
    std::vector<std::string> dangling_nodes() const;
    std::string input_node() const;  // throws EngineError if absent

    /// FNV-1a over node definitions and edges; equal for structurally
    /// identical processes.
    uint64_t structural_hash() const;
    /// Hash of the subgraph feeding a node (the node included).
    uint64_t upstream_hash(const std::string& id) const;

    std::vector<std::string> topological_order() const;

    /// Deterministic, byte-stable graphviz rendering.
    std::string export_dot() const;

    void set_selection(const std::string& id, const SelectionParams& params);

private:
    void validate_node(const OperatorNode& node, bool inputs_must_exist) const;
    int index_of(const std::string& id) const;

    std::vector<OperatorNode> nodes_;
};

/// Results of a previous execute() keyed by node id plus the upstream hash
/// they were computed under. Matrices are shared, so copying a cache (for a
/// snapshot) is cheap.
struct ExecutionCache {
    std::map<std::string, std::shared_ptr<const SimilarityMatrix>> results;
    std::map<std::string, uint64_t> versions;
    /// Total node evaluations performed by execute() into this cache. The
    /// counter is an odometer: revert_to() does not rewind it.
    long long eval_count = 0;

    const SimilarityMatrix* result(const std::string& id) const;
};

struct ExecContext {
    const Schema* source = nullptr;
    const Schema* target = nullptr;
    const DatatypeTable* datatype_table = nullptr;
    int jobs = 1;
};

/// Evaluates every node whose upstream subgraph changed since the cached
/// result; unchanged nodes are reused. Stale entries are dropped. Results are
/// independent of the topological order chosen.
void execute(const MatchProcess& p, ExecutionCache& cache, const ExecContext& ctx);

struct ProcessSnapshot {
    MatchProcess process;
    std::map<std::string, std::shared_ptr<const SimilarityMatrix>> results;
    std::map<std::string, uint64_t> versions;
};

ProcessSnapshot snapshot(const MatchProcess& p, const ExecutionCache& cache);
/// Restores process and cached results; eval_count keeps running.
void revert_to(const ProcessSnapshot& snap, MatchProcess& p, ExecutionCache& cache);

/// Process file: JSON list of node records in topological order (inputs
/// before consumers).
MatchProcess load_process(const std::string& path);
MatchProcess parse_process(const std::string& json_text, const std::string& origin);
std::string serialize_process(const MatchProcess& p);
void save_process(const MatchProcess& p, const std::string& path);

} // namespace adamatch
