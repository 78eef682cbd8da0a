// SPDX-License-Identifier: Apache-2.0
#include "adamatch/process.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* op_kind_name(OpKind k) {
    switch (k) {
    case OpKind::Input: return "input";
    case OpKind::Matcher: return "matcher";
    case OpKind::Aggregation: return "aggregation";
    case OpKind::Selection: return "selection";
    }
    return "?";
}

OpKind op_kind_from_name(const std::string& s) {
    if (s == "input") return OpKind::Input;
    if (s == "matcher") return OpKind::Matcher;
    if (s == "aggregation") return OpKind::Aggregation;
    if (s == "selection") return OpKind::Selection;
    throw ParseError("unknown operator kind '" + s + "'");
}

const char* agg_strategy_name(AggStrategy s) {
    switch (s) {
    case AggStrategy::Average: return "average";
    case AggStrategy::Max: return "max";
    case AggStrategy::Min: return "min";
    case AggStrategy::Weighted: return "weighted";
    }
    return "?";
}

AggStrategy agg_strategy_from_name(const std::string& s) {
    if (s == "average") return AggStrategy::Average;
    if (s == "max") return AggStrategy::Max;
    if (s == "min") return AggStrategy::Min;
    if (s == "weighted") return AggStrategy::Weighted;
    throw ParseError("unknown aggregation strategy '" + s + "'");
}

const char* sel_strategy_name(SelectStrategy s) {
    switch (s) {
    case SelectStrategy::Threshold: return "threshold";
    case SelectStrategy::MaxN: return "maxn";
    case SelectStrategy::Delta: return "delta";
    }
    return "?";
}

SelectStrategy sel_strategy_from_name(const std::string& s) {
    if (s == "threshold") return SelectStrategy::Threshold;
    if (s == "maxn") return SelectStrategy::MaxN;
    if (s == "delta") return SelectStrategy::Delta;
    throw ParseError("unknown selection strategy '" + s + "'");
}

const char* direction_name(SelectDirection d) {
    switch (d) {
    case SelectDirection::Rows: return "rows";
    case SelectDirection::Columns: return "columns";
    case SelectDirection::Both: return "both";
    }
    return "?";
}

SelectDirection direction_from_name(const std::string& s) {
    if (s == "rows") return SelectDirection::Rows;
    if (s == "columns") return SelectDirection::Columns;
    if (s == "both") return SelectDirection::Both;
    throw ParseError("unknown selection direction '" + s + "'");
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// Parameter part of a node's stable description (hashing, dot labels).
std::string node_params(const OperatorNode& n) {
    switch (n.op) {
    case OpKind::Input:
        return "";
    case OpKind::Matcher:
        return matcher_kind_name(n.matcher);
    case OpKind::Aggregation: {
        std::string s = agg_strategy_name(n.agg.strategy);
        if (n.agg.strategy == AggStrategy::Weighted) {
            s += "[";
            for (size_t i = 0; i < n.agg.weights.size(); ++i)
                s += (i ? "," : "") + fmt_num(n.agg.weights[i]);
            s += "]";
        }
        return s;
    }
    case OpKind::Selection: {
        const auto& p = n.sel;
        switch (p.strategy) {
        case SelectStrategy::Threshold:
            return "threshold(t=" + fmt_num(p.threshold) + ")";
        case SelectStrategy::MaxN:
            return "maxn(n=" + std::to_string(p.n) + "," + direction_name(p.direction) + ")";
        case SelectStrategy::Delta:
            return "delta(n=" + std::to_string(p.n) + ",d=" + fmt_num(p.delta) + "," +
                   direction_name(p.direction) + ")";
        }
        return "";
    }
    }
    return "";
}

uint64_t fnv1a(const std::string& data, uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a_mix(uint64_t value, uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= value & 0xff;
        h *= 1099511628211ull;
        value >>= 8;
    }
    return h;
}

} // namespace

MatchProcess MatchProcess::with_input(const std::string& input_id) {
    MatchProcess p;
    OperatorNode in;
    in.id = input_id;
    in.op = OpKind::Input;
    p.add_node(in);
    return p;
}

int MatchProcess::index_of(const std::string& id) const {
    for (size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id == id) return static_cast<int>(i);
    return -1;
}

bool MatchProcess::has(const std::string& id) const { return index_of(id) >= 0; }

const OperatorNode& MatchProcess::node(const std::string& id) const {
    int i = index_of(id);
    if (i < 0) throw EngineError("process: unknown node '" + id + "'");
    return nodes_[i];
}

void MatchProcess::validate_node(const OperatorNode& n, bool inputs_must_exist) const {
    if (n.id.empty()) throw ValidationError("process: node with empty id");
    if (has(n.id)) throw ValidationError("process: duplicate node id '" + n.id + "'");
    auto produces_matrix = [&](const std::string& id) {
        return node(id).op != OpKind::Input;
    };
    if (inputs_must_exist)
        for (const auto& in : n.inputs)
            if (!has(in))
                throw ValidationError("process: node '" + n.id + "' references missing input '" +
                                      in + "'");
    switch (n.op) {
    case OpKind::Input:
        if (!n.inputs.empty())
            throw ValidationError("process: input node '" + n.id + "' cannot have inputs");
        for (const auto& existing : nodes_)
            if (existing.op == OpKind::Input)
                throw ValidationError("process: second input node '" + n.id + "'");
        break;
    case OpKind::Matcher:
        if (n.inputs.size() != 1)
            throw ValidationError("process: matcher '" + n.id + "' needs exactly one input");
        if (is_structural(n.matcher) && !produces_matrix(n.inputs[0]))
            throw ValidationError("process: structural matcher '" + n.id +
                                  "' needs a matrix-producing constituent");
        break;
    case OpKind::Aggregation:
        if (n.inputs.empty())
            throw ValidationError("process: aggregation '" + n.id + "' needs at least one input");
        for (const auto& in : n.inputs)
            if (!produces_matrix(in))
                throw ValidationError("process: aggregation '" + n.id +
                                      "' input '" + in + "' does not produce a matrix");
        if (n.agg.strategy == AggStrategy::Weighted && n.agg.weights.size() != n.inputs.size())
            throw ValidationError("process: aggregation '" + n.id +
                                  "' weight count does not match input count");
        break;
    case OpKind::Selection:
        if (n.inputs.size() != 1)
            throw ValidationError("process: selection '" + n.id + "' needs exactly one input");
        if (!produces_matrix(n.inputs[0]))
            throw ValidationError("process: selection '" + n.id +
                                  "' input does not produce a matrix");
        break;
    }
    if (n.op != OpKind::Input && nodes_.empty())
        throw ValidationError("process: first node must be the input node");
}

void MatchProcess::add_node(const OperatorNode& n) {
    validate_node(n, true);
    nodes_.push_back(n);
}

void MatchProcess::add_input(const std::string& agg_id, const std::string& new_input) {
    int i = index_of(agg_id);
    if (i < 0) throw EngineError("process: unknown node '" + agg_id + "'");
    if (nodes_[i].op != OpKind::Aggregation)
        throw ValidationError("process: add_input target '" + agg_id + "' is not an aggregation");
    int j = index_of(new_input);
    if (j < 0) throw ValidationError("process: unknown input '" + new_input + "'");
    if (nodes_[j].op == OpKind::Input)
        throw ValidationError("process: aggregation input must produce a matrix");
    for (const auto& in : nodes_[i].inputs)
        if (in == new_input)
            throw ValidationError("process: '" + new_input + "' is already an input of '" +
                                  agg_id + "'");
    // reject edges that would close a cycle: agg must not feed new_input
    std::set<std::string> reach;
    std::vector<std::string> work = {agg_id};
    while (!work.empty()) {
        std::string cur = work.back();
        work.pop_back();
        if (!reach.insert(cur).second) continue;
        for (const auto& consumer : consumers(cur)) work.push_back(consumer);
    }
    if (reach.count(new_input))
        throw ValidationError("process: adding input '" + new_input + "' to '" + agg_id +
                              "' would create a cycle");
    nodes_[i].inputs.push_back(new_input);
}

void MatchProcess::insert_after(const std::string& after_id, OperatorNode n) {
    int target = index_of(after_id);
    if (target < 0) throw EngineError("process: unknown node '" + after_id + "'");
    if (has(n.id)) throw ValidationError("process: duplicate node id '" + n.id + "'");
    n.inputs = {after_id};
    // arity: the inserted node must accept a single input of the target's type
    bool target_is_matrix = nodes_[target].op != OpKind::Input;
    switch (n.op) {
    case OpKind::Input:
        throw ValidationError("process: cannot insert an input node");
    case OpKind::Matcher:
        if (is_structural(n.matcher) && !target_is_matrix)
            throw ValidationError("process: structural matcher '" + n.id +
                                  "' needs a matrix-producing constituent");
        break;
    case OpKind::Aggregation:
    case OpKind::Selection:
        if (!target_is_matrix)
            throw ValidationError("process: node '" + n.id +
                                  "' cannot read the input node; it needs a matrix");
        break;
    }
    for (auto& existing : nodes_)
        for (auto& in : existing.inputs)
            if (in == after_id) in = n.id;
    nodes_.push_back(std::move(n));
}

void MatchProcess::rewire_input(const std::string& id, const std::string& new_input) {
    int i = index_of(id);
    if (i < 0) throw EngineError("process: unknown node '" + id + "'");
    int j = index_of(new_input);
    if (j < 0) throw EngineError("process: unknown node '" + new_input + "'");
    OperatorNode& n = nodes_[i];
    if (n.inputs.size() != 1)
        throw ValidationError("process: rewire_input needs a single-input node");
    bool new_is_matrix = nodes_[j].op != OpKind::Input;
    if ((n.op == OpKind::Selection || n.op == OpKind::Aggregation ||
         (n.op == OpKind::Matcher && is_structural(n.matcher))) &&
        !new_is_matrix)
        throw ValidationError("process: node '" + id + "' needs a matrix-producing input");
    // the new upstream must not depend on this node
    std::set<std::string> reach;
    std::vector<std::string> work = {id};
    while (!work.empty()) {
        std::string cur = work.back();
        work.pop_back();
        if (!reach.insert(cur).second) continue;
        for (const auto& consumer : consumers(cur)) work.push_back(consumer);
    }
    if (reach.count(new_input))
        throw ValidationError("process: rewiring '" + id + "' to '" + new_input +
                              "' would create a cycle");
    n.inputs[0] = new_input;
}

void MatchProcess::remove_node(const std::string& id) {
    int i = index_of(id);
    if (i < 0) throw EngineError("process: unknown node '" + id + "'");
    if (!consumers(id).empty())
        throw ValidationError("process: cannot remove node '" + id + "' while it has consumers");
    nodes_.erase(nodes_.begin() + i);
}

std::vector<std::string> MatchProcess::consumers(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        for (const auto& in : n.inputs)
            if (in == id) {
                out.push_back(n.id);
                break;
            }
    return out;
}

std::vector<std::string> MatchProcess::dangling_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        if (consumers(n.id).empty()) out.push_back(n.id);
    return out;
}

std::string MatchProcess::input_node() const {
    for (const auto& n : nodes_)
        if (n.op == OpKind::Input) return n.id;
    throw EngineError("process: no input node");
}

void MatchProcess::set_selection(const std::string& id, const SelectionParams& params) {
    int i = index_of(id);
    if (i < 0) throw EngineError("process: unknown node '" + id + "'");
    if (nodes_[i].op != OpKind::Selection)
        throw ValidationError("process: node '" + id + "' is not a selection");
    nodes_[i].sel = params;
}

uint64_t MatchProcess::upstream_hash(const std::string& id) const {
    const OperatorNode& n = node(id);
    uint64_t h = fnv1a(n.id);
    h = fnv1a(op_kind_name(n.op), h);
    h = fnv1a(node_params(n), h);
    for (const auto& in : n.inputs) h = fnv1a_mix(upstream_hash(in), h);
    return h;
}

uint64_t MatchProcess::structural_hash() const {
    uint64_t h = fnv1a("process");
    for (const auto& n : nodes_) {
        h = fnv1a(n.id, h);
        h = fnv1a(op_kind_name(n.op), h);
        h = fnv1a(node_params(n), h);
        for (const auto& in : n.inputs) h = fnv1a(in, h);
    }
    return h;
}

std::vector<std::string> MatchProcess::topological_order() const {
    // Kahn's algorithm; ready nodes are taken in insertion order, so the
    // result is stable for a given process.
    std::map<std::string, int> pending;
    for (const auto& n : nodes_) pending[n.id] = static_cast<int>(n.inputs.size());
    std::vector<std::string> order;
    std::vector<char> done(nodes_.size(), 0);
    while (order.size() < nodes_.size()) {
        bool progressed = false;
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (done[i] || pending[nodes_[i].id] != 0) continue;
            done[i] = 1;
            order.push_back(nodes_[i].id);
            for (const auto& consumer : consumers(nodes_[i].id)) --pending[consumer];
            progressed = true;
        }
        if (!progressed) throw EngineError("process: cycle detected");
    }
    return order;
}

std::string MatchProcess::export_dot() const {
    std::ostringstream out;
    out << "digraph match_process {\n";
    out << "  rankdir=LR;\n";
    for (const auto& n : nodes_) {
        std::string label = op_kind_name(n.op);
        std::string params = node_params(n);
        if (!params.empty()) label += ": " + params;
        const char* shape = n.op == OpKind::Input ? "circle"
                            : n.op == OpKind::Matcher ? "box"
                            : n.op == OpKind::Aggregation ? "hexagon"
                                                          : "diamond";
        out << "  \"" << n.id << "\" [label=\"" << label << "\" shape=" << shape << "];\n";
    }
    for (const auto& n : nodes_)
        for (const auto& in : n.inputs)
            out << "  \"" << in << "\" -> \"" << n.id << "\";\n";
    out << "}\n";
    return out.str();
}

// -- execution ----------------------------------------------------------------

const SimilarityMatrix* ExecutionCache::result(const std::string& id) const {
    auto it = results.find(id);
    return it == results.end() ? nullptr : it->second.get();
}

void execute(const MatchProcess& p, ExecutionCache& cache, const ExecContext& ctx) {
    if (!ctx.source || !ctx.target) throw EngineError("execute: missing schemas");
    auto order = p.topological_order();

    // upstream hashes, memoized over this execution
    std::map<std::string, uint64_t> hash;
    for (const auto& id : order) {
        const OperatorNode& n = p.node(id);
        uint64_t h = fnv1a(n.id);
        h = fnv1a(op_kind_name(n.op), h);
        h = fnv1a(node_params(n), h);
        for (const auto& in : n.inputs) h = fnv1a_mix(hash.at(in), h);
        hash[id] = h;
    }

    for (const auto& id : order) {
        auto ver = cache.versions.find(id);
        if (ver != cache.versions.end() && ver->second == hash[id] && cache.results.count(id))
            continue;  // cached result still valid
        const OperatorNode& n = p.node(id);
        std::shared_ptr<const SimilarityMatrix> result;
        switch (n.op) {
        case OpKind::Input:
            // carries the schema pair; its matrix result is an empty placeholder
            result = std::make_shared<SimilarityMatrix>();
            break;
        case OpKind::Matcher: {
            MatcherOptions opt;
            opt.datatype_table = ctx.datatype_table;
            opt.jobs = ctx.jobs;
            const OperatorNode& src = p.node(n.inputs[0]);
            if (src.op != OpKind::Input) {
                const SimilarityMatrix* upstream = cache.result(src.id);
                if (!upstream) throw EngineError("execute: missing upstream result for '" + id + "'");
                if (is_structural(n.matcher))
                    opt.constituent = upstream;
                else
                    opt.mask = upstream;  // sequential topology: prune dead rows/columns
            }
            result = std::make_shared<SimilarityMatrix>(
                compute_matcher(n.matcher, *ctx.source, *ctx.target, opt));
            break;
        }
        case OpKind::Aggregation: {
            std::vector<const SimilarityMatrix*> inputs;
            for (const auto& in : n.inputs) {
                const SimilarityMatrix* m = cache.result(in);
                if (!m) throw EngineError("execute: missing upstream result for '" + id + "'");
                inputs.push_back(m);
            }
            result = std::make_shared<SimilarityMatrix>(
                aggregate(inputs, n.agg.strategy, n.agg.weights));
            break;
        }
        case OpKind::Selection: {
            const SimilarityMatrix* m = cache.result(n.inputs[0]);
            if (!m) throw EngineError("execute: missing upstream result for '" + id + "'");
            SimilarityMatrix sel;
            switch (n.sel.strategy) {
            case SelectStrategy::Threshold: sel = select_threshold(*m, n.sel.threshold); break;
            case SelectStrategy::MaxN: sel = select_maxn(*m, n.sel.n, n.sel.direction); break;
            case SelectStrategy::Delta:
                sel = select_delta(*m, n.sel.n, n.sel.delta, n.sel.direction);
                break;
            }
            result = std::make_shared<SimilarityMatrix>(std::move(sel));
            break;
        }
        }
        cache.results[id] = std::move(result);
        cache.versions[id] = hash[id];
        ++cache.eval_count;
    }

    // drop stale entries (removed or rewired nodes)
    for (auto it = cache.results.begin(); it != cache.results.end();) {
        auto h = hash.find(it->first);
        if (h == hash.end() || cache.versions[it->first] != h->second) {
            cache.versions.erase(it->first);
            it = cache.results.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = cache.versions.begin(); it != cache.versions.end();) {
        if (!cache.results.count(it->first)) it = cache.versions.erase(it);
        else ++it;
    }
}

ProcessSnapshot snapshot(const MatchProcess& p, const ExecutionCache& cache) {
    return ProcessSnapshot{p, cache.results, cache.versions};
}

void revert_to(const ProcessSnapshot& snap, MatchProcess& p, ExecutionCache& cache) {
    p = snap.process;
    cache.results = snap.results;
    cache.versions = snap.versions;
    // eval_count is an odometer and keeps its value
}

// -- process files ------------------------------------------------------------

MatchProcess parse_process(const std::string& json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(origin + ": expected a JSON list of nodes");
    MatchProcess p;
    try {
        for (const auto& jn : j) {
            OperatorNode n;
            n.id = jn.at("id").get<std::string>();
            n.op = op_kind_from_name(jn.at("op").get<std::string>());
            if (n.op == OpKind::Matcher)
                n.matcher = matcher_kind_from_name(jn.at("kind").get<std::string>());
            if (n.op == OpKind::Aggregation) {
                n.agg.strategy = agg_strategy_from_name(jn.value("strategy", "average"));
                if (jn.contains("weights"))
                    for (const auto& w : jn.at("weights")) n.agg.weights.push_back(w.get<double>());
            }
            if (n.op == OpKind::Selection) {
                n.sel.strategy = sel_strategy_from_name(jn.at("strategy").get<std::string>());
                n.sel.threshold = jn.value("t", 0.0);
                n.sel.n = jn.value("n", 1);
                n.sel.delta = jn.value("delta", 0.0);
                n.sel.direction = direction_from_name(jn.value("direction", "both"));
            }
            if (jn.contains("inputs"))
                for (const auto& in : jn.at("inputs")) n.inputs.push_back(in.get<std::string>());
            p.add_node(n);  // nodes must appear after their inputs
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!j.empty()) p.input_node();  // exactly-one-input is enforced per node; require at least one
    return p;
}

MatchProcess load_process(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_process(ss.str(), path);
}

std::string serialize_process(const MatchProcess& p) {
    ordered_json j = ordered_json::array();
    // the file format requires inputs before consumers, which insertion order
    // no longer guarantees once nodes have been spliced into existing edges
    for (const auto& id : p.topological_order()) {
        const auto& n = p.node(id);
        ordered_json jn;
        jn["id"] = n.id;
        jn["op"] = op_kind_name(n.op);
        switch (n.op) {
        case OpKind::Input:
            break;
        case OpKind::Matcher:
            jn["kind"] = matcher_kind_name(n.matcher);
            break;
        case OpKind::Aggregation:
            jn["strategy"] = agg_strategy_name(n.agg.strategy);
            if (n.agg.strategy == AggStrategy::Weighted) jn["weights"] = n.agg.weights;
            break;
        case OpKind::Selection:
            jn["strategy"] = sel_strategy_name(n.sel.strategy);
            if (n.sel.strategy == SelectStrategy::Threshold) jn["t"] = n.sel.threshold;
            if (n.sel.strategy != SelectStrategy::Threshold) {
                jn["n"] = n.sel.n;
                jn["direction"] = direction_name(n.sel.direction);
            }
            if (n.sel.strategy == SelectStrategy::Delta) jn["delta"] = n.sel.delta;
            break;
        }
        if (!n.inputs.empty()) jn["inputs"] = n.inputs;
        j.push_back(std::move(jn));
    }
    return j.dump(2) + "\n";
}

void save_process(const MatchProcess& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << serialize_process(p);
}

} // namespace adamatch
