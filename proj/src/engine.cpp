// SPDX-License-Identifier: Apache-2.0
#include "adamatch/engine.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

using ordered_json = nlohmann::ordered_json;

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace,
                           const FeatureReport& features) {
    std::string out;
    {
        auto ordered = [](const std::map<std::string, double>& values,
                          const std::vector<std::string>& order) {
            ordered_json f;
            for (const auto& key : order)
                if (values.count(key)) f[key] = values.at(key);
            return f;
        };
        ordered_json j;
        j["record"] = "features";
        j["source"] = ordered(features.source, schema_feature_order());
        j["target"] = ordered(features.target, schema_feature_order());
        j["pair"] = ordered(features.pair, pair_feature_order());
        out += j.dump() + "\n";
    }
    for (const auto& r : trace) {
        ordered_json j;
        j["record"] = "rule";
        j["step"] = r.step;
        j["stage"] = stage_name(r.stage);
        j["rule"] = r.rule;
        j["relevance"] = r.relevance;
        j["decision"] = r.decision;
        if (r.check) j["check"] = *r.check;
        if (!r.nodes.empty()) j["nodes"] = r.nodes;
        if (!r.detail.empty()) j["detail"] = r.detail;
        out += j.dump() + "\n";
    }
    return out;
}

EngineState::EngineState(const Schema& source, const Schema& target, EngineConfig config,
                         const DatatypeTable& table, const std::set<std::string>& wordlist)
    : source_(source),
      target_(target),
      config_(std::move(config)),
      table_(table),
      wordlist_(wordlist),
      features_(compute_feature_report(source, target, wordlist, config_.depth_cap)),
      process_(MatchProcess::with_input("input")) {}

void EngineState::run_process() {
    ExecContext ctx;
    ctx.source = &source_;
    ctx.target = &target_;
    ctx.datatype_table = &table_;
    ctx.jobs = config_.jobs;
    execute(process_, cache_, ctx);
}

std::string EngineState::fresh_id(const std::string& hint) {
    std::string id;
    do {
        id = hint + std::to_string(++id_counter_);
    } while (process_.has(id));
    return id;
}

std::optional<std::string> EngineState::terminal_node() const {
    std::optional<std::string> last;
    for (const auto& id : process_.dangling_nodes())
        if (process_.node(id).op != OpKind::Input) last = id;
    return last;
}

const SimilarityMatrix* EngineState::terminal_matrix() const {
    auto t = terminal_node();
    return t ? cache_.result(*t) : nullptr;
}

std::shared_ptr<const SimilarityMatrix> EngineState::current_selected_matrix() const {
    if (!last_selection_node.empty() && process_.has(last_selection_node)) {
        auto it = cache_.results.find(last_selection_node);
        if (it != cache_.results.end()) return it->second;
    }
    const SimilarityMatrix* tm = terminal_matrix();
    if (!tm) return nullptr;
    // provisional view: what a plain best-match selection would keep
    return std::make_shared<SimilarityMatrix>(select_maxn(*tm, 1, SelectDirection::Both));
}

bool EngineState::monogamy_checks_disabled() const {
    auto sel = current_selected_matrix();
    if (!sel) return false;
    auto it = features_.pair.find("schemaSizeRatio");
    double ratio = it == features_.pair.end() ? 1.0 : it->second;
    return multi_matches(*sel) > 0.5 && ratio < 0.5;
}

SimilarityMatrix EngineState::apply_selection_recipe(const SimilarityMatrix& m) const {
    if (selection_recipe.empty()) return select_maxn(m, 1, SelectDirection::Both);
    SimilarityMatrix cur = m;
    for (const auto& p : selection_recipe) {
        switch (p.strategy) {
        case SelectStrategy::Threshold: cur = select_threshold(cur, p.threshold); break;
        case SelectStrategy::MaxN: cur = select_maxn(cur, p.n, p.direction); break;
        case SelectStrategy::Delta: cur = select_delta(cur, p.n, p.delta, p.direction); break;
        }
    }
    return cur;
}

double EngineState::rule_relevance_threshold(const MatchingRule& r) const {
    auto it = config_.rules.find(r.name);
    if (it != config_.rules.end() && it->second.relevance_threshold)
        return *it->second.relevance_threshold;
    return r.relevance_threshold;
}

double EngineState::rule_check_threshold(const MatchingRule& r) const {
    auto it = config_.rules.find(r.name);
    if (it != config_.rules.end() && it->second.check_threshold)
        return *it->second.check_threshold;
    return r.check_threshold;
}

bool EngineState::rule_enabled(const MatchingRule& r) const {
    auto it = config_.rules.find(r.name);
    return it == config_.rules.end() || it->second.enabled;
}

int run_stage(EngineState& state, Stage stage, std::vector<MatchingRule>& registry) {
    std::vector<MatchingRule*> remaining;
    for (auto& r : registry)
        if (r.stage == stage && state.rule_enabled(r)) remaining.push_back(&r);

    int kept = 0;
    std::vector<double> last_relevance(remaining.size(), 0.0);
    while (!remaining.empty()) {
        int best = -1;
        double best_rel = 0.0;
        for (size_t i = 0; i < remaining.size(); ++i) {
            double rel = remaining[i]->relevance(state);
            last_relevance[i] = rel;
            if (rel <= state.rule_relevance_threshold(*remaining[i])) continue;
            if (best < 0 || rel > best_rel) {  // ties fall to registry order
                best = static_cast<int>(i);
                best_rel = rel;
            }
        }
        if (best < 0) break;

        MatchingRule* rule = remaining[best];
        // gate decided on the pre-application state
        bool monogamy_gated = rule->check && rule->check_uses_monogamy &&
                              state.monogamy_checks_disabled();
        ProcessSnapshot snap = snapshot(state.process(), state.cache());
        std::string saved_selection = state.last_selection_node;
        std::string saved_refine_agg = state.refine_agg_node;
        std::vector<SelectionParams> saved_recipe = state.selection_recipe;

        ApplyResult result = rule->action(state);
        state.run_process();

        std::optional<double> check_value;
        std::string decision = "applied";
        std::string detail = result.detail;
        if (rule->check) {
            if (monogamy_gated) {
                if (!detail.empty()) detail += "; ";
                detail += "check skipped: non-1:1 mapping signals";
            } else {
                check_value = rule->check(state, result);
                if (*check_value < state.rule_check_threshold(*rule)) {
                    revert_to(snap, state.process(), state.cache());
                    state.last_selection_node = saved_selection;
                    state.refine_agg_node = saved_refine_agg;
                    state.selection_recipe = saved_recipe;
                    decision = "reverted";
                }
            }
        }
        if (decision == "applied") {
            ++kept;
            if (state.collect_dot_steps) state.dot_steps.push_back(state.process().export_dot());
        }

        TraceRecord rec;
        rec.step = static_cast<int>(state.trace().size()) + 1;
        rec.stage = stage;
        rec.rule = rule->name;
        rec.relevance = best_rel;
        rec.decision = decision;
        rec.check = check_value;
        rec.nodes = result.added_nodes;
        rec.detail = detail;
        state.trace().push_back(std::move(rec));

        remaining.erase(remaining.begin() + best);
        last_relevance.erase(last_relevance.begin() + best);
    }

    // stage ends: log why the survivors never fired
    for (size_t i = 0; i < remaining.size(); ++i) {
        TraceRecord rec;
        rec.step = static_cast<int>(state.trace().size()) + 1;
        rec.stage = stage;
        rec.rule = remaining[i]->name;
        rec.relevance = last_relevance[i];
        rec.decision = "skipped";
        rec.detail = "relevance not above threshold";
        state.trace().push_back(std::move(rec));
    }
    return kept;
}

AdaptiveResult run_adaptive(const Schema& source, const Schema& target,
                            const EngineConfig& config, bool collect_dot_steps) {
    std::set<std::string> wordlist = config.wordlist_path.empty()
                                         ? builtin_wordlist()
                                         : load_wordlist(config.wordlist_path);
    DatatypeTable table;
    if (!config.datatype_table_path.empty())
        table = DatatypeTable::load(config.datatype_table_path);

    EngineState state(source, target, config, table, wordlist);
    state.collect_dot_steps = collect_dot_steps;
    state.run_process();
    if (collect_dot_steps) state.dot_steps.push_back(state.process().export_dot());

    auto registry = default_registry();
    run_stage(state, Stage::Start, registry);
    run_stage(state, Stage::Aggregation, registry);
    run_stage(state, Stage::Rewrite, registry);
    run_stage(state, Stage::Select, registry);

    for (int iter = 0; iter < state.config().max_refine_iterations; ++iter) {
        auto t = state.terminal_node();
        if (!t) break;
        state.refine_constituent = *t;  // matches propagate from this snapshot
        state.refine_agg_node.clear();
        if (run_stage(state, Stage::Refine, registry) == 0) break;
        run_stage(state, Stage::Select, registry);
    }

    AdaptiveResult out;
    out.process = state.process();
    out.trace = state.trace();
    out.features = state.features();
    out.dot_steps = state.dot_steps;
    out.evaluations = state.cache().eval_count;
    auto t = state.terminal_node();
    const SimilarityMatrix* final_matrix = t ? state.cache().result(*t) : nullptr;
    if (final_matrix)
        out.mapping = to_mapping(*final_matrix, source.id, target.id);
    else
        out.mapping = Mapping{source.id, target.id, {}};
    return out;
}

} // namespace adamatch
