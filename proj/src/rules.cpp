// SPDX-License-Identifier: Apache-2.0
#include "adamatch/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adamatch/engine.hpp"
#include "adamatch/errors.hpp"

namespace adamatch {

using ordered_json = nlohmann::ordered_json;

std::string stage_name(Stage s) {
    switch (s) {
    case Stage::Start: return "start";
    case Stage::Aggregation: return "aggregation";
    case Stage::Rewrite: return "rewrite";
    case Stage::Select: return "select";
    case Stage::Refine: return "refine";
    }
    return "?";
}

std::vector<double> EngineConfig::delta_grid() const {
    std::vector<double> grid;
    if (delta_grid_step <= 0.0) throw ValidationError("config: delta grid step must be positive");
    for (int i = 0;; ++i) {
        double v = delta_grid_start + i * delta_grid_step;
        if (v > delta_grid_stop + 1e-12) break;
        grid.push_back(v);
    }
    return grid;
}

EngineConfig parse_engine_config(const std::string& json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    EngineConfig cfg;
    try {
        if (j.contains("rules"))
            for (auto it = j["rules"].begin(); it != j["rules"].end(); ++it) {
                RuleConfig rc;
                rc.enabled = it.value().value("enabled", true);
                if (it.value().contains("relevanceThreshold"))
                    rc.relevance_threshold = it.value()["relevanceThreshold"].get<double>();
                if (it.value().contains("checkThreshold"))
                    rc.check_threshold = it.value()["checkThreshold"].get<double>();
                cfg.rules[it.key()] = rc;
            }
        cfg.max_refine_iterations = j.value("maxRefineIterations", cfg.max_refine_iterations);
        if (j.contains("deltaGrid")) {
            cfg.delta_grid_start = j["deltaGrid"].value("start", cfg.delta_grid_start);
            cfg.delta_grid_stop = j["deltaGrid"].value("stop", cfg.delta_grid_stop);
            cfg.delta_grid_step = j["deltaGrid"].value("step", cfg.delta_grid_step);
        }
        cfg.cell_budget = j.value("cellBudget", cfg.cell_budget);
        cfg.depth_cap = j.value("depthCap", cfg.depth_cap);
        cfg.wordlist_path = j.value("wordlist", cfg.wordlist_path);
        cfg.datatype_table_path = j.value("datatypeTable", cfg.datatype_table_path);
        cfg.jobs = j.value("jobs", cfg.jobs);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (cfg.max_refine_iterations < 0)
        throw ValidationError(origin + ": maxRefineIterations must be >= 0");
    if (cfg.jobs < 1) throw ValidationError(origin + ": jobs must be >= 1");
    return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_engine_config(ss.str(), path);
}

double choose_delta_by_monogamy(const SimilarityMatrix& m, const std::vector<double>& grid) {
    double best_delta = 0.0;
    double best_mono = -1.0;
    for (double d : grid) {
        double mono = monogamy(select_delta(m, 1, d, SelectDirection::Both));
        if (mono > best_mono) {  // ties keep the smallest delta
            best_mono = mono;
            best_delta = d;
        }
    }
    return best_delta;
}

namespace {

double feat(const std::map<std::string, double>& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? 0.0 : it->second;
}

double min_feat(const EngineState& st, const std::string& key) {
    return std::min(feat(st.features().source, key), feat(st.features().target, key));
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// True when the terminal node already sits downstream of a final (maxn or
/// delta) selection; threshold selections (noise floors) are transparent.
bool has_final_selection(const EngineState& st) {
    auto t = st.terminal_node();
    if (!t) return false;
    std::string cur = *t;
    while (true) {
        const OperatorNode& n = st.process().node(cur);
        if (n.op != OpKind::Selection) return false;
        if (n.sel.strategy != SelectStrategy::Threshold) return true;
        cur = n.inputs[0];
    }
}

/// Element matchers added by start rules read the input node directly.
ApplyResult add_element_matcher(EngineState& st, MatcherKind kind, const std::string& hint) {
    OperatorNode n;
    n.id = st.fresh_id(hint);
    n.op = OpKind::Matcher;
    n.matcher = kind;
    n.inputs = {st.process().input_node()};
    st.process().add_node(n);
    return ApplyResult{{n.id}, n.id, "added " + matcher_kind_name(kind) + " matcher"};
}

/// Monogamy of the node the rule produced, straight off its raw output.
double check_primary_monogamy(const EngineState& st, const ApplyResult& res) {
    const SimilarityMatrix* m = st.cache().result(res.primary_node);
    return m ? monogamy(*m) : 0.0;
}

MatchingRule make_simple_start(const std::string& name, MatcherKind kind,
                               const std::string& existence_key) {
    MatchingRule r;
    r.name = name;
    r.stage = Stage::Start;
    r.relevance_threshold = 0.5;
    r.check_threshold = 0.1;
    r.check_uses_monogamy = true;
    r.relevance = [existence_key](const EngineState& st) {
        return min_feat(st, existence_key);
    };
    std::string hint = matcher_kind_name(kind);
    r.action = [kind, hint](EngineState& st) { return add_element_matcher(st, kind, hint); };
    r.check = check_primary_monogamy;
    return r;
}

/// Shared relevance of the delta-selection rule; the maxn rule scores its
/// complement. High when multi matches exist, schema sizes differ, and the
/// multi matches are dispersed across the schema tree.
double delta_relevance(const EngineState& st) {
    if (has_final_selection(st)) return 0.0;
    auto sel = st.current_selected_matrix();
    if (!sel) return 0.0;
    double mm = multi_matches(*sel);
    double ratio = feat(st.features().pair, "schemaSizeRatio");
    double dispersion = match_distribution(*sel, st.source(), st.target());
    return (mm + (1.0 - ratio) + dispersion) / 3.0;
}

SelectionParams delta_params(int n, double delta) {
    SelectionParams p;
    p.strategy = SelectStrategy::Delta;
    p.n = n;
    p.delta = delta;
    p.direction = SelectDirection::Both;
    return p;
}

SelectionParams threshold_params(double t) {
    SelectionParams p;
    p.strategy = SelectStrategy::Threshold;
    p.threshold = t;
    return p;
}

SelectionParams maxn_params(int n) {
    SelectionParams p;
    p.strategy = SelectStrategy::MaxN;
    p.n = n;
    p.direction = SelectDirection::Both;
    return p;
}

struct RefineSpec {
    std::string name;
    MatcherKind kind;
    bool needs_deep_paths;  // path matcher: gate on the normalized depth feature
};

MatchingRule make_refine(const RefineSpec& spec) {
    MatchingRule r;
    r.name = spec.name;
    r.stage = Stage::Refine;
    r.relevance_threshold = 0.0;
    r.check_threshold = 0.1;
    // the path rule folds its monogamy conjunct into the check itself so that
    // its structural conjuncts still apply when monogamy is gated off
    r.check_uses_monogamy = spec.kind != MatcherKind::Path;
    MatcherKind kind = spec.kind;
    bool deep = spec.needs_deep_paths;
    r.relevance = [deep](const EngineState& st) {
        if (st.refine_constituent.empty() || !st.process().has(st.refine_constituent))
            return 0.0;
        if (deep) {
            // flat schemas carry no path signal
            if (feat(st.features().source, "schemaDepth") <= 0.1 ||
                feat(st.features().target, "schemaDepth") <= 0.1)
                return 0.0;
        } else {
            // neighbor matchers need at least one parent/child edge on each side
            if (st.source().max_depth() < 2 || st.target().max_depth() < 2) return 0.0;
        }
        auto sel = st.current_selected_matrix();
        if (!sel) return 0.0;
        double pv = (feat(st.features().source, "pathVariance") +
                     feat(st.features().target, "pathVariance")) / 2.0;
        return (pv + multi_matches(*sel) + (1.0 - selectivity(*sel))) / 3.0;
    };
    std::string hint = matcher_kind_name(kind);
    r.action = [kind, hint](EngineState& st) {
        ApplyResult res;
        OperatorNode m;
        m.id = st.fresh_id(hint);
        m.op = OpKind::Matcher;
        m.matcher = kind;
        m.inputs = {st.refine_constituent};
        st.process().add_node(m);
        res.added_nodes.push_back(m.id);
        res.primary_node = m.id;
        if (st.refine_agg_node.empty() || !st.process().has(st.refine_agg_node)) {
            OperatorNode agg;
            agg.id = st.fresh_id("refineAgg");
            agg.op = OpKind::Aggregation;
            agg.agg.strategy = AggStrategy::Max;
            agg.inputs = {st.refine_constituent, m.id};
            st.process().add_node(agg);
            st.refine_agg_node = agg.id;
            res.added_nodes.push_back(agg.id);
            res.detail = "added " + hint + " matcher and max aggregation";
        } else {
            st.process().add_input(st.refine_agg_node, m.id);
            res.detail = "added " + hint + " matcher";
        }
        return res;
    };
    if (spec.kind == MatcherKind::Path) {
        r.check = [](const EngineState& st, const ApplyResult&) {
            const SimilarityMatrix* base = st.cache().result(st.refine_constituent);
            const SimilarityMatrix* after = st.cache().result(st.refine_agg_node);
            if (!base || !after) return 0.0;
            SimilarityMatrix cand = st.apply_selection_recipe(*after);
            bool improved = selectivity(cand) > selectivity(*base) &&
                            multi_matches(cand) < multi_matches(*base);
            if (!improved) return 0.0;
            return st.monogamy_checks_disabled() ? 1.0 : monogamy(cand);
        };
    } else {
        r.check = [](const EngineState& st, const ApplyResult&) {
            const SimilarityMatrix* after = st.cache().result(st.refine_agg_node);
            if (!after) return 0.0;
            return monogamy(st.apply_selection_recipe(*after));
        };
    }
    return r;
}

} // namespace

std::vector<MatchingRule> default_registry() {
    std::vector<MatchingRule> rules;

    {
        MatchingRule r;
        r.name = "AddWeightedNameMatcher";
        r.stage = Stage::Start;
        r.relevance_threshold = 0.5;
        r.check_threshold = 0.1;
        r.check_uses_monogamy = true;
        r.relevance = [](const EngineState& st) {
            if (feat(st.features().source, "nameExistence") < 0.5 ||
                feat(st.features().target, "nameExistence") < 0.5)
                return 0.0;
            auto wants_weighting = [&](const std::map<std::string, double>& f) {
                return feat(f, "nodeTokenRatio") < 0.8 && feat(f, "repeatingElements") > 0.8;
            };
            // heavy token reuse rewards frequency weighting; otherwise a plain
            // trigram name matcher still earns its place
            return wants_weighting(st.features().source) || wants_weighting(st.features().target)
                       ? 1.0
                       : 0.6;
        };
        r.action = [](EngineState& st) {
            auto wants_weighting = [&](const std::map<std::string, double>& f) {
                return feat(f, "nodeTokenRatio") < 0.8 && feat(f, "repeatingElements") > 0.8;
            };
            bool weighted = wants_weighting(st.features().source) ||
                            wants_weighting(st.features().target);
            return add_element_matcher(st, weighted ? MatcherKind::WeightedName : MatcherKind::Name,
                                       weighted ? "weightedName" : "name");
        };
        r.check = check_primary_monogamy;
        rules.push_back(std::move(r));
    }

    {
        MatchingRule r = make_simple_start("AddTokenNameMatcher", MatcherKind::TokenName,
                                           "nameExistence");
        // favored when names are token sets rather than concatenated phrases
        r.relevance = [](const EngineState& st) {
            return min_feat(st, "nameExistence") * min_feat(st, "nodeTokenRatio");
        };
        rules.push_back(std::move(r));
    }

    rules.push_back(make_simple_start("AddDataTypeMatcher", MatcherKind::Datatype,
                                      "datatypeExistence"));
    rules.push_back(make_simple_start("AddAnnotationMatcher", MatcherKind::Annotation,
                                      "annotationExistence"));
    rules.push_back(make_simple_start("AddInstanceMatcher", MatcherKind::Instance,
                                      "instanceExistence"));

    {
        MatchingRule r;
        r.name = "AddAverageAgg";
        r.stage = Stage::Aggregation;
        r.relevance_threshold = 0.5;
        r.relevance = [](const EngineState& st) {
            int dangling = 0;
            for (const auto& id : st.process().dangling_nodes())
                if (st.process().node(id).op != OpKind::Input) ++dangling;
            // a single dangling node needs no combining step
            return dangling >= 2 ? 1.0 : 0.0;
        };
        r.action = [](EngineState& st) {
            OperatorNode agg;
            agg.id = st.fresh_id("agg");
            agg.op = OpKind::Aggregation;
            agg.agg.strategy = AggStrategy::Average;
            for (const auto& id : st.process().dangling_nodes())
                if (st.process().node(id).op != OpKind::Input) agg.inputs.push_back(id);
            st.process().add_node(agg);
            return ApplyResult{{agg.id}, agg.id,
                               "averaged " + std::to_string(agg.inputs.size()) + " matchers"};
        };
        rules.push_back(std::move(r));
    }

    {
        MatchingRule r;
        r.name = "AddNoiseReducingSelect";
        r.stage = Stage::Rewrite;
        r.relevance_threshold = 0.6;  // noise level that justifies a floor
        r.relevance = [](const EngineState& st) {
            double worst = 0.0;
            for (const auto& n : st.process().nodes()) {
                if (n.op != OpKind::Matcher) continue;
                const SimilarityMatrix* m = st.cache().result(n.id);
                if (m) worst = std::max(worst, noise(*m));
            }
            return worst;
        };
        r.action = [](EngineState& st) {
            double threshold = 0.6;  // per-matcher cutoff tracks the rule threshold
            auto cfg = st.config().rules.find("AddNoiseReducingSelect");
            if (cfg != st.config().rules.end() && cfg->second.relevance_threshold)
                threshold = *cfg->second.relevance_threshold;
            std::vector<std::string> noisy;
            for (const auto& n : st.process().nodes()) {
                if (n.op != OpKind::Matcher) continue;
                const SimilarityMatrix* m = st.cache().result(n.id);
                if (m && noise(*m) > threshold) noisy.push_back(n.id);
            }
            ApplyResult res;
            for (const auto& id : noisy) {
                OperatorNode sel;
                sel.id = st.fresh_id("noiseSel");
                sel.op = OpKind::Selection;
                sel.sel = threshold_params(0.1);  // very low floor: strip weak shadows only
                st.process().insert_after(id, sel);
                res.added_nodes.push_back(sel.id);
                res.primary_node = sel.id;
            }
            res.detail = "low-threshold selection after " + std::to_string(noisy.size()) +
                         " noisy matcher(s)";
            return res;
        };
        rules.push_back(std::move(r));
    }

    {
        MatchingRule r;
        r.name = "SequentialRewrite";
        r.stage = Stage::Rewrite;
        r.relevance_threshold = 0.5;
        r.relevance = [](const EngineState& st) {
            long long cells = static_cast<long long>(st.source().elements.size()) *
                              static_cast<long long>(st.target().elements.size());
            if (cells <= st.config().cell_budget) return 0.0;
            int parallel = 0;
            std::string input = st.process().input_node();
            for (const auto& n : st.process().nodes())
                if (n.op == OpKind::Matcher && n.inputs.size() == 1 && n.inputs[0] == input)
                    ++parallel;
            return parallel >= 2 ? 1.0 : 0.0;
        };
        r.action = [](EngineState& st) {
            std::string input = st.process().input_node();
            std::vector<std::string> parallel;
            for (const auto& n : st.process().nodes())
                if (n.op == OpKind::Matcher && n.inputs.size() == 1 && n.inputs[0] == input)
                    parallel.push_back(n.id);
            std::stable_sort(parallel.begin(), parallel.end(),
                             [&](const std::string& a, const std::string& b) {
                                 return matcher_cost_rank(st.process().node(a).matcher) <
                                        matcher_cost_rank(st.process().node(b).matcher);
                             });
            // cheapest matcher runs first; its thresholded output masks the rest
            OperatorNode sel;
            sel.id = st.fresh_id("preSel");
            sel.op = OpKind::Selection;
            sel.sel = threshold_params(0.1);
            st.process().insert_after(parallel[0], sel);
            for (size_t i = 1; i < parallel.size(); ++i)
                st.process().rewire_input(parallel[i], sel.id);
            ApplyResult res;
            res.added_nodes = {sel.id};
            res.primary_node = sel.id;
            res.detail = "routed " + std::to_string(parallel.size() - 1) +
                         " matcher(s) behind " + parallel[0];
            return res;
        };
        rules.push_back(std::move(r));
    }

    {
        MatchingRule r;
        r.name = "AddSelectDelta";
        r.stage = Stage::Select;
        r.relevance_threshold = 0.0;
        r.relevance = delta_relevance;
        r.action = [](EngineState& st) {
            auto t = st.terminal_node();
            const SimilarityMatrix* m = st.terminal_matrix();
            if (!t || !m) throw EngineError("AddSelectDelta: no terminal matrix");
            double delta = choose_delta_by_monogamy(*m, st.config().delta_grid());
            OperatorNode sel;
            sel.id = st.fresh_id("select");
            sel.op = OpKind::Selection;
            sel.sel = delta_params(1, delta);
            sel.inputs = {*t};
            st.process().add_node(sel);
            OperatorNode floor;
            floor.id = st.fresh_id("floor");
            floor.op = OpKind::Selection;
            floor.sel = threshold_params(0.1);  // noise floor under the delta window
            floor.inputs = {sel.id};
            st.process().add_node(floor);
            st.last_selection_node = floor.id;
            st.selection_recipe = {sel.sel, floor.sel};
            return ApplyResult{{sel.id, floor.id}, floor.id, "delta=" + fmt3(delta)};
        };
        rules.push_back(std::move(r));
    }

    {
        MatchingRule r;
        r.name = "AddSelectMaxN";
        r.stage = Stage::Select;
        r.relevance_threshold = 0.0;
        r.relevance = [](const EngineState& st) {
            if (has_final_selection(st)) return 0.0;
            if (!st.current_selected_matrix()) return 0.0;
            return 1.0 - delta_relevance(st);
        };
        r.action = [](EngineState& st) {
            auto t = st.terminal_node();
            if (!t) throw EngineError("AddSelectMaxN: no terminal node");
            OperatorNode sel;
            sel.id = st.fresh_id("select");
            sel.op = OpKind::Selection;
            sel.sel = maxn_params(1);
            sel.inputs = {*t};
            st.process().add_node(sel);
            st.last_selection_node = sel.id;
            st.selection_recipe = {sel.sel};
            return ApplyResult{{sel.id}, sel.id, "max-1 selection"};
        };
        rules.push_back(std::move(r));
    }

    rules.push_back(make_refine({"AddPathMatcher", MatcherKind::Path, true}));
    rules.push_back(make_refine({"AddChildrenMatcher", MatcherKind::Children, false}));
    rules.push_back(make_refine({"AddLeavesMatcher", MatcherKind::Leaves, false}));
    rules.push_back(make_refine({"AddParentMatcher", MatcherKind::Parent, false}));
    rules.push_back(make_refine({"AddSiblingMatcher", MatcherKind::Sibling, false}));

    return rules;
}

} // namespace adamatch
