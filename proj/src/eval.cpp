// SPDX-License-Identifier: Apache-2.0
#include "adamatch/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

GoldMapping load_gold(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    GoldMapping g;
    try {
        for (const auto& c : j.at("correspondences"))
            g.correspondences.emplace_back(c.at("s").get<std::string>(),
                                           c.at("t").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return g;
}

std::string serialize_gold(const GoldMapping& g) {
    ordered_json j;
    j["correspondences"] = ordered_json::array();
    for (const auto& [s, t] : g.correspondences) {
        ordered_json c;
        c["s"] = s;
        c["t"] = t;
        j["correspondences"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

void save_gold(const GoldMapping& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << serialize_gold(g);
}

EvalReport evaluate(const Mapping& found, const GoldMapping& gold) {
    std::set<std::pair<std::string, std::string>> found_set;
    for (const auto& c : found.correspondences) found_set.emplace(c.s, c.t);
    std::set<std::pair<std::string, std::string>> gold_set(gold.correspondences.begin(),
                                                           gold.correspondences.end());
    int tp = 0;
    for (const auto& pair : found_set)
        if (gold_set.count(pair)) ++tp;

    EvalReport r;
    r.true_positives = tp;
    r.found = static_cast<int>(found_set.size());
    r.gold = static_cast<int>(gold_set.size());
    if (found_set.empty())
        r.precision = gold_set.empty() ? 1.0 : 0.0;
    else
        r.precision = static_cast<double>(tp) / static_cast<double>(r.found);
    r.recall = gold_set.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(r.gold);
    r.f_measure = (r.precision + r.recall) == 0.0
                      ? 0.0
                      : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

// -- perturbation ---------------------------------------------------------------

namespace {

/// Deterministic helpers on top of the (standardized) mt19937_64 stream;
/// distribution classes are avoided because their mappings vary between
/// standard library implementations.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

size_t next_index(std::mt19937_64& rng, size_t n) { return rng() % n; }

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next_index(rng, i)]);
}

std::string abbreviate_name(const std::string& name) {
    std::string out;
    for (const auto& tok : tokenize(name)) out += tok.substr(0, 3);
    return out.empty() ? name : out;
}

std::string rename_one_token(const std::string& name, int salt) {
    auto tokens = tokenize(name);
    if (tokens.empty()) return name;
    // replace the salted pick with a synthetic token no wordlist contains
    size_t pick = static_cast<size_t>(salt) % tokens.size();
    tokens[pick] = "zx" + std::to_string(salt % 97);
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) out += (i ? "_" : "") + tokens[i];
    return out;
}

} // namespace

PerturbResult perturb(const Schema& s, const std::vector<PerturbOp>& ops, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Schema work = s;

    for (const auto& op : ops) {
        switch (op.kind) {
        case PerturbOp::RenameToken:
            for (auto& e : work.elements)
                if (next_unit(rng) < op.p)
                    e.name = rename_one_token(e.name, static_cast<int>(next_index(rng, 1000)));
            break;
        case PerturbOp::Abbreviate:
            for (auto& e : work.elements)
                if (next_unit(rng) < op.p) e.name = abbreviate_name(e.name);
            break;
        case PerturbOp::DropAnnotation:
            for (auto& e : work.elements)
                if (e.annotation && next_unit(rng) < op.p) e.annotation.reset();
            break;
        case PerturbOp::ShuffleSiblings: {
            // sibling groups, in document order: the roots plus each parent's
            // children; a hit permutes the group's slots in the element list
            std::vector<std::vector<int>> groups;
            groups.emplace_back();
            for (size_t i = 0; i < work.elements.size(); ++i)
                if (!work.elements[i].parent) groups.back().push_back(static_cast<int>(i));
            for (const auto& e : work.elements) {
                if (e.children.empty()) continue;
                groups.emplace_back();
                for (const auto& child : e.children)
                    groups.back().push_back(work.index_of(child));
            }
            std::vector<SchemaElement> reordered = work.elements;
            for (auto& group : groups) {
                if (group.size() < 2 || next_unit(rng) >= op.p) continue;
                std::vector<int> order = group;
                shuffle_vec(order, rng);
                for (size_t k = 0; k < group.size(); ++k)
                    reordered[group[k]] = work.elements[order[k]];
            }
            for (auto& e : reordered) e.children.clear();  // re-derived on validation
            work.elements = std::move(reordered);
            work = parse_schema(serialize_schema(work), "perturb");
            break;
        }
        case PerturbOp::DeleteLeaf: {
            std::set<std::string> doomed;
            for (const auto& e : work.elements)
                if (work.is_leaf(e.id) && next_unit(rng) < op.p) doomed.insert(e.id);
            if (doomed.empty()) break;
            std::vector<SchemaElement> kept;
            for (const auto& e : work.elements) {
                if (doomed.count(e.id)) continue;
                SchemaElement copy = e;
                copy.children.erase(std::remove_if(copy.children.begin(), copy.children.end(),
                                                   [&](const std::string& c) {
                                                       return doomed.count(c) > 0;
                                                   }),
                                    copy.children.end());
                kept.push_back(std::move(copy));
            }
            if (kept.empty())
                throw ValidationError("perturb: deleteLeaf would remove every element");
            work.elements = std::move(kept);
            break;
        }
        }
    }

    work = parse_schema(serialize_schema(work), "perturb");

    PerturbResult out;
    out.schema = std::move(work);
    for (const auto& e : out.schema.elements)
        if (s.find(e.id)) out.gold.correspondences.emplace_back(e.id, e.id);
    return out;
}

// -- scenarios --------------------------------------------------------------------

Scenario load_scenario(const std::string& dir) {
    Scenario sc;
    sc.name = fs::path(dir).filename().string();
    sc.source = load_schema((fs::path(dir) / "source.json").string());
    sc.target = load_schema((fs::path(dir) / "target.json").string());
    sc.gold = load_gold((fs::path(dir) / "gold.json").string());
    return sc;
}

std::vector<Scenario> load_scenarios(const std::string& dataset_dir) {
    if (!fs::is_directory(dataset_dir))
        throw ParseError("not a dataset directory: " + dataset_dir);
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(dataset_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "source.json"))
            dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    std::vector<Scenario> out;
    for (const auto& d : dirs) out.push_back(load_scenario(d));
    if (out.empty()) throw ParseError("no scenarios under: " + dataset_dir);
    return out;
}

void save_scenario(const Scenario& sc, const std::string& dir) {
    fs::create_directories(dir);
    save_schema(sc.source, (fs::path(dir) / "source.json").string());
    save_schema(sc.target, (fs::path(dir) / "target.json").string());
    save_gold(sc.gold, (fs::path(dir) / "gold.json").string());
}

// -- benchmarking -------------------------------------------------------------------

namespace {

/// The node a loaded process file reports results from: its last dangling
/// matrix-producing node.
std::string file_terminal(const MatchProcess& p) {
    std::string last;
    for (const auto& id : p.dangling_nodes())
        if (p.node(id).op != OpKind::Input) last = id;
    if (last.empty()) throw ValidationError("process has no matrix-producing terminal node");
    return last;
}

Mapping run_process_file(const MatchProcess& proc, const Scenario& sc,
                         const EngineConfig& config, const DatatypeTable& table) {
    ExecutionCache cache;
    ExecContext ctx;
    ctx.source = &sc.source;
    ctx.target = &sc.target;
    ctx.datatype_table = &table;
    ctx.jobs = config.jobs;
    execute(proc, cache, ctx);
    const SimilarityMatrix* m = cache.result(file_terminal(proc));
    if (!m) throw EngineError("process produced no terminal matrix");
    return to_mapping(*m, sc.source.id, sc.target.id);
}

} // namespace

Mapping run_process_strategy(const MatchProcess& p, const Schema& source, const Schema& target,
                             const EngineConfig& config) {
    DatatypeTable table;
    if (!config.datatype_table_path.empty())
        table = DatatypeTable::load(config.datatype_table_path);
    Scenario sc;
    sc.source = source;
    sc.target = target;
    return run_process_file(p, sc, config, table);
}

BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios,
                              const std::vector<Strategy>& strategies,
                              const EngineConfig& config) {
    if (scenarios.empty()) throw ValidationError("benchmark: no scenarios");
    if (strategies.empty()) throw ValidationError("benchmark: no strategies");

    DatatypeTable table;
    if (!config.datatype_table_path.empty())
        table = DatatypeTable::load(config.datatype_table_path);
    std::map<std::string, MatchProcess> loaded;
    for (const auto& st : strategies)
        if (!st.process_path.empty() && !loaded.count(st.process_path))
            loaded.emplace(st.process_path, load_process(st.process_path));

    BenchmarkReport report;
    for (const auto& sc : scenarios) {
        for (const auto& st : strategies) {
            auto t0 = std::chrono::steady_clock::now();
            Mapping found = st.process_path.empty()
                                ? run_adaptive(sc.source, sc.target, config).mapping
                                : run_process_file(loaded.at(st.process_path), sc, config, table);
            EvalReport ev = evaluate(found, sc.gold);
            ev.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
            report.rows.push_back(BenchmarkRow{sc.name, st.name, ev});
        }
    }
    for (const auto& st : strategies) {
        double sum = 0.0;
        int n = 0;
        for (const auto& row : report.rows)
            if (row.strategy == st.name) {
                sum += row.report.f_measure;
                ++n;
            }
        report.average_f.emplace_back(st.name, n ? sum / n : 0.0);
    }
    return report;
}

std::string benchmark_to_json(const BenchmarkReport& r) {
    ordered_json j;
    j["rows"] = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json jr;
        jr["scenario"] = row.scenario;
        jr["strategy"] = row.strategy;
        jr["precision"] = row.report.precision;
        jr["recall"] = row.report.recall;
        jr["fMeasure"] = row.report.f_measure;
        jr["truePositives"] = row.report.true_positives;
        jr["found"] = row.report.found;
        jr["gold"] = row.report.gold;
        j["rows"].push_back(std::move(jr));
    }
    j["averageF"] = ordered_json::array();
    for (const auto& [name, f] : r.average_f) {
        ordered_json ja;
        ja["strategy"] = name;
        ja["f"] = f;
        j["averageF"].push_back(std::move(ja));
    }
    return j.dump(2) + "\n";
}

std::string benchmark_to_text(const BenchmarkReport& r) {
    size_t scenario_w = 8, strategy_w = 8;
    for (const auto& row : r.rows) {
        scenario_w = std::max(scenario_w, row.scenario.size());
        strategy_w = std::max(strategy_w, row.strategy.size());
    }
    std::ostringstream out;
    auto pad = [](const std::string& s, size_t w) {
        return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
    };
    out << pad("scenario", scenario_w) << "  " << pad("strategy", strategy_w)
        << "  precision  recall  f-measure\n";
    for (const auto& row : r.rows)
        out << pad(row.scenario, scenario_w) << "  " << pad(row.strategy, strategy_w) << "  "
            << pad(fmt3(row.report.precision), 9) << "  " << pad(fmt3(row.report.recall), 6)
            << "  " << fmt3(row.report.f_measure) << "\n";
    out << "\n";
    for (const auto& [name, f] : r.average_f)
        out << pad("average[" + name + "]", scenario_w + strategy_w + 2) << "  "
            << pad("", 9) << "  " << pad("", 6) << "  " << fmt3(f) << "\n";
    return out.str();
}

std::string eval_report_to_json(const EvalReport& r) {
    ordered_json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["fMeasure"] = r.f_measure;
    j["truePositives"] = r.true_positives;
    j["found"] = r.found;
    j["gold"] = r.gold;
    return j.dump(2) + "\n";
}

std::string eval_report_to_text(const std::string& scenario, const std::string& strategy,
                                const EvalReport& r) {
    std::ostringstream out;
    out << "scenario " << scenario << ", strategy " << strategy << ": precision "
        << fmt3(r.precision) << ", recall " << fmt3(r.recall) << ", f-measure "
        << fmt3(r.f_measure) << " (" << r.true_positives << " of " << r.found << " found, "
        << r.gold << " gold)\n";
    return out.str();
}

std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& grid,
                            const MatchProcess& process, const Scenario& scenario,
                            const EngineConfig& config) {
    MatchProcess proc = process;
    std::string terminal = file_terminal(proc);
    const OperatorNode& tnode = proc.node(terminal);
    if (tnode.op != OpKind::Selection)
        throw ValidationError("sweep: terminal node is not a selection");
    SelectionParams params = tnode.sel;
    if (param == SweepParam::Threshold && params.strategy != SelectStrategy::Threshold)
        throw ValidationError("sweep: terminal selection is not a threshold selection");
    if (param == SweepParam::Delta && params.strategy != SelectStrategy::Delta)
        throw ValidationError("sweep: terminal selection is not a delta selection");

    DatatypeTable table;
    if (!config.datatype_table_path.empty())
        table = DatatypeTable::load(config.datatype_table_path);
    ExecutionCache cache;
    ExecContext ctx;
    ctx.source = &scenario.source;
    ctx.target = &scenario.target;
    ctx.datatype_table = &table;
    ctx.jobs = config.jobs;

    std::vector<SweepRow> rows;
    for (double value : grid) {
        if (param == SweepParam::Threshold)
            params.threshold = value;
        else
            params.delta = value;
        proc.set_selection(terminal, params);
        execute(proc, cache, ctx);  // re-evaluates the terminal node only
        const SimilarityMatrix* m = cache.result(terminal);
        if (!m) throw EngineError("sweep: no terminal matrix");
        SweepRow row;
        row.value = value;
        row.monogamy = monogamy(*m);
        row.f_measure = evaluate(to_mapping(*m, scenario.source.id, scenario.target.id),
                                 scenario.gold)
                            .f_measure;
        rows.push_back(row);
    }
    return rows;
}

} // namespace adamatch
