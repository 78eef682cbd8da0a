// Acceptance gate: one check per published acceptance criterion. Each prints
// a single PASS/FAIL line with the measured values and pinned tolerances;
// the binary exits nonzero if any criterion fails.
#include <adamatch/engine.hpp>
#include <adamatch/eval.hpp>
#include <adamatch/features.hpp>
#include <adamatch/matchers.hpp>
#include <adamatch/matrix.hpp>
#include <adamatch/process.hpp>
#include <adamatch/rules.hpp>
#include <adamatch/schema.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace adamatch;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---- shared fixtures -------------------------------------------------------

// Twenty-element purchase-order tree used by the perturbation scenarios.
Schema base_schema() {
    const std::vector<std::pair<std::string, std::string>> rows = {
        {"PurchaseOrder", ""},   {"Header", "n1"},        {"OrderDate", "n2"},
        {"ReferenceCode", "n2"}, {"Currency", "n2"},      {"ShipTo", "n1"},
        {"RecipientName", "n6"}, {"StreetAddress", "n6"}, {"CityName", "n6"},
        {"PostalCode", "n6"},    {"Items", "n1"},         {"Quantity", "n11"},
        {"TotalAmount", "n11"},  {"BillTo", "n1"},        {"AccountNumber", "n14"},
        {"ContactEmail", "n14"}, {"PhoneNumber", "n14"},  {"TaxRate", "n11"},
        {"DiscountRate", "n11"}, {"DeliveryNote", "n1"},
    };
    Schema s;
    s.id = "base";
    for (size_t i = 0; i < rows.size(); ++i) {
        SchemaElement e;
        e.id = "n" + std::to_string(i + 1);
        e.name = rows[i].first;
        if (!rows[i].second.empty()) e.parent = rows[i].second;
        s.elements.push_back(std::move(e));
    }
    return parse_schema(serialize_schema(s), "base");
}

// Twenty-six elements in five name families; RenameToken perturbations plus
// pluralized duplicate leaves create controlled 1:2 matches.
Schema family_schema() {
    struct Row { const char* name; const char* parent; const char* type; };
    const std::vector<Row> rows = {
        {"PurchaseOrder", "", ""},    {"OrderHeader", "n1", ""},
        {"OrderDate", "n2", "date"},  {"OrderCode", "n2", ""},
        {"OrderStatus", "n2", ""},    {"OrderTotal", "n2", "decimal"},
        {"ShipTo", "n1", ""},         {"ShipDate", "n7", ""},
        {"ShipCode", "n7", ""},       {"ShipName", "n7", ""},
        {"ShipAddress", "n7", ""},    {"BillTo", "n1", ""},
        {"BillDate", "n12", ""},      {"BillCode", "n12", ""},
        {"BillName", "n12", ""},      {"BillAddress", "n12", ""},
        {"CustomerInfo", "n1", ""},   {"CustomerName", "n17", ""},
        {"CustomerCode", "n17", ""},  {"CustomerEmail", "n17", ""},
        {"CustomerPhone", "n17", ""}, {"ItemList", "n1", ""},
        {"ItemCode", "n22", ""},      {"ItemName", "n22", ""},
        {"ItemPrice", "n22", ""},     {"ItemCount", "n22", ""},
    };
    Schema s;
    s.id = "family";
    for (size_t i = 0; i < rows.size(); ++i) {
        SchemaElement e;
        e.id = "n" + std::to_string(i + 1);
        e.name = rows[i].name;
        if (rows[i].parent[0]) e.parent = rows[i].parent;
        if (rows[i].type[0]) e.datatype = rows[i].type;
        s.elements.push_back(std::move(e));
    }
    return parse_schema(serialize_schema(s), "family");
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size(), 0.0);
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(ranks(a), ranks(b));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- criteria --------------------------------------------------------------

// Formula exactness: selectivity of [[0.9,0.1],[0.2,0.8]] = 0.35 and
// tokenSetOverlap of {purchase,order}/{order,item} = 1/3, within 1e-9.
Outcome criterion_formulas() {
    SimilarityMatrix m({"r0", "r1"}, {"c0", "c1"});
    m.set(0, 0, 0.9);
    m.set(0, 1, 0.1);
    m.set(1, 0, 0.2);
    m.set(1, 1, 0.8);
    double sel_err = std::fabs(selectivity(m) - 0.35);

    Schema a;
    a.id = "A";
    a.elements = {{"a1", "PurchaseOrder", std::nullopt, std::nullopt, {}, std::nullopt, {}}};
    Schema b;
    b.id = "B";
    b.elements = {{"b1", "OrderItem", std::nullopt, std::nullopt, {}, std::nullopt, {}}};
    double tok_err = std::fabs(token_set_overlap(a, b) - 1.0 / 3.0);

    bool ok = sel_err <= 1e-9 && tok_err <= 1e-9;
    return {ok, fmt("selectivity err=%.2e, tokenSetOverlap err=%.2e (tol 1e-9)", sel_err,
                    tok_err)};
}

// Monogamy invariants: unit permutation = exactly 1.0; any added positive
// cell strictly decreases it; 1000 randomized 6x6 cases, zero violations.
Outcome criterion_monogamy() {
    std::mt19937_64 rng(20240817);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };
    const int trials = 1000;
    int perm_exact = 0, strict_drop = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<int> p(6);
        std::iota(p.begin(), p.end(), 0);
        for (size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
        SimilarityMatrix m({"r0", "r1", "r2", "r3", "r4", "r5"},
                           {"c0", "c1", "c2", "c3", "c4", "c5"});
        for (int r = 0; r < 6; ++r) m.set(r, p[r], 1.0);
        double base = monogamy(m);
        if (base == 1.0) ++perm_exact;
        int r = static_cast<int>(rng() % 6), c;
        do { c = static_cast<int>(rng() % 6); } while (c == p[r]);
        m.set(r, c, 0.05 + 0.95 * unit());
        if (monogamy(m) < base) ++strict_drop;
    }
    bool ok = perm_exact == trials && strict_drop == trials;
    return {ok, fmt("permutation exactly 1.0 in %d/%d, added cell strictly decreased in %d/%d",
                    perm_exact, trials, strict_drop, trials)};
}

// Selection algebra: select_delta(.,n,0,.) == select_maxn(.,n,.) and all
// selections idempotent, over 500 random matrices.
Outcome criterion_selection_algebra() {
    std::mt19937_64 rng(98765);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };
    auto equal = [](const SimilarityMatrix& x, const SimilarityMatrix& y) {
        if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j)
                if (x.get(i, j) != y.get(i, j)) return false;
        return true;
    };
    const SelectDirection dirs[] = {SelectDirection::Rows, SelectDirection::Columns,
                                    SelectDirection::Both};
    int violations = 0;
    for (int t = 0; t < 500; ++t) {
        int rows = 1 + static_cast<int>(rng() % 8);
        int cols = 1 + static_cast<int>(rng() % 8);
        std::vector<std::string> rid, cid;
        for (int i = 0; i < rows; ++i) rid.push_back("r" + std::to_string(i));
        for (int j = 0; j < cols; ++j) cid.push_back("c" + std::to_string(j));
        SimilarityMatrix m(rid, cid);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if (unit() < 0.45) m.set(i, j, unit());

        for (int n : {1, 2}) {
            for (auto dir : dirs) {
                if (!equal(select_delta(m, n, 0.0, dir), select_maxn(m, n, dir))) ++violations;
                auto mx = select_maxn(m, n, dir);
                if (!equal(select_maxn(mx, n, dir), mx)) ++violations;
                auto dl = select_delta(m, n, 0.05, dir);
                if (!equal(select_delta(dl, n, 0.05, dir), dl)) ++violations;
            }
        }
        auto th = select_threshold(m, 0.3);
        if (!equal(select_threshold(th, 0.3), th)) ++violations;
    }
    return {violations == 0, fmt("500 random matrices, %d violations (need 0)", violations)};
}

// Monogamy/F correlation: 20 seeded perturbation scenarios, threshold sweep
// {0.0,...,0.95}; Spearman >= 0.7 on >= 16/20; under 60 s.
Outcome criterion_correlation() {
    auto t0 = std::chrono::steady_clock::now();
    Schema base = base_schema();
    std::vector<PerturbOp> ops = {{PerturbOp::RenameToken, 0.3},
                                  {PerturbOp::DropAnnotation, 0.5},
                                  {PerturbOp::ShuffleSiblings, 0.5},
                                  {PerturbOp::DeleteLeaf, 0.15}};
    int good = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto pr = perturb(base, ops, seed);
        auto m = compute_matcher(MatcherKind::Name, base, pr.schema);
        std::vector<double> monos, fs;
        for (int i = 0; i < 20; ++i) {
            auto sel = select_threshold(m, i * 0.05);
            monos.push_back(monogamy(sel));
            fs.push_back(evaluate(to_mapping(sel, base.id, pr.schema.id), pr.gold).f_measure);
        }
        if (spearman(monos, fs) >= 0.7) ++good;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = good >= 16 && secs < 60.0;
    return {ok, fmt("Spearman>=0.7 on %d/20 scenarios (need >=16) in %.2fs (need <60)", good,
                    secs)};
}

// Adaptive delta selection: on 10 seeded 1:2-match scenarios the
// monogamy-chosen delta reaches F within 0.05 of the best grid delta >= 8/10.
Outcome criterion_delta_choice() {
    Schema family = family_schema();
    EngineConfig cfg;
    auto grid = cfg.delta_grid();
    int within = 0;
    double worst_gap = 0.0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        auto pr = perturb(family, {{PerturbOp::RenameToken, 0.3}}, seed);
        Schema target = pr.schema;
        GoldMapping gold = pr.gold;

        // duplicate three (deterministically picked) unrenamed leaves with a
        // pluralized name: each source leaf then matches two target elements
        std::vector<std::string> leaves;
        for (const auto& e : target.elements)
            if (target.is_leaf(e.id)) leaves.push_back(e.id);
        std::vector<std::string> pool;
        for (const auto& id : leaves)
            if (target.find(id)->name == family.find(id)->name) pool.push_back(id);
        if (pool.size() < 3) pool = leaves;
        std::set<std::string> picked;
        for (uint64_t i = 0; i < 3; ++i)
            picked.insert(pool[(seed * 5 + i * 7) % pool.size()]);
        for (const auto& id : picked) {
            const SchemaElement* e = target.find(id);
            SchemaElement dup;
            dup.id = id + "b";
            dup.name = e->name + "s";
            dup.parent = e->parent;
            target.elements.push_back(std::move(dup));
            gold.correspondences.emplace_back(id, id + "b");
        }
        for (auto& e : target.elements) e.children.clear();
        target = parse_schema(serialize_schema(target), "c5");

        auto m = compute_matcher(MatcherKind::Name, family, target);
        auto f_of = [&](double d) {
            auto sel = select_threshold(select_delta(m, 1, d, SelectDirection::Both), 0.1);
            return evaluate(to_mapping(sel, family.id, target.id), gold).f_measure;
        };
        double best = 0.0;
        for (double d : grid) best = std::max(best, f_of(d));
        double fc = f_of(choose_delta_by_monogamy(m, grid));
        worst_gap = std::max(worst_gap, best - fc);
        if (fc >= best - 0.05) ++within;
    }
    bool ok = within >= 8;
    return {ok, fmt("chosen delta within 0.05 of best on %d/10 (need >=8), worst gap %.3f",
                    within, worst_gap)};
}

// Engine state machine: a start rule whose output monogamy is below 0.1 is
// applied and then reverted; the final process hash excludes its nodes.
Outcome criterion_revert() {
    auto instance_only = [](const std::string& id, const std::string& salt) {
        Schema s;
        s.id = id;
        for (int i = 0; i < 4; ++i) {
            SchemaElement e;
            e.id = id + "_e" + std::to_string(i);
            e.name = "";
            e.instances = {"common"};
            for (char c = 'a'; c <= 'e'; ++c)
                e.instances.push_back(salt + std::to_string(i) + c);
            s.elements.push_back(std::move(e));
        }
        return s;
    };
    Schema src = instance_only("S", "s");
    Schema tgt = instance_only("T", "t");

    auto res = run_adaptive(src, tgt);
    bool shape = !res.trace.empty() && res.trace[0].rule == "AddInstanceMatcher" &&
                 res.trace[0].decision == "reverted" && res.trace[0].check.has_value() &&
                 *res.trace[0].check < 0.1 && !res.trace[0].nodes.empty();
    bool excluded = true;
    if (shape)
        for (const auto& id : res.trace[0].nodes)
            if (res.process.has(id)) excluded = false;

    EngineConfig off;
    off.rules["AddInstanceMatcher"].enabled = false;
    auto res_off = run_adaptive(src, tgt, off);
    bool same_hash = res.process.structural_hash() == res_off.process.structural_hash();

    bool ok = shape && excluded && same_hash;
    double check = (!res.trace.empty() && res.trace[0].check) ? *res.trace[0].check : -1.0;
    return {ok, fmt("check=%.4f (<0.1), decision=%s, nodes excluded=%s, hash matches "
                    "rule-disabled run=%s",
                    check, res.trace.empty() ? "?" : res.trace[0].decision.c_str(),
                    excluded ? "yes" : "no", same_hash ? "yes" : "no")};
}

// Incremental execution: the evaluation counter moves only by new/changed
// nodes; re-running an unchanged process evaluates nothing.
Outcome criterion_incremental() {
    Schema src = base_schema();
    Schema tgt = base_schema();
    tgt.id = "tgt";

    MatchProcess p;
    OperatorNode input;
    input.id = "input";
    input.op = OpKind::Input;
    p.add_node(input);
    OperatorNode m1;
    m1.id = "m1";
    m1.op = OpKind::Matcher;
    m1.matcher = MatcherKind::Name;
    m1.inputs = {"input"};
    p.add_node(m1);
    OperatorNode m2;
    m2.id = "m2";
    m2.op = OpKind::Matcher;
    m2.matcher = MatcherKind::TokenName;
    m2.inputs = {"input"};
    p.add_node(m2);
    OperatorNode agg;
    agg.id = "agg";
    agg.op = OpKind::Aggregation;
    agg.agg.strategy = AggStrategy::Average;
    agg.inputs = {"m1", "m2"};
    p.add_node(agg);

    DatatypeTable table;
    ExecutionCache cache;
    ExecContext ctx;
    ctx.source = &src;
    ctx.target = &tgt;
    ctx.datatype_table = &table;

    std::vector<long long> deltas;
    auto step = [&] {
        long long before = cache.eval_count;
        execute(p, cache, ctx);
        deltas.push_back(cache.eval_count - before);
    };
    step();  // fresh: all 4 nodes
    step();  // unchanged: nothing

    OperatorNode sel;
    sel.id = "sel";
    sel.op = OpKind::Selection;
    sel.sel.strategy = SelectStrategy::Threshold;
    sel.sel.threshold = 0.1;
    p.insert_after("m1", sel);
    step();  // new selection + changed aggregation

    SelectionParams tighter = sel.sel;
    tighter.threshold = 0.2;
    p.set_selection("sel", tighter);
    step();  // reparameterized selection + aggregation
    step();  // unchanged again

    std::vector<long long> expected = {4, 0, 2, 2, 0};
    bool ok = deltas == expected;
    std::string got;
    for (auto d : deltas) got += (got.empty() ? "" : ",") + std::to_string(d);
    return {ok, fmt("evaluation deltas %s (expected 4,0,2,2,0)", got.c_str())};
}

// DEFAULT fidelity: the shipped process file holds exactly the published
// matcher set with delta 0.021 and threshold 0.5, loads, and scores F=1.0 on
// the identity scenario.
Outcome criterion_default_process() {
    const char* data_dir = std::getenv("ADAMATCH_DATA_DIR");
    if (!data_dir) return {false, "ADAMATCH_DATA_DIR not set"};
    MatchProcess p = load_process(std::string(data_dir) + "/default.process.json");

    std::multiset<std::string> kinds;
    for (const auto& n : p.nodes())
        if (n.op == OpKind::Matcher) kinds.insert(matcher_kind_name(n.matcher));
    std::multiset<std::string> want = {"weightedName", "path", "children",
                                       "leaves", "sibling", "datatype"};
    bool kinds_ok = kinds == want;

    double delta = -1.0, threshold = -1.0;
    for (const auto& n : p.nodes()) {
        if (n.op != OpKind::Selection) continue;
        if (n.sel.strategy == SelectStrategy::Delta) delta = n.sel.delta;
        if (n.sel.strategy == SelectStrategy::Threshold) threshold = n.sel.threshold;
    }
    bool params_ok = std::fabs(delta - 0.021) <= 1e-12 && std::fabs(threshold - 0.5) <= 1e-12;

    Scenario sc = load_scenario(std::string(data_dir) + "/scenarios/purchase-order-identity");
    double f = evaluate(run_process_strategy(p, sc.source, sc.target), sc.gold).f_measure;

    bool ok = kinds_ok && params_ok && f == 1.0;
    std::string kind_list;
    for (const auto& k : kinds) kind_list += (kind_list.empty() ? "" : ",") + k;
    return {ok, fmt("matchers {%s}%s, delta=%.3f, threshold=%.1f, identity F=%.3f",
                    kind_list.c_str(), kinds_ok ? "" : " (unexpected)", delta, threshold, f)};
}

// End-to-end determinism: cmd_match twice is byte-identical; a 20-scenario
// synthetic benchmark finishes inside two minutes.
Outcome criterion_determinism_and_benchmark() {
    const char* cli = std::getenv("ADAMATCH_CLI");
    const char* data_dir = std::getenv("ADAMATCH_DATA_DIR");
    if (!cli || !data_dir) return {false, "ADAMATCH_CLI / ADAMATCH_DATA_DIR not set"};

    std::string sdir = std::string(data_dir) + "/scenarios/purchase-order-identity";
    std::string out1 = "/tmp/adamatch_accept_m1.json";
    std::string out2 = "/tmp/adamatch_accept_m2.json";
    auto run = [&](const std::string& out) {
        std::string cmd = std::string(cli) + " match " + sdir + "/source.json " + sdir +
                          "/target.json --out " + out + " >/dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
    };
    bool ran = run(out1) && run(out2);
    std::string m1 = slurp(out1), m2 = slurp(out2);
    bool identical = ran && !m1.empty() && m1 == m2;

    auto t0 = std::chrono::steady_clock::now();
    Schema base = base_schema();
    std::vector<PerturbOp> ops = {{PerturbOp::RenameToken, 0.3},
                                  {PerturbOp::DropAnnotation, 0.5},
                                  {PerturbOp::ShuffleSiblings, 0.5},
                                  {PerturbOp::DeleteLeaf, 0.15}};
    std::vector<Scenario> scenarios;
    size_t max_elements = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto pr = perturb(base, ops, seed);
        Scenario sc;
        sc.name = "perturb-" + std::to_string(seed);
        sc.source = base;
        sc.target = pr.schema;
        sc.gold = pr.gold;
        max_elements = std::max(max_elements, sc.source.elements.size());
        max_elements = std::max(max_elements, sc.target.elements.size());
        scenarios.push_back(std::move(sc));
    }
    auto report = run_benchmark(scenarios, {{"adaptive", ""}});
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool bench_ok = report.rows.size() == 20 && max_elements <= 200 && secs < 120.0;

    bool ok = identical && bench_ok;
    return {ok, fmt("cmd_match byte-identical=%s; benchmark 20 scenarios (max %zu elements) "
                    "in %.2fs (need <120)",
                    identical ? "yes" : "no", max_elements, secs)};
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"formula exactness (selectivity, tokenSetOverlap)", criterion_formulas},
        {"monogamy invariant suite", criterion_monogamy},
        {"selection algebra (delta/maxn equivalence, idempotence)", criterion_selection_algebra},
        {"monogamy/F correlation across threshold sweeps", criterion_correlation},
        {"adaptive delta selection on 1:2-match scenarios", criterion_delta_choice},
        {"engine state machine apply-then-revert", criterion_revert},
        {"incremental execution evaluation counting", criterion_incremental},
        {"DEFAULT process file fidelity", criterion_default_process},
        {"end-to-end determinism and benchmark runtime", criterion_determinism_and_benchmark},
    };
    int failures = 0;
    int idx = 0;
    for (const auto& entry : entries) {
        ++idx;
        Outcome out;
        try {
            out = entry.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d: %s — %s\n", out.ok ? "PASS" : "FAIL", idx, entry.name,
                    out.detail.c_str());
        if (!out.ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
