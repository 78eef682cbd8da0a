// SPDX-License-Identifier: Apache-2.0
#include "adamatch/matchers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

bool is_structural(MatcherKind k) {
    switch (k) {
    case MatcherKind::Children:
    case MatcherKind::Leaves:
    case MatcherKind::Parent:
    case MatcherKind::Sibling:
    case MatcherKind::Path:
        return true;
    default:
        return false;
    }
}

std::string matcher_kind_name(MatcherKind k) {
    switch (k) {
    case MatcherKind::Name: return "name";
    case MatcherKind::WeightedName: return "weightedName";
    case MatcherKind::TokenName: return "tokenName";
    case MatcherKind::Datatype: return "datatype";
    case MatcherKind::Annotation: return "annotation";
    case MatcherKind::Instance: return "instance";
    case MatcherKind::Children: return "children";
    case MatcherKind::Leaves: return "leaves";
    case MatcherKind::Parent: return "parent";
    case MatcherKind::Sibling: return "sibling";
    case MatcherKind::Path: return "path";
    }
    throw EngineError("unknown matcher kind");
}

MatcherKind matcher_kind_from_name(const std::string& name) {
    static const std::vector<MatcherKind> all = {
        MatcherKind::Name,     MatcherKind::WeightedName, MatcherKind::TokenName,
        MatcherKind::Datatype, MatcherKind::Annotation,   MatcherKind::Instance,
        MatcherKind::Children, MatcherKind::Leaves,       MatcherKind::Parent,
        MatcherKind::Sibling,  MatcherKind::Path};
    for (MatcherKind k : all)
        if (matcher_kind_name(k) == name) return k;
    throw ParseError("unknown matcher kind '" + name + "'");
}

int matcher_cost_rank(MatcherKind k) {
    switch (k) {
    case MatcherKind::Name: return 1;
    case MatcherKind::TokenName: return 2;
    case MatcherKind::Datatype: return 3;
    case MatcherKind::Annotation: return 4;
    case MatcherKind::Instance: return 5;
    case MatcherKind::WeightedName: return 6;
    default: return 10;  // structural matchers; never candidates for "cheapest"
    }
}

namespace {

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Sorted unique 3-grams of a lowercased string.
std::vector<std::string> trigrams(const std::string& lowered) {
    std::vector<std::string> out;
    if (lowered.size() >= 3)
        for (size_t i = 0; i + 3 <= lowered.size(); ++i) out.push_back(lowered.substr(i, 3));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

size_t sorted_intersection_size(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
    size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++n; ++i; ++j; }
    }
    return n;
}

double dice(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    return 2.0 * static_cast<double>(sorted_intersection_size(a, b)) /
           static_cast<double>(a.size() + b.size());
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double trigram_sim_lowered(const std::string& la, const std::string& lb) {
    if (la.empty() || lb.empty()) return 0.0;
    if (la == lb) return 1.0;
    return dice(trigrams(la), trigrams(lb));
}

/// Per-element derived data, computed once per matcher evaluation.
struct ElementView {
    std::string lname;                     // lowercased name
    std::vector<std::string> tris;         // trigrams of lname
    std::vector<std::string> tokens;       // name tokens, document order, deduped
    std::set<std::string> token_set;
    std::set<std::string> annotation_tokens;
    std::set<std::string> instance_set;    // lowercased raw values
    std::set<std::string> path_tokens;     // tokens of the name path root..e
};

struct SchemaView {
    const Schema* schema = nullptr;
    std::vector<ElementView> elems;

    explicit SchemaView(const Schema& s) : schema(&s) {
        elems.reserve(s.elements.size());
        for (const auto& e : s.elements) {
            ElementView v;
            v.lname = to_lower(e.name);
            v.tris = trigrams(v.lname);
            for (const auto& tok : tokenize(e.name))
                if (v.token_set.insert(tok).second) v.tokens.push_back(tok);
            if (e.annotation) v.annotation_tokens = token_set(*e.annotation);
            for (const auto& inst : e.instances) v.instance_set.insert(to_lower(inst));
            for (const auto& pid : path_of(s, e.id))
                for (const auto& tok : tokenize(s.at(pid).name)) v.path_tokens.insert(tok);
            elems.push_back(std::move(v));
        }
    }
};

void run_rows(int rows, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1 || rows < 2) {
        for (int r = 0; r < rows; ++r) body(r);
        return;
    }
    int workers = std::min(jobs, rows);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int r = w; r < rows; r += workers) body(r);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace

double trigram_similarity(const std::string& a, const std::string& b) {
    return trigram_sim_lowered(to_lower(a), to_lower(b));
}

double DatatypeTable::sim(const std::optional<std::string>& a,
                          const std::optional<std::string>& b) const {
    if (!a || !b) return 0.0;
    std::string na = to_lower(*a), nb = to_lower(*b);
    // trim
    auto trim = [](std::string& s) {
        size_t begin = s.find_first_not_of(" \t");
        size_t end = s.find_last_not_of(" \t");
        s = begin == std::string::npos ? "" : s.substr(begin, end - begin + 1);
    };
    trim(na);
    trim(nb);
    if (na.empty() || nb.empty()) return 0.0;
    auto it = entries_.find({na, nb});
    if (it == entries_.end()) it = entries_.find({nb, na});
    if (it != entries_.end()) return it->second;
    if (na == nb) return 1.0;
    static const std::set<std::string> numeric = {"int",   "integer", "long",  "short",
                                                  "byte",  "decimal", "float", "double",
                                                  "number"};
    if (numeric.count(na) && numeric.count(nb)) return 0.8;
    if (na == "string" || nb == "string") return 0.4;
    return 0.0;
}

void DatatypeTable::add(const std::string& a, const std::string& b, double sim) {
    if (sim < 0.0 || sim > 1.0)
        throw ValidationError("datatype table: similarity out of [0,1] for (" + a + ", " + b + ")");
    entries_[{to_lower(a), to_lower(b)}] = sim;
}

DatatypeTable DatatypeTable::parse(const std::string& json_text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError(origin + ": expected a JSON list of {a,b,sim}");
    DatatypeTable t;
    try {
        for (const auto& je : j)
            t.add(je.at("a").get<std::string>(), je.at("b").get<std::string>(),
                  je.at("sim").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return t;
}

DatatypeTable DatatypeTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

namespace {

/// Dice-style combination of best constituent scores across two id sets:
/// (sum of row-side maxima + sum of column-side maxima) / (|A| + |B|).
double constituent_combine(const SimilarityMatrix& c, const Schema& s, const Schema& t,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& x : a) {
        int r = s.index_of(x);
        double best = 0.0;
        for (const auto& y : b) best = std::max(best, c.get(r, t.index_of(y)));
        sum += best;
    }
    for (const auto& y : b) {
        int col = t.index_of(y);
        double best = 0.0;
        for (const auto& x : a) best = std::max(best, c.get(s.index_of(x), col));
        sum += best;
    }
    return sum / static_cast<double>(a.size() + b.size());
}

struct WeightedNameContext {
    // document frequency over both schemas: number of elements whose name
    // contains the token
    std::map<std::string, int> df;
    double total = 0.0;  // |S| + |T|

    WeightedNameContext(const SchemaView& sv, const SchemaView& tv) {
        for (const auto* view : {&sv, &tv})
            for (const auto& e : view->elems)
                for (const auto& tok : e.token_set) ++df[tok];
        total = static_cast<double>(sv.elems.size() + tv.elems.size());
    }

    double weight(const std::string& token) const {
        auto it = df.find(token);
        int f = it == df.end() ? 1 : it->second;
        return std::log(1.0 + total / static_cast<double>(f));
    }
};

double weighted_name_cell(const ElementView& a, const ElementView& b,
                          const WeightedNameContext& ctx) {
    if (a.tokens.empty() || b.tokens.empty()) return 0.0;
    double score = 0.0, norm = 0.0;
    for (const auto& ta : a.tokens) {
        double best = 0.0;
        for (const auto& tb : b.tokens) best = std::max(best, trigram_sim_lowered(ta, tb));
        double w = ctx.weight(ta);
        score += w * best;
        norm += w;
    }
    for (const auto& tb : b.tokens) {
        double best = 0.0;
        for (const auto& ta : a.tokens) best = std::max(best, trigram_sim_lowered(tb, ta));
        double w = ctx.weight(tb);
        score += w * best;
        norm += w;
    }
    return norm <= 0.0 ? 0.0 : score / norm;
}

} // namespace

SimilarityMatrix compute_matcher(MatcherKind kind, const Schema& source, const Schema& target,
                                 const MatcherOptions& opt) {
    if (is_structural(kind) && !opt.constituent)
        throw ValidationError("matcher '" + matcher_kind_name(kind) +
                              "' requires a constituent matrix");
    std::vector<std::string> row_ids, col_ids;
    for (const auto& e : source.elements) row_ids.push_back(e.id);
    for (const auto& e : target.elements) col_ids.push_back(e.id);
    if (opt.constituent &&
        (opt.constituent->row_ids() != row_ids || opt.constituent->col_ids() != col_ids))
        throw ValidationError("constituent matrix does not match the schema pair");
    if (opt.mask && (opt.mask->row_ids() != row_ids || opt.mask->col_ids() != col_ids))
        throw ValidationError("mask matrix does not match the schema pair");

    SchemaView sv(source), tv(target);
    const int R = static_cast<int>(row_ids.size()), C = static_cast<int>(col_ids.size());
    SimilarityMatrix out(row_ids, col_ids);

    std::vector<char> row_alive(R, 1), col_alive(C, 1);
    if (opt.mask) {
        for (int r = 0; r < R; ++r) {
            bool alive = false;
            for (int c = 0; c < C && !alive; ++c) alive = opt.mask->get(r, c) > 0.0;
            row_alive[r] = alive ? 1 : 0;
        }
        for (int c = 0; c < C; ++c) {
            bool alive = false;
            for (int r = 0; r < R && !alive; ++r) alive = opt.mask->get(r, c) > 0.0;
            col_alive[c] = alive ? 1 : 0;
        }
    }

    std::unique_ptr<WeightedNameContext> wctx;
    if (kind == MatcherKind::WeightedName) wctx = std::make_unique<WeightedNameContext>(sv, tv);
    static const DatatypeTable default_table;
    const DatatypeTable& table = opt.datatype_table ? *opt.datatype_table : default_table;

    auto cell = [&](int r, int c) -> double {
        const SchemaElement& ea = source.elements[r];
        const SchemaElement& eb = target.elements[c];
        const ElementView& va = sv.elems[r];
        const ElementView& vb = tv.elems[c];
        switch (kind) {
        case MatcherKind::Name:
            return trigram_sim_lowered(va.lname, vb.lname);
        case MatcherKind::WeightedName:
            return weighted_name_cell(va, vb, *wctx);
        case MatcherKind::TokenName:
            return jaccard(va.token_set, vb.token_set);
        case MatcherKind::Datatype:
            return table.sim(ea.datatype, eb.datatype);
        case MatcherKind::Annotation:
            return jaccard(va.annotation_tokens, vb.annotation_tokens);
        case MatcherKind::Instance:
            return jaccard(va.instance_set, vb.instance_set);
        case MatcherKind::Children:
            return constituent_combine(*opt.constituent, source, target,
                                       tree_neighbors(source, ea.id, NeighborKind::Children),
                                       tree_neighbors(target, eb.id, NeighborKind::Children));
        case MatcherKind::Leaves:
            return constituent_combine(*opt.constituent, source, target,
                                       tree_neighbors(source, ea.id, NeighborKind::Leaves),
                                       tree_neighbors(target, eb.id, NeighborKind::Leaves));
        case MatcherKind::Sibling:
            return constituent_combine(*opt.constituent, source, target,
                                       tree_neighbors(source, ea.id, NeighborKind::Siblings),
                                       tree_neighbors(target, eb.id, NeighborKind::Siblings));
        case MatcherKind::Parent: {
            if (!ea.parent || !eb.parent) return 0.0;
            return opt.constituent->get(source.index_of(*ea.parent), target.index_of(*eb.parent));
        }
        case MatcherKind::Path: {
            double direct = opt.constituent->get(r, c);
            double overlap = jaccard(va.path_tokens, vb.path_tokens);
            return 0.5 * direct + 0.5 * overlap;
        }
        }
        return 0.0;
    };

    run_rows(R, opt.jobs, [&](int r) {
        if (!row_alive[r]) return;
        for (int c = 0; c < C; ++c) {
            if (!col_alive[c]) continue;
            out.set(r, c, cell(r, c));
        }
    });
    return out;
}

} // namespace adamatch
