// SPDX-License-Identifier: Apache-2.0
#include "adamatch/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

#include "adamatch/errors.hpp"
#include "adamatch/matchers.hpp"

namespace adamatch {

double existence_feature(const Schema& s, ElementAttr attr) {
    if (s.elements.empty()) return 0.0;
    int have = 0;
    for (const auto& e : s.elements) {
        switch (attr) {
        case ElementAttr::Name: have += !e.name.empty(); break;
        case ElementAttr::Datatype: have += e.datatype && !e.datatype->empty(); break;
        case ElementAttr::Annotation: have += e.annotation && !e.annotation->empty(); break;
        case ElementAttr::Instances: have += !e.instances.empty(); break;
        }
    }
    return static_cast<double>(have) / static_cast<double>(s.elements.size());
}

namespace {

TokenSet schema_tokens(const Schema& s) {
    TokenSet out;
    for (const auto& e : s.elements)
        for (const auto& t : tokenize(e.name)) out.insert(t);
    return out;
}

TokenSet schema_annotation_tokens(const Schema& s) {
    TokenSet out;
    for (const auto& e : s.elements)
        if (e.annotation)
            for (const auto& t : tokenize(*e.annotation)) out.insert(t);
    return out;
}

double jaccard(const TokenSet& a, const TokenSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct LineStats {
    std::vector<int> row_nz, col_nz;       // nonzero counts per line
    std::vector<double> row_top, col_top;  // best value per line
    std::vector<double> row_second, col_second;
    int nonzero = 0;

    explicit LineStats(const SimilarityMatrix& m)
        : row_nz(m.rows(), 0), col_nz(m.cols(), 0), row_top(m.rows(), 0.0),
          col_top(m.cols(), 0.0), row_second(m.rows(), 0.0), col_second(m.cols(), 0.0) {
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) {
                double v = m.get(r, c);
                if (v <= 0.0) continue;
                ++nonzero;
                ++row_nz[r];
                ++col_nz[c];
                if (v > row_top[r]) { row_second[r] = row_top[r]; row_top[r] = v; }
                else if (v > row_second[r]) row_second[r] = v;
                if (v > col_top[c]) { col_second[c] = col_top[c]; col_top[c] = v; }
                else if (v > col_second[c]) col_second[c] = v;
            }
    }
};

} // namespace

double selectivity(const SimilarityMatrix& m) {
    LineStats ls(m);
    if (ls.nonzero == 0) return 0.0;
    double sum = 0.0;
    for (int r = 0; r < m.rows(); ++r)
        if (ls.row_top[r] > 0.0) sum += ls.row_top[r] - ls.row_second[r];
    for (int c = 0; c < m.cols(); ++c)
        if (ls.col_top[c] > 0.0) sum += ls.col_top[c] - ls.col_second[c];
    return sum / (2.0 * static_cast<double>(ls.nonzero));
}

double monogamy(const SimilarityMatrix& m) {
    if (m.rows() == 0) return 0.0;
    LineStats ls(m);
    if (ls.nonzero == 0) return 0.0;
    double total = 0.0;
    for (int r = 0; r < m.rows(); ++r) {
        double row_sum = 0.0;
        for (int c = 0; c < m.cols(); ++c) {
            double v = m.get(r, c);
            if (v <= 0.0) continue;
            int partners = ls.row_nz[r] + ls.col_nz[c] - 1;
            row_sum += v / static_cast<double>(partners);
        }
        total += row_sum;  // empty rows contribute 0 and still count below
    }
    return total / static_cast<double>(m.rows());
}

double harmony(const SimilarityMatrix& m) {
    LineStats ls(m);
    if (ls.nonzero == 0) return 0.0;
    int double_maxima = 0;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            double v = m.get(r, c);
            if (v > 0.0 && v >= ls.row_top[r] && v >= ls.col_top[c]) ++double_maxima;
        }
    int nz_rows = 0, nz_cols = 0;
    for (int x : ls.row_nz) nz_rows += x > 0;
    for (int x : ls.col_nz) nz_cols += x > 0;
    double h = static_cast<double>(double_maxima) / static_cast<double>(std::min(nz_rows, nz_cols));
    return std::min(1.0, h);  // ties can put several double maxima on one line
}

double multi_matches(const SimilarityMatrix& m) {
    LineStats ls(m);
    if (ls.nonzero == 0) return 0.0;
    int multi = 0;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c) > 0.0 && (ls.row_nz[r] > 1 || ls.col_nz[c] > 1)) ++multi;
    return static_cast<double>(multi) / static_cast<double>(ls.nonzero);
}

double noise(const SimilarityMatrix& m) {
    LineStats ls(m);
    if (ls.nonzero == 0) return 0.0;
    int noisy = 0;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            double v = m.get(r, c);
            if (v > 0.0 && v < 0.5 * std::max(ls.row_top[r], ls.col_top[c])) ++noisy;
        }
    return static_cast<double>(noisy) / static_cast<double>(ls.nonzero);
}

double cross_matches(const SimilarityMatrix& m, const Schema& s, const Schema& t) {
    std::vector<std::pair<int, int>> corr;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c) > 0.0) corr.push_back({r, c});
    long long pairs = 0, crossing = 0;
    for (size_t i = 0; i < corr.size(); ++i)
        for (size_t j = i + 1; j < corr.size(); ++j) {
            const std::string& a = m.row_ids()[corr[i].first];
            const std::string& b = m.row_ids()[corr[j].first];
            if (a == b) continue;
            auto ds = tree_distance(s, a, b);
            if (!ds || *ds != 1) continue;  // only directly connected source pairs
            ++pairs;
            const std::string& x = m.col_ids()[corr[i].second];
            const std::string& y = m.col_ids()[corr[j].second];
            if (x == y) continue;
            auto dt = tree_distance(t, x, y);
            if (!dt || *dt > 2) ++crossing;
        }
    if (pairs == 0) return 0.0;
    return static_cast<double>(crossing) / static_cast<double>(pairs);
}

namespace {

/// Mean pairwise tree distance inside one group, capped and normalized.
double group_dispersion(const Schema& schema, const std::vector<std::string>& members,
                        double cap) {
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < members.size(); ++i)
        for (size_t j = i + 1; j < members.size(); ++j) {
            auto d = tree_distance(schema, members[i], members[j]);
            sum += d ? std::min(static_cast<double>(*d), cap) : cap;
            ++pairs;
        }
    return pairs == 0 ? 0.0 : (sum / pairs) / cap;
}

} // namespace

double match_distribution(const SimilarityMatrix& m, const Schema& s, const Schema& t,
                          double cap) {
    std::vector<double> scores;
    for (int r = 0; r < m.rows(); ++r) {
        std::vector<std::string> targets;
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c) > 0.0) targets.push_back(m.col_ids()[c]);
        if (targets.size() >= 2) scores.push_back(group_dispersion(t, targets, cap));
    }
    for (int c = 0; c < m.cols(); ++c) {
        std::vector<std::string> sources;
        for (int r = 0; r < m.rows(); ++r)
            if (m.get(r, c) > 0.0) sources.push_back(m.row_ids()[r]);
        if (sources.size() >= 2) scores.push_back(group_dispersion(s, sources, cap));
    }
    if (scores.empty()) return 1.0;  // no multi matches: maximally dispersed
    double sum = 0.0;
    for (double x : scores) sum += x;
    return sum / static_cast<double>(scores.size());
}

namespace {

/// Row-wise top-1 cells of a matrix (ties keep all, zero rows none).
std::set<std::pair<int, int>> top_cells(const SimilarityMatrix& m) {
    std::set<std::pair<int, int>> out;
    for (int r = 0; r < m.rows(); ++r) {
        double best = 0.0;
        for (int c = 0; c < m.cols(); ++c) best = std::max(best, m.get(r, c));
        if (best <= 0.0) continue;
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c) >= best) out.insert({r, c});
    }
    return out;
}

} // namespace

double unanimity(const std::vector<const SimilarityMatrix*>& ms) {
    if (ms.size() < 2) throw ValidationError("unanimity: needs at least two matrices");
    for (const auto* m : ms)
        if (!m->same_shape(*ms.front()))
            throw ValidationError("unanimity: matrices differ in shape");
    std::set<std::pair<int, int>> inter = top_cells(*ms.front());
    std::set<std::pair<int, int>> uni = inter;
    for (size_t i = 1; i < ms.size(); ++i) {
        auto tops = top_cells(*ms[i]);
        std::set<std::pair<int, int>> keep;
        for (const auto& cell : inter)
            if (tops.count(cell)) keep.insert(cell);
        inter = std::move(keep);
        uni.insert(tops.begin(), tops.end());
    }
    if (uni.empty()) return 0.0;
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double complementarity(const std::vector<const SimilarityMatrix*>& ms) {
    if (ms.size() < 2) throw ValidationError("complementarity: needs at least two matrices");
    bool any = false;
    for (const auto* m : ms) any = any || m->nonzero_count() > 0;
    if (!any) return 0.0;  // empty union: both agreement measures are 0
    return 1.0 - unanimity(ms);
}

// -- schema shape -------------------------------------------------------------

double node_token_ratio(const Schema& s) {
    if (s.elements.empty()) return 0.0;
    double ratio = static_cast<double>(schema_tokens(s).size()) /
                   static_cast<double>(s.elements.size());
    return std::min(1.0, ratio);
}

double repeating_elements(const Schema& s) {
    if (s.elements.empty()) return 0.0;
    std::set<std::pair<std::string, std::vector<std::string>>> signatures;
    for (const auto& e : s.elements) {
        std::vector<std::string> child_names;
        for (const auto& c : e.children) child_names.push_back(s.at(c).name);
        std::sort(child_names.begin(), child_names.end());
        signatures.insert({e.name, std::move(child_names)});
    }
    return 1.0 - static_cast<double>(signatures.size()) / static_cast<double>(s.elements.size());
}

double schema_depth(const Schema& s, double cap) {
    return std::min(static_cast<double>(s.max_depth()) / cap, 1.0);
}

double path_variance(const Schema& s) {
    int max_d = s.max_depth();
    if (max_d == 0) return 0.0;
    std::vector<double> leaf_depths;
    for (const auto& e : s.elements)
        if (e.children.empty()) leaf_depths.push_back(static_cast<double>(s.depth(e.id)));
    if (leaf_depths.empty()) return 0.0;
    double mean = 0.0;
    for (double d : leaf_depths) mean += d;
    mean /= static_cast<double>(leaf_depths.size());
    double var = 0.0;
    for (double d : leaf_depths) var += (d - mean) * (d - mean);
    var /= static_cast<double>(leaf_depths.size());
    return std::min(var / static_cast<double>(max_d), 1.0);
}

double name_meaningfulness(const Schema& s, const std::set<std::string>& wordlist) {
    TokenSet tokens = schema_tokens(s);
    if (tokens.empty()) return 0.0;
    size_t known = 0;
    for (const auto& t : tokens)
        if (wordlist.count(t)) ++known;
    return static_cast<double>(known) / static_cast<double>(tokens.size());
}

std::set<std::string> load_wordlist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open wordlist: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::string lowered;
        for (char c : line) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        out.insert(lowered);
    }
    return out;
}

const std::set<std::string>& builtin_wordlist() {
    static const std::set<std::string> words = {
        "account", "address", "amount",   "annual",   "article",  "bank",    "bill",
        "billing", "birth",   "box",      "branch",   "brand",    "business","buyer",
        "category","city",    "class",    "client",   "code",     "comment", "company",
        "contact", "country", "county",   "credit",   "currency", "customer","date",
        "day",     "delivery","department","description","detail", "discount","district",
        "document","email",   "employee", "end",      "entry",    "fax",     "first",
        "flag",    "gender",  "group",    "header",   "home",     "id",      "info",
        "invoice", "item",    "kind",     "label",    "last",     "level",   "line",
        "list",    "location","mail",     "manager",  "middle",   "mobile",  "month",
        "name",    "net",     "note",     "number",   "office",   "order",   "organization",
        "owner",   "part",    "partner",  "party",    "payment",  "person",  "phone",
        "po",      "position","postal",   "price",    "product",  "purchase","quantity",
        "rate",    "reference","region",  "remark",   "role",     "room",    "sale",
        "salutation","section","seller",  "ship",     "shipping", "shipment","size",
        "start",   "state",   "status",   "street",   "supplier", "tax",     "telephone",
        "term",    "time",    "title",    "total",    "town",     "type",    "unit",
        "user",    "value",   "vat",      "vendor",   "week",     "weight",  "year",
        "zip",     "zone"};
    return words;
}

// -- schema pair --------------------------------------------------------------

double name_similarity(const Schema& s, const Schema& t) {
    SimilarityMatrix m = compute_matcher(MatcherKind::Name, s, t);
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    double row_mean = 0.0;
    for (int r = 0; r < m.rows(); ++r) {
        double best = 0.0;
        for (int c = 0; c < m.cols(); ++c) best = std::max(best, m.get(r, c));
        row_mean += best;
    }
    row_mean /= static_cast<double>(m.rows());
    double col_mean = 0.0;
    for (int c = 0; c < m.cols(); ++c) {
        double best = 0.0;
        for (int r = 0; r < m.rows(); ++r) best = std::max(best, m.get(r, c));
        col_mean += best;
    }
    col_mean /= static_cast<double>(m.cols());
    return 0.5 * (row_mean + col_mean);
}

namespace {

std::vector<int> depth_profile(const Schema& s) {
    std::vector<int> profile;
    for (const auto& e : s.elements) {
        int d = s.depth(e.id);
        if (static_cast<size_t>(d) > profile.size()) profile.resize(d, 0);
        ++profile[d - 1];
    }
    return profile;
}

} // namespace

double structural_similarity(const Schema& s, const Schema& t) {
    auto ps = depth_profile(s), pt = depth_profile(t);
    size_t len = std::max(ps.size(), pt.size());
    ps.resize(len, 0);
    pt.resize(len, 0);
    double l1 = 0.0;
    for (size_t i = 0; i < len; ++i) l1 += std::abs(ps[i] - pt[i]);
    double denom = static_cast<double>(std::max(s.elements.size(), t.elements.size()));
    if (denom == 0.0) return 0.0;
    return std::max(0.0, 1.0 - l1 / denom);
}

double schema_size_ratio(const Schema& s, const Schema& t) {
    double a = static_cast<double>(s.elements.size());
    double b = static_cast<double>(t.elements.size());
    if (a == 0.0 || b == 0.0) return 0.0;
    return std::min(a, b) / std::max(a, b);
}

// -- report -------------------------------------------------------------------

std::vector<std::string> schema_feature_order() {
    return {"nameExistence",  "datatypeExistence", "annotationExistence", "instanceExistence",
            "nodeTokenRatio", "repeatingElements", "schemaDepth",         "pathVariance",
            "nameMeaningfulness"};
}

std::vector<std::string> pair_feature_order() {
    return {"tokenOverlap", "annotationTokenOverlap", "nameSimilarity", "structuralSimilarity",
            "schemaSizeRatio"};
}

FeatureReport compute_feature_report(const Schema& s, const Schema& t,
                                     const std::set<std::string>& wordlist, double depth_cap) {
    FeatureReport r;
    auto fill = [&](const Schema& schema, std::map<std::string, double>& out) {
        out["nameExistence"] = existence_feature(schema, ElementAttr::Name);
        out["datatypeExistence"] = existence_feature(schema, ElementAttr::Datatype);
        out["annotationExistence"] = existence_feature(schema, ElementAttr::Annotation);
        out["instanceExistence"] = existence_feature(schema, ElementAttr::Instances);
        out["nodeTokenRatio"] = node_token_ratio(schema);
        out["repeatingElements"] = repeating_elements(schema);
        out["schemaDepth"] = schema_depth(schema, depth_cap);
        out["pathVariance"] = path_variance(schema);
        out["nameMeaningfulness"] = name_meaningfulness(schema, wordlist);
    };
    fill(s, r.source);
    fill(t, r.target);
    r.pair["tokenOverlap"] = token_set_overlap(s, t);
    r.pair["annotationTokenOverlap"] = annotation_token_overlap(s, t);
    r.pair["nameSimilarity"] = name_similarity(s, t);
    r.pair["structuralSimilarity"] = structural_similarity(s, t);
    r.pair["schemaSizeRatio"] = schema_size_ratio(s, t);
    return r;
}

double token_set_overlap(const Schema& s, const Schema& t) {
    return jaccard(schema_tokens(s), schema_tokens(t));
}

double annotation_token_overlap(const Schema& s, const Schema& t) {
    return jaccard(schema_annotation_tokens(s), schema_annotation_tokens(t));
}

} // namespace adamatch
