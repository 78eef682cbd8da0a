// SPDX-License-Identifier: Apache-2.0
#include "adamatch/matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> row_ids,
                                   std::vector<std::string> col_ids)
    : row_ids_(std::move(row_ids)),
      col_ids_(std::move(col_ids)),
      values_(row_ids_.size() * col_ids_.size(), 0.0) {}

void SimilarityMatrix::set(int r, int c, double v) {
    // aggregation of values near 1 can drift a few ulps out of range
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    values_[static_cast<size_t>(r) * col_ids_.size() + c] = v;
}

bool SimilarityMatrix::same_shape(const SimilarityMatrix& other) const {
    return row_ids_ == other.row_ids_ && col_ids_ == other.col_ids_;
}

int SimilarityMatrix::nonzero_count() const {
    int n = 0;
    for (double v : values_)
        if (v > 0.0) ++n;
    return n;
}

SimilarityMatrix select_threshold(const SimilarityMatrix& m, double t) {
    if (t < 0.0 || t > 1.0) throw ValidationError("selection: threshold must be in [0,1]");
    SimilarityMatrix out(m.row_ids(), m.col_ids());
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            double v = m.get(r, c);
            if (v > 0.0 && v >= t) out.set(r, c, v);
        }
    return out;
}

namespace {

/// Lowest kept value for one line (row or column) under MaxN/Delta: the
/// min(n, #nonzero)-th highest nonzero value minus delta. An empty line
/// keeps nothing (infinite pivot).
double line_pivot(std::vector<double>& nonzeros, int n, double delta) {
    if (nonzeros.empty()) return std::numeric_limits<double>::infinity();
    std::sort(nonzeros.begin(), nonzeros.end(), std::greater<double>());
    size_t idx = std::min<size_t>(static_cast<size_t>(n), nonzeros.size()) - 1;
    return nonzeros[idx] - delta;
}

SimilarityMatrix select_topn(const SimilarityMatrix& m, int n, double delta,
                             SelectDirection dir) {
    if (n < 1) throw ValidationError("selection: n must be >= 1");
    if (delta < 0.0) throw ValidationError("selection: delta must be >= 0");
    const int R = m.rows(), C = m.cols();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_pivot(R, inf), col_pivot(C, inf);
    if (dir == SelectDirection::Rows || dir == SelectDirection::Both) {
        for (int r = 0; r < R; ++r) {
            std::vector<double> vals;
            for (int c = 0; c < C; ++c)
                if (m.get(r, c) > 0.0) vals.push_back(m.get(r, c));
            row_pivot[r] = line_pivot(vals, n, delta);
        }
    }
    if (dir == SelectDirection::Columns || dir == SelectDirection::Both) {
        for (int c = 0; c < C; ++c) {
            std::vector<double> vals;
            for (int r = 0; r < R; ++r)
                if (m.get(r, c) > 0.0) vals.push_back(m.get(r, c));
            col_pivot[c] = line_pivot(vals, n, delta);
        }
    }
    SimilarityMatrix out(m.row_ids(), m.col_ids());
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double v = m.get(r, c);
            if (v <= 0.0) continue;  // zeros are never selected
            if (v >= row_pivot[r] || v >= col_pivot[c]) out.set(r, c, v);
        }
    return out;
}

} // namespace

SimilarityMatrix select_maxn(const SimilarityMatrix& m, int n, SelectDirection dir) {
    return select_topn(m, n, 0.0, dir);
}

SimilarityMatrix select_delta(const SimilarityMatrix& m, int n, double delta,
                              SelectDirection dir) {
    return select_topn(m, n, delta, dir);
}

SimilarityMatrix aggregate(const std::vector<const SimilarityMatrix*>& inputs,
                           AggStrategy strategy, const std::vector<double>& weights) {
    if (inputs.empty()) throw ValidationError("aggregate: no input matrices");
    for (const auto* m : inputs)
        if (!m->same_shape(*inputs.front()))
            throw ValidationError("aggregate: input matrices differ in shape");
    std::vector<double> w;
    if (strategy == AggStrategy::Weighted) {
        if (weights.size() != inputs.size())
            throw ValidationError("aggregate: weight count does not match input count");
        double sum = 0.0;
        for (double x : weights) {
            if (x < 0.0) throw ValidationError("aggregate: negative weight");
            sum += x;
        }
        if (sum <= 0.0) throw ValidationError("aggregate: weight vector sums to zero");
        for (double x : weights) w.push_back(x / sum);
    }
    const SimilarityMatrix& first = *inputs.front();
    SimilarityMatrix out(first.row_ids(), first.col_ids());
    for (int r = 0; r < first.rows(); ++r)
        for (int c = 0; c < first.cols(); ++c) {
            double acc;
            switch (strategy) {
            case AggStrategy::Average: {
                acc = 0.0;
                for (const auto* m : inputs) acc += m->get(r, c);
                acc /= static_cast<double>(inputs.size());
                break;
            }
            case AggStrategy::Max: {
                acc = 0.0;
                for (const auto* m : inputs) acc = std::max(acc, m->get(r, c));
                break;
            }
            case AggStrategy::Min: {
                acc = 1.0;
                for (const auto* m : inputs) acc = std::min(acc, m->get(r, c));
                break;
            }
            case AggStrategy::Weighted: {
                acc = 0.0;
                for (size_t i = 0; i < inputs.size(); ++i) acc += w[i] * inputs[i]->get(r, c);
                break;
            }
            }
            out.set(r, c, acc);
        }
    return out;
}

Mapping to_mapping(const SimilarityMatrix& m, const std::string& source_schema,
                   const std::string& target_schema) {
    Mapping out;
    out.source = source_schema;
    out.target = target_schema;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c) > 0.0)
                out.correspondences.push_back({m.row_ids()[r], m.col_ids()[c], m.get(r, c)});
    return out;
}

namespace {

std::string json_escape(const std::string& s) {
    return nlohmann::json(s).dump();
}

} // namespace

std::string serialize_mapping(const Mapping& m) {
    // hand-rendered so sims stay at a fixed 6-decimal width
    std::ostringstream out;
    out << "{\n";
    out << "  \"source\": " << json_escape(m.source) << ",\n";
    out << "  \"target\": " << json_escape(m.target) << ",\n";
    out << "  \"correspondences\": [";
    for (size_t i = 0; i < m.correspondences.size(); ++i) {
        const auto& c = m.correspondences[i];
        char sim[32];
        std::snprintf(sim, sizeof sim, "%.6f", c.sim);
        out << (i ? ",\n    " : "\n    ");
        out << "{\"s\": " << json_escape(c.s) << ", \"t\": " << json_escape(c.t)
            << ", \"sim\": " << sim << "}";
    }
    out << (m.correspondences.empty() ? "]\n" : "\n  ]\n");
    out << "}\n";
    return out.str();
}

void save_mapping(const Mapping& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << serialize_mapping(m);
}

Mapping load_mapping(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    Mapping m;
    try {
        m.source = j.at("source").get<std::string>();
        m.target = j.at("target").get<std::string>();
        for (const auto& jc : j.at("correspondences")) {
            Correspondence c;
            c.s = jc.at("s").get<std::string>();
            c.t = jc.at("t").get<std::string>();
            c.sim = jc.value("sim", 0.0);
            m.correspondences.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return m;
}

} // namespace adamatch
