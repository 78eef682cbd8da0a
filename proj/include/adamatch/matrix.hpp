// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace adamatch {

/// Dense |S| x |T| similarity matrix. Rows are source element ids, columns
/// target element ids, values in [0,1]. Values are clamped on write to guard
/// against floating-point drift from aggregation.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids);

    int rows() const { return static_cast<int>(row_ids_.size()); }
    int cols() const { return static_cast<int>(col_ids_.size()); }
    double get(int r, int c) const { return values_[static_cast<size_t>(r) * col_ids_.size() + c]; }
    void set(int r, int c, double v);

    const std::vector<std::string>& row_ids() const { return row_ids_; }
    const std::vector<std::string>& col_ids() const { return col_ids_; }

    bool same_shape(const SimilarityMatrix& other) const;
    int nonzero_count() const;
    bool operator==(const SimilarityMatrix& other) const = default;

private:
    std::vector<std::string> row_ids_;
    std::vector<std::string> col_ids_;
    std::vector<double> values_;
};

struct Correspondence {
    std::string s;  // source element id
    std::string t;  // target element id
    double sim = 0.0;
};

struct Mapping {
    std::string source;  // source schema id
    std::string target;  // target schema id
    std::vector<Correspondence> correspondences;  // row-major matrix order
};

enum class SelectDirection { Rows, Columns, Both };

/// Keeps cells with value >= t; everything else becomes 0. Zeros are never
/// part of a selection result.
SimilarityMatrix select_threshold(const SimilarityMatrix& m, double t);

/// Keeps, per row (and/or column), the cells tied with the n highest nonzero
/// values; ties at the n-th value keep every tied cell. direction=Both is the
/// union of the row-wise and column-wise selections.
SimilarityMatrix select_maxn(const SimilarityMatrix& m, int n, SelectDirection dir);

/// MaxN plus every nonzero cell whose value is >= (n-th highest - delta) in
/// its row/column. select_delta(m, n, 0, dir) == select_maxn(m, n, dir).
SimilarityMatrix select_delta(const SimilarityMatrix& m, int n, double delta,
                              SelectDirection dir);

enum class AggStrategy { Average, Max, Min, Weighted };

/// Cell-wise aggregation of equally-shaped matrices. Weighted renormalizes
/// the weight vector to sum 1; an all-zero weight vector is an error.
SimilarityMatrix aggregate(const std::vector<const SimilarityMatrix*>& inputs,
                           AggStrategy strategy,
                           const std::vector<double>& weights = {});

/// Nonzero cells as correspondences, row-major order.
Mapping to_mapping(const SimilarityMatrix& m, const std::string& source_schema,
                   const std::string& target_schema);

/// Mapping file format: {"source","target","correspondences":[{"s","t","sim"}]}
/// with sims at fixed 6-decimal precision; byte-stable for identical input.
std::string serialize_mapping(const Mapping& m);
void save_mapping(const Mapping& m, const std::string& path);
Mapping load_mapping(const std::string& path);

} // namespace adamatch
