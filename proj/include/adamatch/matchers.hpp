// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>

#include "adamatch/matrix.hpp"
#include "adamatch/schema.hpp"

namespace adamatch {

enum class MatcherKind {
    Name,
    WeightedName,
    TokenName,
    Datatype,
    Annotation,
    Instance,
    // structural kinds; these consume a constituent matrix
    Children,
    Leaves,
    Parent,
    Sibling,
    Path,
};

bool is_structural(MatcherKind k);
std::string matcher_kind_name(MatcherKind k);
MatcherKind matcher_kind_from_name(const std::string& name);  // throws ParseError

/// Dice coefficient over the 3-gram sets of the lowercased strings:
/// 2*|tri(a) & tri(b)| / (|tri(a)| + |tri(b)|). Identical non-empty strings
/// score 1; an empty string scores 0 against everything.
double trigram_similarity(const std::string& a, const std::string& b);

/// Symmetric datatype compatibility policy. Lookup order: explicit table
/// entry (either orientation), equal labels -> 1.0, both numeric -> 0.8,
/// string vs anything -> 0.4, otherwise 0. Missing datatypes always score 0.
class DatatypeTable {
public:
    DatatypeTable() = default;

    double sim(const std::optional<std::string>& a, const std::optional<std::string>& b) const;

    void add(const std::string& a, const std::string& b, double sim);

    /// JSON list of {"a","b","sim"}; entries override the built-in rules.
    static DatatypeTable load(const std::string& path);
    static DatatypeTable parse(const std::string& json_text, const std::string& origin);

private:
    std::map<std::pair<std::string, std::string>, double> entries_;
};

/// Optional restriction for sequential execution: when present, a cell (i,j)
/// is computed only if row i and column j of the mask each contain a nonzero
/// value ("surviving rows/columns"); all other cells are 0.
struct MatcherOptions {
    const DatatypeTable* datatype_table = nullptr;
    const SimilarityMatrix* mask = nullptr;
    const SimilarityMatrix* constituent = nullptr;  // required for structural kinds
    int jobs = 1;
};

/// Computes the |S| x |T| matrix for one matcher. Pure: identical inputs give
/// identical results regardless of the jobs hint.
SimilarityMatrix compute_matcher(MatcherKind kind, const Schema& source,
                                 const Schema& target, const MatcherOptions& opt = {});

/// Relative cost rank used by the sequential rewrite rule (lower = cheaper).
int matcher_cost_rank(MatcherKind k);

} // namespace adamatch
