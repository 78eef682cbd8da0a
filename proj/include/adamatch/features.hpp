// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "adamatch/matrix.hpp"
#include "adamatch/schema.hpp"

namespace adamatch {

/// Every feature below maps its input to [0,1].

enum class ElementAttr { Name, Datatype, Annotation, Instances };

/// Fraction of elements carrying the attribute (non-empty name/datatype/
/// annotation, at least one instance).
double existence_feature(const Schema& s, ElementAttr attr);

/// |ts(S) & ts(T)| / |ts(S) | ts(T)| over the union of all name tokens of
/// each schema; 0 when both schemas have no tokens at all.
double token_set_overlap(const Schema& s, const Schema& t);
/// Same, over annotation tokens.
double annotation_token_overlap(const Schema& s, const Schema& t);

/// Mean gap between the best and second-best value of each row and column,
/// normalized: (sum of row gaps + sum of column gaps) / (2 * #nonzero cells).
/// A vector's gap is 0 when its maximum is 0, else max - second (second = 0
/// when absent). Zero matrix -> 0.
double selectivity(const SimilarityMatrix& m);

/// How exclusive the correspondences are. Each nonzero cell is divided by its
/// partner count (nonzeros in its row + nonzeros in its column - 1), the
/// weighted values are summed per row, and the row sums averaged over all
/// rows. A full permutation matrix of 1.0s scores exactly 1.0; every
/// additional positive cell strictly lowers the score.
double monogamy(const SimilarityMatrix& m);

/// Fraction of cells that are simultaneously a row and a column maximum,
/// relative to min(#rows with nonzeros, #cols with nonzeros); capped at 1
/// (ties can produce several double maxima per line). Zero matrix -> 0.
double harmony(const SimilarityMatrix& m);

/// Fraction of nonzero cells sharing their row or column with another
/// nonzero cell. 0 iff the nonzero cells form a partial permutation.
double multi_matches(const SimilarityMatrix& m);

/// Fraction of nonzero cells with value < 0.5 * max(best of row, best of
/// column) -- weak shadows of a dominant neighbor.
double noise(const SimilarityMatrix& m);

/// Over all pairs of correspondences (a->x, b->y) whose sources are directly
/// connected (tree_distance == 1): fraction whose targets are far apart
/// (tree_distance > 2) or disconnected. No such pairs -> 0.
double cross_matches(const SimilarityMatrix& m, const Schema& s, const Schema& t);

/// Mean normalized pairwise tree distance inside multi-match groups (a group
/// is one element matched to >= 2 partners; both directions contribute).
/// Pairwise distances are capped at `cap` (disconnected counts as the cap)
/// and divided by it. No groups -> 1.0 (maximally dispersed by convention).
double match_distribution(const SimilarityMatrix& m, const Schema& s, const Schema& t,
                          double cap = 4.0);

/// Agreement of >= 2 matchers on their row-wise top-1 cells (ties keep all,
/// zero rows contribute nothing): unanimity = |intersection| / |union| of the
/// top-cell sets, complementarity = 1 - unanimity; both 0 when the union is
/// empty.
double unanimity(const std::vector<const SimilarityMatrix*>& ms);
double complementarity(const std::vector<const SimilarityMatrix*>& ms);

// -- schema shape -----------------------------------------------------------

/// Distinct name tokens / element count, capped at 1.
double node_token_ratio(const Schema& s);
/// 1 - (#distinct (name, child-name multiset) signatures / #elements).
double repeating_elements(const Schema& s);
/// min(max node depth / cap, 1); roots have depth 1.
double schema_depth(const Schema& s, double cap = 20.0);
/// min(population variance of leaf depths / max depth, 1); 0 for an empty
/// forest.
double path_variance(const Schema& s);
/// Fraction of distinct name tokens present in the wordlist.
double name_meaningfulness(const Schema& s, const std::set<std::string>& wordlist);

/// One lowercase word per line; '#' comments and blank lines ignored.
std::set<std::string> load_wordlist(const std::string& path);
/// Compact built-in fallback used when no wordlist file is configured.
const std::set<std::string>& builtin_wordlist();

// -- schema pair ------------------------------------------------------------

/// Symmetric mean of per-element best name trigram similarity.
double name_similarity(const Schema& s, const Schema& t);
/// 1 - L1 distance of the per-depth element count profiles / max(|S|,|T|),
/// floored at 0.
double structural_similarity(const Schema& s, const Schema& t);
/// min(|S|,|T|) / max(|S|,|T|).
double schema_size_ratio(const Schema& s, const Schema& t);

/// Schema and pair features computed once per run, keyed by stable feature
/// names (the keys cmd_analyze prints).
struct FeatureReport {
    std::map<std::string, double> source;  // per-schema features of S
    std::map<std::string, double> target;  // per-schema features of T
    std::map<std::string, double> pair;
};

FeatureReport compute_feature_report(const Schema& s, const Schema& t,
                                     const std::set<std::string>& wordlist,
                                     double depth_cap = 20.0);

/// Fixed print order for reports and traces.
std::vector<std::string> schema_feature_order();
std::vector<std::string> pair_feature_order();

} // namespace adamatch
