// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adamatch {

/// Set of lowercase name fragments produced by tokenize().
using TokenSet = std::set<std::string>;

struct SchemaElement {
    std::string id;                       // unique within the schema
    std::string name;                     // may be empty
    std::optional<std::string> datatype;  // normalized lazily by consumers
    std::optional<std::string> annotation;
    std::vector<std::string> instances;   // sample values, order preserved
    std::optional<std::string> parent;    // id of parent element, if any
    std::vector<std::string> children;    // ids of children, document order
};

/// A schema is an ordered forest of elements. Element order is the order of
/// appearance in the source document and is preserved through serialization.
struct Schema {
    std::string id;
    std::vector<SchemaElement> elements;

    const SchemaElement* find(const std::string& id) const;
    const SchemaElement& at(const std::string& id) const;  // throws ValidationError
    int index_of(const std::string& id) const;             // -1 if absent
    std::vector<std::string> roots() const;
    bool is_leaf(const std::string& id) const;
    /// Node depth of the deepest element; roots have depth 1. Zero only for
    /// an (invalid) empty schema.
    int max_depth() const;
    int depth(const std::string& id) const;
};

/// Splits a composite name into lowercase tokens. Boundaries: non-alphanumeric
/// delimiters (_ - . / space, and anything else outside [A-Za-z0-9]),
/// lower-to-upper camelCase transitions, and letter/digit transitions.
/// A run of consecutive capitals ("ID", "XML") stays one token.
/// Idempotent: re-tokenizing any emitted token yields that token.
std::vector<std::string> tokenize(const std::string& name);

/// tokenize() as a set.
TokenSet token_set(const std::string& name);

enum class NeighborKind { Children, Leaves, Parent, Siblings };

/// Structural neighborhood of an element. Leaves = leaf descendants of id
/// (id itself when it is a leaf). Siblings share the parent (roots are
/// siblings of other roots); the element itself is excluded.
std::vector<std::string> tree_neighbors(const Schema& s, const std::string& id,
                                        NeighborKind kind);

/// Ids along the path root..id, inclusive.
std::vector<std::string> path_of(const Schema& s, const std::string& id);

/// Edge count on the unique tree path between two elements, or std::nullopt
/// when they live in different trees of the forest ("disconnected").
std::optional<int> tree_distance(const Schema& s, const std::string& a,
                                 const std::string& b);

/// Loads the canonical schema JSON format. Validates: unique ids, existing
/// parents, parent/children consistency, no cycles, at least one element.
Schema load_schema(const std::string& path);
Schema parse_schema(const std::string& json_text, const std::string& origin);

/// Serializes to the canonical format; load(serialize(s)) is structurally
/// identical to s.
std::string serialize_schema(const Schema& s);
void save_schema(const Schema& s, const std::string& path);

/// Imports a (restricted) XML document as a schema: element names become
/// names, nesting becomes parent/children, immediate text becomes the
/// annotation. Parse errors carry line and column.
Schema import_xml_tree(const std::string& xml_text, const std::string& schema_id);
Schema load_xml_tree(const std::string& path);

} // namespace adamatch
