// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <adamatch/errors.hpp>
#include <adamatch/matchers.hpp>
#include <adamatch/schema.hpp>

#include <cstdlib>
#include <random>
#include <string>
#include <vector>

using namespace adamatch;

namespace {

Schema flat_schema(const std::string& id, const std::vector<std::string>& names) {
    Schema s;
    s.id = id;
    for (size_t i = 0; i < names.size(); ++i)
        s.elements.push_back({id + "_e" + std::to_string(i), names[i], std::nullopt, std::nullopt,
                              {}, std::nullopt, {}});
    return s;
}

SimilarityMatrix transpose(const SimilarityMatrix& m) {
    SimilarityMatrix out(m.col_ids(), m.row_ids());
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) out.set(c, r, m.get(r, c));
    return out;
}

} // namespace

TEST_CASE("trigram_similarity: identity, disjoint, empty") {
    CHECK(trigram_similarity("order", "order") == 1.0);
    CHECK(trigram_similarity("order", "zzzz") == 0.0);
    CHECK(trigram_similarity("", "anything") == 0.0);
    CHECK(trigram_similarity("", "") == 0.0);
    CHECK(trigram_similarity("Order", "oRDer") == 1.0);  // case-insensitive
    double close = trigram_similarity("shipment", "shipments");
    CHECK(close > 0.5);
    CHECK(close < 1.0);
}

TEST_CASE("name matcher: full-name trigram similarity") {
    Schema s = flat_schema("S", {"order"});
    Schema t = flat_schema("T", {"order"});
    auto m = compute_matcher(MatcherKind::Name, s, t);
    CHECK(m.get(0, 0) == 1.0);

    Schema t2 = flat_schema("T", {"zzzz"});
    CHECK(compute_matcher(MatcherKind::Name, s, t2).get(0, 0) == 0.0);

    Schema s3 = flat_schema("S", {""});
    CHECK(compute_matcher(MatcherKind::Name, s3, t).get(0, 0) == 0.0);
}

TEST_CASE("token name matcher: Jaccard token overlap") {
    Schema s = flat_schema("S", {"PurchaseOrder"});
    Schema t = flat_schema("T", {"OrderItem"});
    auto m = compute_matcher(MatcherKind::TokenName, s, t);
    CHECK(m.get(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Schema t2 = flat_schema("T", {"order_purchase"});
    CHECK(compute_matcher(MatcherKind::TokenName, s, t2).get(0, 0) == 1.0);

    Schema t3 = flat_schema("T", {"shipment"});
    CHECK(compute_matcher(MatcherKind::TokenName, s, t3).get(0, 0) == 0.0);
}

TEST_CASE("token name matcher: self diagonal is 1.0 for named elements") {
    Schema s = flat_schema("S", {"PurchaseOrder", "ShipTo", "ItemCount"});
    auto m = compute_matcher(MatcherKind::TokenName, s, s);
    for (int i = 0; i < m.rows(); ++i) CHECK(m.get(i, i) == 1.0);
}

TEST_CASE("weighted name matcher: identity and disjoint") {
    Schema s = flat_schema("S", {"order"});
    Schema t = flat_schema("T", {"order"});
    CHECK(compute_matcher(MatcherKind::WeightedName, s, t).get(0, 0) == 1.0);

    Schema t2 = flat_schema("T", {"zzzz"});
    CHECK(compute_matcher(MatcherKind::WeightedName, s, t2).get(0, 0) == 0.0);
}

TEST_CASE("weighted name matcher: universal token scores below unweighted overlap") {
    // "id" appears in every element on both sides; the tested pair shares
    // nothing else, so the weighted score must fall below plain token overlap.
    Schema s = flat_schema("S", {"OrderId", "CustomerId", "ItemId", "ShipId", "TotalId"});
    Schema t = flat_schema("T", {"PaymentId", "VendorId", "ProductId", "BillId", "SumId"});
    auto weighted = compute_matcher(MatcherKind::WeightedName, s, t);
    auto token = compute_matcher(MatcherKind::TokenName, s, t);
    double w = weighted.get(0, 0);
    double u = token.get(0, 0);
    CHECK(u == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(w > 0.0);
    CHECK(w < u);
}

TEST_CASE("datatype matcher: built-in policy") {
    DatatypeTable table;
    CHECK(table.sim(std::string("int"), std::string("int")) == 1.0);
    CHECK(table.sim(std::string("int"), std::string("decimal")) == 0.8);
    CHECK(table.sim(std::nullopt, std::string("string")) == 0.0);
    CHECK(table.sim(std::string("string"), std::string("date")) == 0.4);
    CHECK(table.sim(std::string("date"), std::string("date")) == 1.0);
    CHECK(table.sim(std::string("date"), std::string("boolean")) == 0.0);
    CHECK(table.sim(std::string("INT"), std::string("Integer")) == 0.8);  // normalized labels
}

TEST_CASE("datatype matcher: explicit table entries override the rules") {
    DatatypeTable table;
    table.add("uuid", "string", 0.7);
    // Built-in rule would give string-vs-any 0.4; the entry wins either way.
    CHECK(table.sim(std::string("uuid"), std::string("string")) == 0.7);
    CHECK(table.sim(std::string("string"), std::string("uuid")) == 0.7);
    CHECK_THROWS_AS(table.add("a", "b", 1.5), ValidationError);
}

TEST_CASE("datatype matcher: shipped table file loads and applies") {
    const char* data_dir = std::getenv("ADAMATCH_DATA_DIR");
    REQUIRE(data_dir != nullptr);
    DatatypeTable table = DatatypeTable::load(std::string(data_dir) + "/datatype_table.json");
    CHECK(table.sim(std::string("varchar"), std::string("string")) == 1.0);
    CHECK(table.sim(std::string("timestamp"), std::string("date")) == 0.9);

    Schema s = flat_schema("S", {"a"});
    Schema t = flat_schema("T", {"b"});
    s.elements[0].datatype = "varchar";
    t.elements[0].datatype = "string";
    MatcherOptions opt;
    opt.datatype_table = &table;
    CHECK(compute_matcher(MatcherKind::Datatype, s, t, opt).get(0, 0) == 1.0);
    // Without the table the built-in string-vs-any rule applies.
    CHECK(compute_matcher(MatcherKind::Datatype, s, t).get(0, 0) == 0.4);
}

TEST_CASE("annotation matcher: token overlap of annotations") {
    Schema s = flat_schema("S", {"a"});
    Schema t = flat_schema("T", {"b"});
    s.elements[0].annotation = "total order amount";
    t.elements[0].annotation = "order amount gross";
    CHECK(compute_matcher(MatcherKind::Annotation, s, t).get(0, 0) == 0.5);

    t.elements[0].annotation = "total order amount";
    CHECK(compute_matcher(MatcherKind::Annotation, s, t).get(0, 0) == 1.0);

    t.elements[0].annotation = std::nullopt;
    CHECK(compute_matcher(MatcherKind::Annotation, s, t).get(0, 0) == 0.0);
}

TEST_CASE("instance matcher: overlap of sample value sets") {
    Schema s = flat_schema("S", {"a"});
    Schema t = flat_schema("T", {"b"});
    s.elements[0].instances = {"a", "b", "c"};
    t.elements[0].instances = {"b", "c", "d"};
    CHECK(compute_matcher(MatcherKind::Instance, s, t).get(0, 0) == 0.5);

    t.elements[0].instances = {"c", "a", "b"};
    CHECK(compute_matcher(MatcherKind::Instance, s, t).get(0, 0) == 1.0);

    t.elements[0].instances = {};
    CHECK(compute_matcher(MatcherKind::Instance, s, t).get(0, 0) == 0.0);
}

namespace {

// Root with one child on each side; used by the structural fixtures.
Schema tiny_tree(const std::string& id, const std::string& root_name,
                 const std::string& child_name) {
    Schema s;
    s.id = id;
    s.elements = {
        {id + "_root", root_name, std::nullopt, std::nullopt, {}, std::nullopt, {id + "_c"}},
        {id + "_c", child_name, std::nullopt, std::nullopt, {}, std::string(id + "_root"), {}},
    };
    return s;
}

} // namespace

TEST_CASE("structural matchers: parent of roots is 0; children follows constituent") {
    Schema s = tiny_tree("S", "Order", "Total");
    Schema t = tiny_tree("T", "Order", "Total");
    // Constituent: identity on names.
    auto constituent = compute_matcher(MatcherKind::Name, s, t);
    MatcherOptions opt;
    opt.constituent = &constituent;

    auto parent = compute_matcher(MatcherKind::Parent, s, t, opt);
    CHECK(parent.get(0, 0) == 0.0);  // both roots: no parent
    CHECK(parent.get(1, 1) == 1.0);  // parents are the roots, constituent 1.0

    auto children = compute_matcher(MatcherKind::Children, s, t, opt);
    CHECK(children.get(0, 0) == 1.0);  // identical single children at sim 1
    CHECK(children.get(1, 1) == 0.0);  // leaves have no children

    auto leaves = compute_matcher(MatcherKind::Leaves, s, t, opt);
    CHECK(leaves.get(0, 0) == 1.0);
    CHECK(leaves.get(1, 1) == 1.0);  // a leaf's leaf set is itself
}

TEST_CASE("path matcher: blends constituent and path-token overlap") {
    // Single-element schemas: path tokens are the root's own name tokens.
    // Overlap {alpha,beta} vs {beta} = 1/2; constituent pinned to 0.6.
    Schema s = flat_schema("S", {"alpha beta"});
    Schema t = flat_schema("T", {"beta"});
    SimilarityMatrix constituent({s.elements[0].id}, {t.elements[0].id});
    constituent.set(0, 0, 0.6);
    MatcherOptions opt;
    opt.constituent = &constituent;
    auto path = compute_matcher(MatcherKind::Path, s, t, opt);
    CHECK(path.get(0, 0) == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("structural matchers require a matching constituent") {
    Schema s = tiny_tree("S", "Order", "Total");
    Schema t = tiny_tree("T", "Order", "Total");
    CHECK_THROWS_AS((void)compute_matcher(MatcherKind::Children, s, t), ValidationError);
    SimilarityMatrix wrong({"x"}, {"y"});
    MatcherOptions opt;
    opt.constituent = &wrong;
    CHECK_THROWS_AS((void)compute_matcher(MatcherKind::Children, s, t, opt), ValidationError);
}

TEST_CASE("all matcher outputs stay in [0,1] and are symmetric under swap") {
    Schema s;
    s.id = "S";
    s.elements = {
        {"s1", "PurchaseOrder", std::nullopt, std::string("root"), {}, std::nullopt, {"s2", "s3"}},
        {"s2", "OrderDate", std::string("date"), std::nullopt, {"2020-01-01"}, std::string("s1"), {}},
        {"s3", "TotalAmount", std::string("decimal"), std::string("gross total"), {"10.5", "3"},
         std::string("s1"), {}},
    };
    Schema t;
    t.id = "T";
    t.elements = {
        {"t1", "Order", std::nullopt, std::string("document root"), {}, std::nullopt, {"t2", "t3"}},
        {"t2", "Date", std::string("datetime"), std::nullopt, {"2020-01-01"}, std::string("t1"), {}},
        {"t3", "Amount", std::string("int"), std::string("net total"), {"3"}, std::string("t1"), {}},
    };

    const MatcherKind element_kinds[] = {MatcherKind::Name,     MatcherKind::WeightedName,
                                         MatcherKind::TokenName, MatcherKind::Datatype,
                                         MatcherKind::Annotation, MatcherKind::Instance};
    for (auto k : element_kinds) {
        auto fwd = compute_matcher(k, s, t);
        auto bwd = compute_matcher(k, t, s);
        CHECK(fwd == transpose(bwd));
        for (int r = 0; r < fwd.rows(); ++r)
            for (int c = 0; c < fwd.cols(); ++c) {
                CHECK(fwd.get(r, c) >= 0.0);
                CHECK(fwd.get(r, c) <= 1.0);
            }
    }

    auto name_fwd = compute_matcher(MatcherKind::Name, s, t);
    auto name_bwd = transpose(name_fwd);
    const MatcherKind structural[] = {MatcherKind::Children, MatcherKind::Leaves,
                                      MatcherKind::Parent, MatcherKind::Sibling,
                                      MatcherKind::Path};
    for (auto k : structural) {
        MatcherOptions fopt, bopt;
        fopt.constituent = &name_fwd;
        bopt.constituent = &name_bwd;
        auto fwd = compute_matcher(k, s, t, fopt);
        auto bwd = compute_matcher(k, t, s, bopt);
        CHECK(fwd == transpose(bwd));
        for (int r = 0; r < fwd.rows(); ++r)
            for (int c = 0; c < fwd.cols(); ++c) {
                CHECK(fwd.get(r, c) >= 0.0);
                CHECK(fwd.get(r, c) <= 1.0);
            }
    }
}

TEST_CASE("structural matchers are monotone in the constituent") {
    // Root + 3 children on both sides; random constituents, raise one cell,
    // assert no structural output cell decreases.
    Schema s;
    s.id = "S";
    s.elements = {
        {"s0", "Root", std::nullopt, std::nullopt, {}, std::nullopt, {"s1", "s2", "s3"}},
        {"s1", "Alpha", std::nullopt, std::nullopt, {}, std::string("s0"), {}},
        {"s2", "Beta", std::nullopt, std::nullopt, {}, std::string("s0"), {}},
        {"s3", "Gamma", std::nullopt, std::nullopt, {}, std::string("s0"), {}},
    };
    Schema t = s;
    t.id = "T";
    for (auto& e : t.elements) {
        std::string old = e.id;
        e.id = "t" + old.substr(1);
        if (e.parent) e.parent = "t" + e.parent->substr(1);
        for (auto& c : e.children) c = "t" + c.substr(1);
    }

    std::vector<std::string> rid, cid;
    for (const auto& e : s.elements) rid.push_back(e.id);
    for (const auto& e : t.elements) cid.push_back(e.id);

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    const MatcherKind structural[] = {MatcherKind::Children, MatcherKind::Leaves,
                                      MatcherKind::Parent, MatcherKind::Sibling,
                                      MatcherKind::Path};
    for (int trial = 0; trial < 25; ++trial) {
        SimilarityMatrix base(rid, cid);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) base.set(r, c, val(rng));
        SimilarityMatrix raised = base;
        int rr = (int)(rng() % 4), rc = (int)(rng() % 4);
        raised.set(rr, rc, std::min(1.0, base.get(rr, rc) + 0.3));

        for (auto k : structural) {
            MatcherOptions lo, hi;
            lo.constituent = &base;
            hi.constituent = &raised;
            auto out_lo = compute_matcher(k, s, t, lo);
            auto out_hi = compute_matcher(k, s, t, hi);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    CHECK(out_hi.get(r, c) >= out_lo.get(r, c) - 1e-12);
        }
    }
}

TEST_CASE("mask suppresses cells outside surviving rows/columns") {
    Schema s = flat_schema("S", {"order", "ship", "bill"});
    Schema t = flat_schema("T", {"order", "ship", "bill"});
    std::vector<std::string> rid, cid;
    for (const auto& e : s.elements) rid.push_back(e.id);
    for (const auto& e : t.elements) cid.push_back(e.id);
    SimilarityMatrix mask(rid, cid);
    mask.set(0, 0, 0.9);  // row 0 and column 0 survive; rows/cols 1,2 are dead

    MatcherOptions opt;
    opt.mask = &mask;
    auto m = compute_matcher(MatcherKind::Name, s, t, opt);
    CHECK(m.get(0, 0) == 1.0);
    CHECK(m.get(1, 1) == 0.0);  // identical names, but masked out
    CHECK(m.get(2, 2) == 0.0);
    CHECK(m.get(0, 1) == 0.0);
    CHECK(m.get(1, 0) == 0.0);

    // Without the mask the diagonal is all ones.
    auto full = compute_matcher(MatcherKind::Name, s, t);
    CHECK(full.get(1, 1) == 1.0);
}

TEST_CASE("jobs hint does not change results") {
    Schema s = flat_schema("S", {"PurchaseOrder", "OrderDate", "ShipTo", "BillTo", "Total"});
    Schema t = flat_schema("T", {"Order", "Date", "Shipment", "Billing", "Sum"});
    for (auto k : {MatcherKind::Name, MatcherKind::WeightedName, MatcherKind::TokenName}) {
        MatcherOptions seq, par;
        seq.jobs = 1;
        par.jobs = 4;
        CHECK(compute_matcher(k, s, t, seq) == compute_matcher(k, s, t, par));
    }
}

TEST_CASE("matcher kind names round-trip; cost ranks order cheap before structural") {
    for (auto k : {MatcherKind::Name, MatcherKind::WeightedName, MatcherKind::TokenName,
                   MatcherKind::Datatype, MatcherKind::Annotation, MatcherKind::Instance,
                   MatcherKind::Children, MatcherKind::Leaves, MatcherKind::Parent,
                   MatcherKind::Sibling, MatcherKind::Path}) {
        CHECK(matcher_kind_from_name(matcher_kind_name(k)) == k);
    }
    CHECK_THROWS_AS((void)matcher_kind_from_name("bogus"), ParseError);
    CHECK(matcher_cost_rank(MatcherKind::Name) < matcher_cost_rank(MatcherKind::WeightedName));
    CHECK(matcher_cost_rank(MatcherKind::WeightedName) < matcher_cost_rank(MatcherKind::Path));
    CHECK(is_structural(MatcherKind::Path));
    CHECK_FALSE(is_structural(MatcherKind::Name));
}
