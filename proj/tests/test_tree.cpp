#include <doctest.h>

#include <algorithm>
#include <set>

#include "fairfis/fairness.hpp"
#include "fairfis/tree.hpp"
#include "test_util.hpp"

using namespace fairfis;

namespace {

Dataset tiny_classification() {
    // 1 feature, perfectly separable at 2.5
    Dataset d;
    d.n = 4;
    d.p = 1;
    d.x = {1, 2, 3, 4};
    d.y = make_target({0, 0, 1, 1}, TaskKind::classification);
    d.z = {0, 1, 0, 1};
    d.feature_names = {"f0"};
    return d;
}

// brute-force split oracle: every candidate (feature, midpoint) scored from
// scratch, best by (gain, lower feature, lower threshold)
struct OracleSplit {
    double gain = -1;
    int feature = -1;
    double threshold = 0;
};

double gini_of(const std::vector<int>& labels, int k) {
    std::vector<std::int64_t> counts(k, 0);
    for (int l : labels) counts[l]++;
    return impurity_gini(counts);
}

OracleSplit oracle_best_split(const Dataset& d) {
    OracleSplit best;
    const int k = d.y.n_classes;
    for (int j = 0; j < d.p; ++j) {
        std::vector<double> values;
        for (std::int64_t i = 0; i < d.n; ++i) values.push_back(d.at(i, j));
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        for (std::int64_t s = 0; s + 1 < d.n; ++s) {
            if (sorted[s] == sorted[s + 1]) continue;
            double theta = sorted[s] + (sorted[s + 1] - sorted[s]) / 2.0;
            std::vector<int> left, right;
            for (std::int64_t i = 0; i < d.n; ++i)
                (values[i] <= theta ? left : right).push_back(d.y.label(i));
            std::vector<int> all(left);
            all.insert(all.end(), right.begin(), right.end());
            double gain = gini_of(all, k) -
                          (left.size() * gini_of(left, k) + right.size() * gini_of(right, k)) / d.n;
            if (gain > best.gain + 1e-15) best = {gain, j, theta};
        }
    }
    return best;
}

}  // namespace

TEST_CASE("fit_tree splits the separable fixture at the oracle threshold") {
    Dataset d = tiny_classification();
    OracleSplit oracle = oracle_best_split(d);
    CHECK(oracle.threshold == 2.5);

    Tree t = fit_tree(d, TaskKind::classification, {});
    REQUIRE(t.node_count() == 3);
    CHECK(t.root().feature == 0);
    CHECK(t.root().threshold == oracle.threshold);
    CHECK(t.nodes[t.root().left].stats.impurity == 0.0);
    CHECK(t.nodes[t.root().right].stats.impurity == 0.0);
}

TEST_CASE("constant features give a single-node tree") {
    Dataset d = tiny_classification();
    d.x = {5, 5, 5, 5};
    Tree t = fit_tree(d, TaskKind::classification, {});
    CHECK(t.node_count() == 1);
    CHECK(t.root().is_leaf());
    CHECK(collect_levels(t).empty());
}

TEST_CASE("fit_tree is deterministic under feature subsampling") {
    Rng rng(11);
    Dataset d = fairfis::testing::random_dataset(rng, 120, 6, TaskKind::classification);
    TreeConfig cfg;
    cfg.feature_subsample = 2;
    cfg.rng_seed = 99;
    Tree a = fit_tree(d, TaskKind::classification, cfg);
    Tree b = fit_tree(d, TaskKind::classification, cfg);
    CHECK(tree_to_json(a) == tree_to_json(b));
}

TEST_CASE("fit_tree rejects infeasible leaf sizes") {
    Dataset d = tiny_classification();
    TreeConfig cfg;
    cfg.min_samples_leaf = 3;
    CHECK_THROWS_AS(fit_tree(d, TaskKind::classification, cfg), std::invalid_argument);
}

TEST_CASE("predict follows majority labels, node means and routing") {
    Dataset d = tiny_classification();

    SUBCASE("single node majority") {
        d.y.values = {1, 1, 1, 0};
        d.x = {5, 5, 5, 5};
        Tree t = fit_tree(d, TaskKind::classification, {});
        CHECK(t.root().stats.proportions[1] == 0.75);
        auto pred = predict(t, d.features());
        CHECK(pred == std::vector<double>{1, 1, 1, 1});
    }
    SUBCASE("single node regression mean") {
        d.y = make_target({1.0, 2.0, 3.0, 4.0}, TaskKind::regression);
        d.x = {5, 5, 5, 5};
        Tree t = fit_tree(d, TaskKind::regression, {});
        CHECK(t.root().stats.mean == 2.5);
        CHECK(predict(t, d.features())[0] == 2.5);
    }
    SUBCASE("depth-1 routing") {
        Tree t = fit_tree(d, TaskKind::classification, {});
        std::vector<double> rows = {2.0, 3.0};
        auto pred = predict(t, MatrixView{rows.data(), 2, 1});
        CHECK(pred[0] == 0.0);
        CHECK(pred[1] == 1.0);
    }
    SUBCASE("column mismatch") {
        Tree t = fit_tree(d, TaskKind::classification, {});
        std::vector<double> rows = {1.0, 2.0};
        CHECK_THROWS_AS(predict(t, MatrixView{rows.data(), 1, 2}), std::invalid_argument);
    }
}

TEST_CASE("predict_proba returns leaf class mixes") {
    Dataset d = tiny_classification();
    d.x = {5, 5, 5, 5};

    SUBCASE("three positives of four") {
        d.y.values = {1, 1, 1, 0};
        Tree t = fit_tree(d, TaskKind::classification, {});
        auto proba = predict_proba(t, d.features());
        CHECK(proba[0] == std::vector<double>{0.25, 0.75});
    }
    SUBCASE("pure leaf") {
        d.y.values = {1, 1, 1, 1};
        d.y.n_classes = 2;  // keep the binary shape despite one class present
        Tree t = fit_tree(d, TaskKind::classification, {});
        CHECK(predict_proba(t, d.features())[0] == std::vector<double>{0.0, 1.0});
    }
    SUBCASE("multiclass counts (1,1,2)") {
        d.y = make_target({0, 1, 2, 2}, TaskKind::classification);
        Tree t = fit_tree(d, TaskKind::classification, {});
        CHECK(predict_proba(t, d.features())[0] == std::vector<double>{0.25, 0.25, 0.5});
    }
    SUBCASE("regression tree refuses") {
        d.y = make_target({1.0, 2.0, 3.0, 4.0}, TaskKind::regression);
        Tree t = fit_tree(d, TaskKind::regression, {});
        CHECK_THROWS_AS(predict_proba(t, d.features()), std::invalid_argument);
    }
}

TEST_CASE("collect_levels yields one pair per internal node") {
    Dataset d = tiny_classification();
    Tree depth1 = fit_tree(d, TaskKind::classification, {});
    auto pairs = collect_levels(depth1);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].population_n() == d.n);
    CHECK(pairs[0].left.n + pairs[0].right.n == d.n);
    CHECK(pairs[0].population_group(0) + pairs[0].population_group(1) == d.n);

    // alternating labels force a full binary tree with 3 internal nodes
    Dataset alt;
    alt.n = 4;
    alt.p = 1;
    alt.x = {0, 1, 2, 3};
    alt.y = make_target({0, 1, 0, 1}, TaskKind::classification);
    alt.z = {0, 1, 0, 1};
    alt.feature_names = {"a"};
    Tree t = fit_tree(alt, TaskKind::classification, {});
    int internal = 0;
    for (const auto& nd : t.nodes)
        if (!nd.is_leaf()) internal++;
    CHECK(internal == 3);
    CHECK(collect_levels(t).size() == 3);
}

TEST_CASE("random trees satisfy the structural invariants") {
    Rng rng(42);
    for (int rep = 0; rep < 25; ++rep) {
        TaskKind task = rep % 2 == 0 ? TaskKind::classification : TaskKind::regression;
        auto n = static_cast<std::int64_t>(20 + rng.below(120));
        int p = 2 + static_cast<int>(rng.below(4));
        Dataset d = fairfis::testing::random_dataset(rng, n, p, task);
        Tree t = fit_tree(d, task, {});

        auto parents = t.parents();
        int roots = 0;
        for (const auto& nd : t.nodes) {
            CHECK(nd.id == &nd - t.nodes.data());
            if (parents[nd.id] < 0) roots++;
            if (nd.is_leaf()) continue;
            const auto& l = t.nodes[nd.left].stats;
            const auto& r = t.nodes[nd.right].stats;
            CHECK(l.n + r.n == nd.stats.n);
            // strict weighted impurity decrease
            CHECK(nd.stats.weight * nd.stats.impurity - l.weight * l.impurity - r.weight * r.impurity >
                  1e-12);
            // fitted threshold is a midpoint of consecutive distinct values in the node
            std::set<double> values;
            auto members = fairfis::testing::route_members(t, d.features());
            for (auto i : members[nd.id]) values.insert(d.at(i, nd.feature));
            bool is_midpoint = false;
            for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
                double lo = *it, hi = *std::next(it);
                double mid = lo + (hi - lo) / 2.0;
                if (mid >= hi) mid = lo;
                if (mid == nd.threshold) is_midpoint = true;
            }
            CHECK(is_midpoint);
        }
        CHECK(roots == 1);

        // repeated prediction is byte-identical
        auto p1 = predict(t, d.features());
        auto p2 = predict(t, d.features());
        CHECK(p1 == p2);
    }
}

TEST_CASE("fully grown trees on distinct rows reach pure leaves") {
    Rng rng(5);
    Dataset d = fairfis::testing::random_dataset(rng, 60, 3, TaskKind::classification);
    // continuous gaussian features: rows already distinct almost surely
    Tree t = fit_tree(d, TaskKind::classification, {});
    for (const auto& nd : t.nodes)
        if (nd.is_leaf()) CHECK(nd.stats.impurity == 0.0);
}

TEST_CASE("tree json round-trips exactly") {
    Rng rng(13);
    for (TaskKind task : {TaskKind::classification, TaskKind::regression}) {
        Dataset d = fairfis::testing::random_dataset(rng, 50, 3, task);
        Tree t = fit_tree(d, task, {});
        std::string text = tree_to_json(t);
        Tree back = tree_from_json(text);
        CHECK(tree_to_json(back) == text);
        CHECK(predict(back, d.features()) == predict(t, d.features()));
        CHECK(fis_raw(back) == fis_raw(t));
    }
    CHECK_THROWS_AS(tree_from_json("{\"kind\":\"tree\""), std::exception);
}
