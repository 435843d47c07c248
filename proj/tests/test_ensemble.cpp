#include <doctest.h>

#include <cmath>

#include "fairfis/ensemble.hpp"
#include "test_util.hpp"

using namespace fairfis;

namespace {

Dataset separable(Rng& rng, std::int64_t n) {
    Dataset d;
    d.n = n;
    d.p = 3;
    d.x.resize(n * 3);
    d.z.resize(n);
    d.feature_names = {"a", "b", "c"};
    std::vector<double> y(n);
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) d.x[i * 3 + j] = rng.normal();
        d.z[i] = rng.bernoulli(0.4) ? 1 : 0;
        y[i] = d.x[i * 3] > 0 ? 1.0 : 0.0;
    }
    y[0] = 0.0;
    y[1] = 1.0;
    d.y = make_target(y, TaskKind::classification);
    return d;
}

double train_accuracy(const std::vector<double>& pred, const Dataset& d) {
    std::int64_t ok = 0;
    for (std::int64_t i = 0; i < d.n; ++i)
        if (pred[i] == d.y.values[i]) ++ok;
    return static_cast<double>(ok) / d.n;
}

Tree constant_tree(double value, TaskKind task) {
    Tree t;
    t.task = task;
    t.loss = task == TaskKind::classification ? LossKind::gini : LossKind::mse;
    t.trained_n = 4;
    t.trained_p = 1;
    t.n_classes = task == TaskKind::classification ? 2 : 0;
    TreeNode root;
    root.stats.n = 4;
    root.stats.weight = 1.0;
    root.stats.group = {2, 2};
    if (task == TaskKind::classification)
        root.stats.proportions = {1.0 - value, value};
    else
        root.stats.mean = value;
    t.nodes.push_back(root);
    return t;
}

}  // namespace

TEST_CASE("degenerate forest equals a single tree") {
    Rng rng(8);
    Dataset d = fairfis::testing::random_dataset(rng, 80, 4, TaskKind::classification);
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    cfg.feature_subsample = 0;  // all features
    Ensemble e = fit_random_forest(d, TaskKind::classification, cfg);
    Tree direct = fit_tree(d, TaskKind::classification, {});
    CHECK(tree_to_json(e.trees[0]) == tree_to_json(direct));
    CHECK(predict_ensemble(e, d.features()) == predict(direct, d.features()));

    auto agg = aggregate_importance(e, {});
    auto single = tree_importance(direct, {});
    CHECK(agg.fis == single.fis);
    CHECK(agg.fairfis == single.fairfis);

    // several identical members aggregate to the same scores exactly
    cfg.n_trees = 3;
    Ensemble trio = fit_random_forest(d, TaskKind::classification, cfg);
    auto agg3 = aggregate_importance(trio, {});
    for (int j = 0; j < d.p; ++j) {
        CHECK(agg3.fis[j] == doctest::Approx(single.fis[j]).epsilon(1e-15));
        CHECK(agg3.fairfis[j] == doctest::Approx(single.fairfis[j]).epsilon(1e-15));
    }
}

TEST_CASE("forests are deterministic in the master seed") {
    Rng rng(9);
    Dataset d = fairfis::testing::random_dataset(rng, 60, 4, TaskKind::classification);
    ForestConfig cfg;
    cfg.n_trees = 7;
    cfg.tree.rng_seed = 1234;
    Ensemble a = fit_random_forest(d, TaskKind::classification, cfg);
    Ensemble b = fit_random_forest(d, TaskKind::classification, cfg);
    CHECK(ensemble_to_json(a) == ensemble_to_json(b));

    cfg.threads = 4;  // thread count must not change the result
    Ensemble c = fit_random_forest(d, TaskKind::classification, cfg);
    CHECK(ensemble_to_json(a) == ensemble_to_json(c));

    cfg.tree.rng_seed = 4321;
    Ensemble other = fit_random_forest(d, TaskKind::classification, cfg);
    CHECK(ensemble_to_json(a) != ensemble_to_json(other));
}

TEST_CASE("a forest keeps up with a single tree on separable data") {
    Rng rng(10);
    Dataset d = separable(rng, 400);
    Tree single = fit_tree(d, TaskKind::classification, {});
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.tree.rng_seed = 5;
    cfg.threads = 4;
    Ensemble forest = fit_random_forest(d, TaskKind::classification, cfg);
    double acc_forest = train_accuracy(predict_ensemble(forest, d.features()), d);
    double acc_single = train_accuracy(predict(single, d.features()), d);
    CHECK(acc_forest >= acc_single - 0.02);
}

TEST_CASE("majority vote breaks ties toward the lower label") {
    Ensemble e;
    e.kind = EnsembleKind::random_forest;
    e.task = TaskKind::classification;
    e.n_classes = 2;
    e.trees = {constant_tree(0.9, TaskKind::classification),
               constant_tree(0.8, TaskKind::classification),
               constant_tree(0.1, TaskKind::classification)};
    e.tree_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::vector<double> row = {0.0};
    CHECK(predict_ensemble(e, MatrixView{row.data(), 1, 1})[0] == 1.0);  // votes 1,1,0

    e.trees.push_back(constant_tree(0.2, TaskKind::classification));
    e.tree_weights.assign(4, 0.25);
    CHECK(predict_ensemble(e, MatrixView{row.data(), 1, 1})[0] == 0.0);  // 2-2 tie
}

TEST_CASE("boosting identities") {
    Rng rng(12);
    Dataset d = fairfis::testing::random_dataset(rng, 90, 3, TaskKind::regression);

    SUBCASE("one stage at lr 1 matches a depth-capped regression tree") {
        BoostingConfig cfg;
        cfg.n_stages = 1;
        cfg.learning_rate = 1.0;
        cfg.tree.max_depth = 4;
        Ensemble e = fit_gradient_boosting(d, TaskKind::regression, cfg);
        TreeConfig tc;
        tc.max_depth = 4;
        Tree direct = fit_tree(d, TaskKind::regression, tc);
        auto boosted = predict_ensemble(e, d.features());
        auto plain = predict(direct, d.features());
        for (std::int64_t i = 0; i < d.n; ++i)
            CHECK(boosted[i] == doctest::Approx(plain[i]).epsilon(1e-9));
    }
    SUBCASE("zero learning rate predicts the init everywhere") {
        BoostingConfig cfg;
        cfg.n_stages = 5;
        cfg.learning_rate = 0.0;
        Ensemble e = fit_gradient_boosting(d, TaskKind::regression, cfg);
        double mean = 0;
        for (double v : d.y.values) mean += v;
        mean /= d.n;
        for (double v : predict_ensemble(e, d.features()))
            CHECK(v == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("manual additivity") {
        Ensemble e;
        e.kind = EnsembleKind::gradient_boosting;
        e.task = TaskKind::regression;
        e.learning_rate = 1.0;
        e.init_value = 1.0;
        e.trees = {constant_tree(0.5, TaskKind::regression), constant_tree(0.25, TaskKind::regression)};
        e.tree_weights = {0.5, 0.5};
        std::vector<double> row = {0.0};
        CHECK(predict_ensemble(e, MatrixView{row.data(), 1, 1})[0] == 1.75);
    }
    SUBCASE("multiclass refused") {
        Dataset m = fairfis::testing::random_dataset(rng, 60, 3, TaskKind::classification, 3);
        CHECK_THROWS_AS(fit_gradient_boosting(m, TaskKind::classification, {}),
                        std::invalid_argument);
    }
}

TEST_CASE("boosting training loss is non-increasing") {
    Rng rng(14);

    SUBCASE("regression mse") {
        Dataset d = fairfis::testing::random_dataset(rng, 120, 3, TaskKind::regression);
        BoostingConfig cfg;
        cfg.n_stages = 30;
        Ensemble e = fit_gradient_boosting(d, TaskKind::regression, cfg);
        std::vector<double> f(d.n, e.init_value);
        double prev = std::numeric_limits<double>::infinity();
        for (const Tree& stage : e.trees) {
            auto step = predict(stage, d.features());
            for (std::int64_t i = 0; i < d.n; ++i) f[i] += e.learning_rate * step[i];
            double mse = 0;
            for (std::int64_t i = 0; i < d.n; ++i) mse += (d.y.values[i] - f[i]) * (d.y.values[i] - f[i]);
            CHECK(mse <= prev + 1e-9);
            prev = mse;
        }
    }
    SUBCASE("classification logistic loss") {
        Dataset d = fairfis::testing::random_dataset(rng, 120, 3, TaskKind::classification);
        BoostingConfig cfg;
        cfg.n_stages = 30;
        Ensemble e = fit_gradient_boosting(d, TaskKind::classification, cfg);
        std::vector<double> f(d.n, e.init_value);
        double prev = std::numeric_limits<double>::infinity();
        for (const Tree& stage : e.trees) {
            auto step = predict(stage, d.features());
            for (std::int64_t i = 0; i < d.n; ++i) f[i] += e.learning_rate * step[i];
            double loss = 0;
            for (std::int64_t i = 0; i < d.n; ++i)
                loss += std::log1p(std::exp(-(2 * d.y.values[i] - 1) * f[i]));
            CHECK(loss <= prev + 1e-9);
            prev = loss;
        }
    }
}

TEST_CASE("boosting members carry original-label audit counts") {
    Rng rng(15);
    Dataset d = fairfis::testing::random_dataset(rng, 100, 3, TaskKind::classification);
    BoostingConfig cfg;
    cfg.n_stages = 5;
    Ensemble e = fit_gradient_boosting(d, TaskKind::classification, cfg);
    for (const Tree& t : e.trees) {
        CHECK(t.task == TaskKind::regression);
        CHECK(t.n_audit_classes == 2);
        std::int64_t pos = t.root().stats.pos_count(0, 1) + t.root().stats.pos_count(1, 1);
        std::int64_t expected = 0;
        for (double v : d.y.values) expected += v == 1.0 ? 1 : 0;
        CHECK(pos == expected);
    }
    // EQOP on the boosting ensemble exercises the regression/positive-count path
    auto scores = aggregate_importance(e, BiasMetric{BiasKind::eqop, 1});
    double total = 0;
    for (double v : scores.fairfis) total += std::abs(v);
    CHECK((total == doctest::Approx(1.0).epsilon(1e-9) || total == 0.0));
}

TEST_CASE("aggregate_importance averages then renormalizes") {
    // two depth-1 trees splitting on different features: normalized fairfis
    // (-1, 0) and (0, -1), uniform weights -> (-0.5, -0.5)
    auto depth1 = [](int feature) {
        Dataset d;
        d.n = 6;
        d.p = 2;
        d.x.assign(12, 3.0);
        for (int i = 3; i < 6; ++i) d.x[i * 2 + feature] = 4.0;
        d.y = make_target({1, 1, 1, 0, 0, 0}, TaskKind::classification);
        d.z = {1, 1, 0, 1, 0, 0};
        d.feature_names = {"a", "b"};
        return fit_tree(d, TaskKind::classification, {});
    };
    Ensemble e;
    e.kind = EnsembleKind::random_forest;
    e.task = TaskKind::classification;
    e.n_classes = 2;
    e.trees = {depth1(0), depth1(1)};
    e.tree_weights = {0.5, 0.5};
    auto agg = aggregate_importance(e, {});
    CHECK(agg.fairfis[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(agg.fairfis[1] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(agg.fis[0] == doctest::Approx(0.5).epsilon(1e-12));

    // normalization invariants hold for the aggregate
    double sum_fis = 0, sum_abs = 0;
    for (double v : agg.fis) sum_fis += v;
    for (double v : agg.fairfis) sum_abs += std::abs(v);
    CHECK(sum_fis == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sum_abs == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ensemble json round-trips") {
    Rng rng(16);
    Dataset d = fairfis::testing::random_dataset(rng, 50, 3, TaskKind::classification);
    ForestConfig cfg;
    cfg.n_trees = 3;
    Ensemble e = fit_random_forest(d, TaskKind::classification, cfg);
    std::string text = ensemble_to_json(e);
    Ensemble back = ensemble_from_json(text);
    CHECK(ensemble_to_json(back) == text);
    CHECK(predict_ensemble(back, d.features()) == predict_ensemble(e, d.features()));
}
