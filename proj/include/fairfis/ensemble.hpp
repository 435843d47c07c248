#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairfis/fairness.hpp"
#include "fairfis/tree.hpp"

namespace fairfis {

enum class EnsembleKind { random_forest, gradient_boosting };

struct Ensemble {
    EnsembleKind kind = EnsembleKind::random_forest;
    TaskKind task = TaskKind::classification;
    std::vector<Tree> trees;
    std::vector<double> tree_weights;  // nonnegative, sums to 1
    double learning_rate = 0.1;        // boosting
    double init_value = 0.0;           // boosting base score (mean or log-odds)
    std::uint64_t rng_seed = 0;
    int n_classes = 0;
};

struct ForestConfig {
    int n_trees = 100;
    bool bootstrap = true;
    // Candidate features per split: unset = task default (floor sqrt(p) for
    // classification, ceil(p/3) for regression); 0 = all features.
    std::optional<int> feature_subsample;
    TreeConfig tree;
    int threads = 1;
};

struct BoostingConfig {
    int n_stages = 100;
    double learning_rate = 0.1;
    TreeConfig tree;  // max_depth defaults to 3 when unset
};

Ensemble fit_random_forest(const Dataset& d, TaskKind task, const ForestConfig& cfg);
Ensemble fit_gradient_boosting(const Dataset& d, TaskKind task, const BoostingConfig& cfg);

std::vector<double> predict_ensemble(const Ensemble& e, MatrixView rows);

// Raw boosting scores before the sigmoid/threshold (regression: the prediction
// itself). Exposed for loss monitoring.
std::vector<double> boosting_scores(const Ensemble& e, MatrixView rows);

// Weight-averaged per-tree normalized scores, renormalized.
ImportanceScores aggregate_importance(const Ensemble& e, const BiasMetric& metric);

std::string ensemble_to_json(const Ensemble& e);
Ensemble ensemble_from_json(const std::string& text);

}  // namespace fairfis
