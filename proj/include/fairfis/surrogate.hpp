#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairfis/fairness.hpp"
#include "fairfis/tree.hpp"

namespace fairfis {

// A fully grown tree fit to a black-box model's predictions, interpreted with
// the same importance machinery as a directly trained tree. Bias conditioning
// (group counts, EQOP positives) stays on the dataset's original y and z.
struct SurrogateReport {
    Tree tree;
    double fidelity = 0.0;  // training agreement between tree and black box
    ImportanceScores scores;
    bool has_truth_metrics = false;
    double black_box_accuracy = 0.0;  // fraction correct / MSE vs. true y
    double black_box_fairness = 0.0;  // 1 - model_bias of the predictions
    bool thresholded_soft_predictions = false;
};

SurrogateReport fit_surrogate(const Dataset& d, std::span<const double> black_box_predictions,
                              TaskKind task, const BiasMetric& metric = {});

// Exact-match fraction (classification) or fraction within 1e-9 (regression).
double fidelity(const Tree& t, MatrixView rows, std::span<const double> predictions);

std::string surrogate_report_to_json(const SurrogateReport& r, const std::vector<std::string>& feature_names);

}  // namespace fairfis
