#include "fairfis/surrogate.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace fairfis {

double fidelity(const Tree& t, MatrixView rows, std::span<const double> predictions) {
    if (static_cast<std::int64_t>(predictions.size()) != rows.n)
        throw std::invalid_argument("predictions/dataset length mismatch");
    auto mine = predict(t, rows);
    std::int64_t match = 0;
    for (std::int64_t i = 0; i < rows.n; ++i) {
        if (t.task == TaskKind::classification) {
            if (mine[i] == predictions[i]) ++match;
        } else if (std::abs(mine[i] - predictions[i]) <= 1e-9) {
            ++match;
        }
    }
    return static_cast<double>(match) / static_cast<double>(rows.n);
}

SurrogateReport fit_surrogate(const Dataset& d, std::span<const double> black_box_predictions,
                              TaskKind task, const BiasMetric& metric) {
    if (static_cast<std::int64_t>(black_box_predictions.size()) != d.n)
        throw std::runtime_error("predictions/dataset length mismatch");

    SurrogateReport report;
    std::vector<double> targets(black_box_predictions.begin(), black_box_predictions.end());
    for (double v : targets)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite black-box prediction");
    if (task == TaskKind::classification) {
        bool all_labels = true;
        bool all_unit = true;
        for (double v : targets) {
            if (v != std::floor(v) || v < 0) all_labels = false;
            if (v < 0 || v > 1) all_unit = false;
        }
        if (!all_labels) {
            // soft probabilities from a black box: accept for the binary case
            if (!all_unit)
                throw std::runtime_error("non-label predictions for classification (values outside "
                                         "{0,..,K-1} and not probabilities in [0,1])");
            for (double& v : targets) v = v > 0.5 ? 1.0 : 0.0;
            report.thresholded_soft_predictions = true;
        }
    }

    // fully grown tree fit to the black box's predictions; bias bookkeeping
    // stays on the dataset's original y and z
    FitInputs in;
    in.x = d.features();
    in.task = task;
    in.targets = targets;
    in.z = d.z;
    std::vector<int> audit;
    if (d.y.kind != TargetVector::Kind::continuous) {
        audit.resize(d.n);
        for (std::int64_t i = 0; i < d.n; ++i) audit[i] = d.y.label(i);
        in.audit_labels = audit;
        in.n_audit_classes = d.y.n_classes;
    }
    report.tree = fit_tree(in, TreeConfig{});
    report.fidelity = fidelity(report.tree, d.features(), targets);
    report.scores = tree_importance(report.tree, metric);

    report.has_truth_metrics = true;
    if (task == TaskKind::classification && d.y.kind != TargetVector::Kind::continuous) {
        std::int64_t correct = 0;
        for (std::int64_t i = 0; i < d.n; ++i)
            if (targets[i] == d.y.values[i]) ++correct;
        report.black_box_accuracy = static_cast<double>(correct) / static_cast<double>(d.n);
    } else {
        double mse = 0;
        for (std::int64_t i = 0; i < d.n; ++i) {
            double diff = targets[i] - d.y.values[i];
            mse += diff * diff;
        }
        report.black_box_accuracy = mse / static_cast<double>(d.n);
    }
    report.black_box_fairness = 1.0 - model_bias(targets, d.y, d.z, metric).value;
    return report;
}

std::string surrogate_report_to_json(const SurrogateReport& r,
                                     const std::vector<std::string>& feature_names) {
    nlohmann::ordered_json j;
    j["fidelity"] = r.fidelity;
    j["thresholded_soft_predictions"] = r.thresholded_soft_predictions;
    if (r.has_truth_metrics) {
        j["black_box_accuracy"] = r.black_box_accuracy;
        j["black_box_fairness"] = r.black_box_fairness;
    }
    j["scores"] = nlohmann::ordered_json::parse(scores_to_json(r.scores, feature_names));
    return j.dump(2);
}

}  // namespace fairfis
