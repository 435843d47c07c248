#include "fairfis/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "fairfis/rng.hpp"
#include "fairfis/util.hpp"
#include "model_json.hpp"

namespace fairfis {
namespace {

using json = nlohmann::ordered_json;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

int default_subsample(TaskKind task, int p) {
    if (task == TaskKind::classification)
        return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    return std::max(1, (p + 2) / 3);  // ceil(p / 3)
}

void require_valid(const Dataset& d, TaskKind task) {
    auto report = validate_dataset(d, task);
    if (!report.ok()) throw std::runtime_error("invalid dataset: " + report.errors.front().message);
}

}  // namespace

Ensemble fit_random_forest(const Dataset& d, TaskKind task, const ForestConfig& cfg) {
    if (cfg.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    require_valid(d, task);

    std::optional<int> subsample;
    if (!cfg.feature_subsample)
        subsample = default_subsample(task, d.p);
    else if (*cfg.feature_subsample > 0)
        subsample = *cfg.feature_subsample;  // 0 = all features

    Ensemble e;
    e.kind = EnsembleKind::random_forest;
    e.task = task;
    e.rng_seed = cfg.tree.rng_seed;
    e.n_classes = d.y.n_classes;
    e.trees.resize(cfg.n_trees);
    e.tree_weights.assign(cfg.n_trees, 1.0 / cfg.n_trees);

    parallel_for(cfg.n_trees, cfg.threads, [&](std::int64_t i) {
        TreeConfig member_cfg = cfg.tree;
        member_cfg.feature_subsample = subsample;
        member_cfg.rng_seed = mix_seed(cfg.tree.rng_seed, 2 * i + 1);

        FitInputs in;
        in.task = task;
        if (task == TaskKind::classification) {
            in.n_classes = d.y.n_classes;
            in.n_audit_classes = d.y.n_classes;
        }

        if (!cfg.bootstrap) {
            in.x = d.features();
            in.targets = d.y.values;
            in.z = d.z;
            e.trees[i] = fit_tree(in, member_cfg);
            return;
        }
        // bootstrap resample: n draws with replacement; member stats are
        // computed on this resampled view
        Rng boot(mix_seed(cfg.tree.rng_seed, 2 * i));
        std::vector<double> xb(d.n * d.p);
        std::vector<double> yb(d.n);
        std::vector<int> zb(d.n);
        for (std::int64_t r = 0; r < d.n; ++r) {
            auto src = static_cast<std::int64_t>(boot.below(static_cast<std::uint64_t>(d.n)));
            std::copy_n(d.x.begin() + src * d.p, d.p, xb.begin() + r * d.p);
            yb[r] = d.y.values[src];
            zb[r] = d.z[src];
        }
        in.x = MatrixView{xb.data(), d.n, d.p};
        in.targets = yb;
        in.z = zb;
        e.trees[i] = fit_tree(in, member_cfg);
    });
    return e;
}

Ensemble fit_gradient_boosting(const Dataset& d, TaskKind task, const BoostingConfig& cfg) {
    if (cfg.n_stages < 1) throw std::invalid_argument("n_stages must be >= 1");
    require_valid(d, task);
    if (task == TaskKind::classification && d.y.n_classes != 2)
        throw std::invalid_argument("gradient boosting supports binary classification or regression only");

    TreeConfig stage_cfg = cfg.tree;
    if (!stage_cfg.max_depth) stage_cfg.max_depth = 3;

    Ensemble e;
    e.kind = EnsembleKind::gradient_boosting;
    e.task = task;
    e.learning_rate = cfg.learning_rate;
    e.rng_seed = cfg.tree.rng_seed;
    e.n_classes = d.y.n_classes;
    e.tree_weights.assign(cfg.n_stages, 1.0 / cfg.n_stages);

    std::vector<int> audit_labels;
    if (task == TaskKind::classification) {
        audit_labels.resize(d.n);
        double mean = 0;
        for (std::int64_t i = 0; i < d.n; ++i) {
            audit_labels[i] = d.y.label(i);
            mean += d.y.values[i];
        }
        mean /= static_cast<double>(d.n);
        mean = std::clamp(mean, 1e-12, 1.0 - 1e-12);
        e.init_value = std::log(mean / (1.0 - mean));
    } else {
        double mean = 0;
        for (double v : d.y.values) mean += v;
        e.init_value = mean / static_cast<double>(d.n);
    }

    std::vector<double> score(d.n, e.init_value);
    std::vector<double> residual(d.n);
    for (int k = 0; k < cfg.n_stages; ++k) {
        for (std::int64_t i = 0; i < d.n; ++i) {
            residual[i] = task == TaskKind::classification ? d.y.values[i] - sigmoid(score[i])
                                                           : d.y.values[i] - score[i];
        }
        FitInputs in;
        in.x = d.features();
        in.task = TaskKind::regression;  // stages are least-squares trees over the gradient
        in.targets = residual;
        in.z = d.z;
        if (task == TaskKind::classification) {
            in.audit_labels = audit_labels;
            in.n_audit_classes = 2;
        }
        TreeConfig c = stage_cfg;
        c.rng_seed = mix_seed(cfg.tree.rng_seed, static_cast<std::uint64_t>(k));
        Tree stage = fit_tree(in, c);
        auto step = predict(stage, d.features());
        for (std::int64_t i = 0; i < d.n; ++i) score[i] += cfg.learning_rate * step[i];
        e.trees.push_back(std::move(stage));
    }
    return e;
}

std::vector<double> boosting_scores(const Ensemble& e, MatrixView rows) {
    if (e.kind != EnsembleKind::gradient_boosting)
        throw std::invalid_argument("boosting_scores requires a gradient boosting ensemble");
    std::vector<double> score(rows.n, e.init_value);
    for (const Tree& t : e.trees) {
        auto step = predict(t, rows);
        for (std::int64_t i = 0; i < rows.n; ++i) score[i] += e.learning_rate * step[i];
    }
    return score;
}

std::vector<double> predict_ensemble(const Ensemble& e, MatrixView rows) {
    if (e.trees.empty()) throw std::invalid_argument("empty ensemble");
    if (rows.p != e.trees.front().trained_p)
        throw std::invalid_argument("expected " + std::to_string(e.trees.front().trained_p) +
                                    " feature columns, got " + std::to_string(rows.p));

    if (e.kind == EnsembleKind::gradient_boosting) {
        auto score = boosting_scores(e, rows);
        if (e.task == TaskKind::regression) return score;
        std::vector<double> out(rows.n);
        for (std::int64_t i = 0; i < rows.n; ++i) out[i] = sigmoid(score[i]) > 0.5 ? 1.0 : 0.0;
        return out;
    }

    if (e.task == TaskKind::regression) {
        std::vector<double> out(rows.n, 0.0);
        for (const Tree& t : e.trees) {
            auto pred = predict(t, rows);
            for (std::int64_t i = 0; i < rows.n; ++i) out[i] += pred[i];
        }
        for (double& v : out) v /= static_cast<double>(e.trees.size());
        return out;
    }

    // majority vote, ties to the lower label
    const int k = std::max(2, e.n_classes);
    std::vector<int> votes(rows.n * k, 0);
    for (const Tree& t : e.trees) {
        auto pred = predict(t, rows);
        for (std::int64_t i = 0; i < rows.n; ++i) votes[i * k + static_cast<int>(pred[i])]++;
    }
    std::vector<double> out(rows.n);
    for (std::int64_t i = 0; i < rows.n; ++i) {
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (votes[i * k + c] > votes[i * k + best]) best = c;
        out[i] = best;
    }
    return out;
}

ImportanceScores aggregate_importance(const Ensemble& e, const BiasMetric& metric) {
    if (e.trees.empty()) throw std::invalid_argument("empty ensemble");
    const int p = e.trees.front().trained_p;
    ImportanceScores agg;
    agg.metric = metric;
    // raw_* hold the weighted average of the members' normalized vectors;
    // normalize() then rescales the aggregate itself
    agg.raw_fis.assign(p, 0.0);
    agg.raw_fairfis.assign(p, 0.0);
    std::vector<ImportanceScores> member(e.trees.size());
    parallel_for(static_cast<std::int64_t>(e.trees.size()), 1,
                 [&](std::int64_t i) { member[i] = tree_importance(e.trees[i], metric); });
    for (size_t i = 0; i < e.trees.size(); ++i) {
        for (int j = 0; j < p; ++j) {
            agg.raw_fis[j] += e.tree_weights[i] * member[i].fis[j];
            agg.raw_fairfis[j] += e.tree_weights[i] * member[i].fairfis[j];
        }
    }
    return normalize(std::move(agg));
}

std::string ensemble_to_json(const Ensemble& e) {
    json j;
    j["kind"] = e.kind == EnsembleKind::random_forest ? "random_forest" : "gradient_boosting";
    j["task"] = e.task == TaskKind::classification ? "classification" : "regression";
    json params;
    params["n_trees"] = e.trees.size();
    params["learning_rate"] = e.learning_rate;
    params["init_value"] = e.init_value;
    params["seed"] = e.rng_seed;
    params["classes"] = e.n_classes;
    j["params"] = params;
    j["tree_weights"] = e.tree_weights;
    j["trees"] = json::array();
    for (const Tree& t : e.trees) j["trees"].push_back(tree_to_json_obj(t));
    return j.dump(2);
}

Ensemble ensemble_from_json(const std::string& text) {
    json j = json::parse(text);
    Ensemble e;
    e.kind = j.at("kind").get<std::string>() == "random_forest" ? EnsembleKind::random_forest
                                                                : EnsembleKind::gradient_boosting;
    e.task = j.at("task").get<std::string>() == "classification" ? TaskKind::classification
                                                                 : TaskKind::regression;
    const auto& params = j.at("params");
    e.learning_rate = params.at("learning_rate").get<double>();
    e.init_value = params.at("init_value").get<double>();
    e.rng_seed = params.at("seed").get<std::uint64_t>();
    e.n_classes = params.at("classes").get<int>();
    e.tree_weights = j.at("tree_weights").get<std::vector<double>>();
    for (const auto& tj : j.at("trees")) e.trees.push_back(tree_from_json_obj(tj));
    if (e.trees.empty()) throw std::runtime_error("corrupt ensemble model: no trees");
    return e;
}

}  // namespace fairfis
