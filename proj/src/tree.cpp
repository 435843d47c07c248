#include "fairfis/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "fairfis/rng.hpp"
#include "model_json.hpp"

namespace fairfis {
namespace {

using json = nlohmann::ordered_json;

struct Trainer {
    const FitInputs& in;
    const TreeConfig& cfg;
    LossKind loss;
    int n_classes;
    int n_audit;
    Rng rng;
    std::vector<std::int64_t> order;   // sample indices, partitioned in place
    std::vector<TreeNode> nodes;

    // scratch
    std::vector<std::pair<double, std::int64_t>> sorted;
    std::vector<std::int64_t> class_counts;
    std::vector<int> feature_pool;

    Trainer(const FitInputs& inputs, const TreeConfig& config, int classes, int audit_classes)
        : in(inputs),
          cfg(config),
          loss(inputs.task == TaskKind::classification ? LossKind::gini : LossKind::mse),
          n_classes(classes),
          n_audit(audit_classes),
          rng(config.rng_seed),
          order(inputs.x.n) {
        std::iota(order.begin(), order.end(), 0);
    }

    // impurity * count, the unit every gain comparison uses
    double impurity_units(std::int64_t begin, std::int64_t end) const {
        const auto m = static_cast<double>(end - begin);
        if (loss == LossKind::gini) {
            std::vector<std::int64_t> counts(n_classes, 0);
            for (std::int64_t i = begin; i < end; ++i)
                counts[static_cast<int>(in.targets[order[i]])]++;
            double sq = 0;
            for (auto c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
            return m - sq / m;
        }
        double sum = 0, sumsq = 0;
        for (std::int64_t i = begin; i < end; ++i) {
            double t = in.targets[order[i]];
            sum += t;
            sumsq += t * t;
        }
        return std::max(0.0, sumsq - sum * sum / m);
    }

    NodeStats make_stats(std::int64_t begin, std::int64_t end) const {
        NodeStats s;
        s.n = end - begin;
        s.weight = static_cast<double>(s.n) / static_cast<double>(in.x.n);
        if (n_audit > 0) s.label_group.assign(n_audit, {0, 0});
        double sum = 0;
        std::vector<std::int64_t> counts(n_classes, 0);
        for (std::int64_t i = begin; i < end; ++i) {
            const std::int64_t row = order[i];
            s.group[in.z[row]]++;
            if (n_audit > 0) {
                int a = in.audit_labels.empty() ? static_cast<int>(in.targets[row]) : in.audit_labels[row];
                s.label_group[a][in.z[row]]++;
            }
            if (in.task == TaskKind::classification)
                counts[static_cast<int>(in.targets[row])]++;
            else
                sum += in.targets[row];
        }
        if (in.task == TaskKind::classification) {
            s.proportions.resize(n_classes);
            for (int k = 0; k < n_classes; ++k)
                s.proportions[k] = static_cast<double>(counts[k]) / static_cast<double>(s.n);
        } else {
            s.mean = sum / static_cast<double>(s.n);
        }
        s.impurity = impurity_units(begin, end) / static_cast<double>(s.n);
        return s;
    }

    bool is_pure(std::int64_t begin, std::int64_t end) const {
        const double first = in.targets[order[begin]];
        for (std::int64_t i = begin + 1; i < end; ++i)
            if (in.targets[order[i]] != first) return false;
        return true;
    }

    const std::vector<int>& candidate_features() {
        feature_pool.resize(in.x.p);
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        if (!cfg.feature_subsample) return feature_pool;
        int k = std::min(*cfg.feature_subsample, in.x.p);
        if (k <= 0 || k >= in.x.p) return feature_pool;
        // partial Fisher-Yates, then ascending so tie-breaking stays by index
        for (int i = 0; i < k; ++i) {
            auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(in.x.p - i)));
            std::swap(feature_pool[i], feature_pool[j]);
        }
        feature_pool.resize(k);
        std::sort(feature_pool.begin(), feature_pool.end());
        return feature_pool;
    }

    struct BestSplit {
        double gain_units = 0.0;
        int feature = -1;
        double threshold = 0.0;
        bool found = false;
    };

    BestSplit search(std::int64_t begin, std::int64_t end) {
        const std::int64_t m = end - begin;
        const double parent_units = impurity_units(begin, end);
        const int msl = cfg.min_samples_leaf;
        BestSplit best;

        for (int j : candidate_features()) {
            sorted.clear();
            for (std::int64_t i = begin; i < end; ++i)
                sorted.emplace_back(in.x(order[i], j), order[i]);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (sorted.front().first == sorted.back().first) continue;

            if (loss == LossKind::gini) {
                class_counts.assign(n_classes, 0);
                std::vector<std::int64_t> total(n_classes, 0);
                for (const auto& [v, row] : sorted) total[static_cast<int>(in.targets[row])]++;
                double left_sq = 0;
                double total_sq = 0;
                for (auto c : total) total_sq += static_cast<double>(c) * static_cast<double>(c);
                double right_sq = total_sq;
                for (std::int64_t i = 0; i < m - 1; ++i) {
                    const int k = static_cast<int>(in.targets[sorted[i].second]);
                    const auto c = static_cast<double>(class_counts[k]);
                    left_sq += 2 * c + 1;
                    const auto r = static_cast<double>(total[k] - class_counts[k]);
                    right_sq -= 2 * r - 1;
                    class_counts[k]++;
                    const std::int64_t nl = i + 1;
                    if (nl < msl || m - nl < msl) continue;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    const auto dl = static_cast<double>(nl);
                    const auto dr = static_cast<double>(m - nl);
                    const double gain = parent_units - (dl - left_sq / dl) - (dr - right_sq / dr);
                    consider(best, gain, j, sorted[i].first, sorted[i + 1].first);
                }
            } else {
                double total_sum = 0, total_sq = 0;
                for (const auto& [v, row] : sorted) {
                    double t = in.targets[row];
                    total_sum += t;
                    total_sq += t * t;
                }
                double left_sum = 0, left_sq = 0;
                for (std::int64_t i = 0; i < m - 1; ++i) {
                    double t = in.targets[sorted[i].second];
                    left_sum += t;
                    left_sq += t * t;
                    const std::int64_t nl = i + 1;
                    if (nl < msl || m - nl < msl) continue;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    const auto dl = static_cast<double>(nl);
                    const auto dr = static_cast<double>(m - nl);
                    const double left_units = left_sq - left_sum * left_sum / dl;
                    const double right_sum = total_sum - left_sum;
                    const double right_units = (total_sq - left_sq) - right_sum * right_sum / dr;
                    const double gain = parent_units - std::max(0.0, left_units) - std::max(0.0, right_units);
                    consider(best, gain, j, sorted[i].first, sorted[i + 1].first);
                }
            }
        }
        return best;
    }

    static void consider(BestSplit& best, double gain, int feature, double lo, double hi) {
        if (best.found && gain <= best.gain_units) return;
        double threshold = lo + (hi - lo) / 2.0;
        if (threshold >= hi) threshold = lo;  // keep routing identical to the scanned boundary
        best = {gain, feature, threshold, true};
    }

    int grow(std::int64_t begin, std::int64_t end, int depth) {
        const int id = static_cast<int>(nodes.size());
        TreeNode node;
        node.id = id;
        node.depth = depth;
        nodes.push_back(std::move(node));
        nodes[id].stats = make_stats(begin, end);
        const std::int64_t m = end - begin;

        const bool depth_capped = cfg.max_depth && depth >= *cfg.max_depth;
        if (depth_capped || m < cfg.min_samples_split || m < 2 * cfg.min_samples_leaf ||
            is_pure(begin, end))
            return id;

        BestSplit best = search(begin, end);
        // a split must strictly decrease the weighted impurity
        if (!best.found || best.gain_units / static_cast<double>(in.x.n) <= 1e-12) return id;

        // stable partition so growth is reproducible bit for bit
        std::vector<std::int64_t> left_rows, right_rows;
        left_rows.reserve(m);
        for (std::int64_t i = begin; i < end; ++i) {
            if (in.x(order[i], best.feature) <= best.threshold)
                left_rows.push_back(order[i]);
            else
                right_rows.push_back(order[i]);
        }
        std::copy(left_rows.begin(), left_rows.end(), order.begin() + begin);
        std::copy(right_rows.begin(), right_rows.end(), order.begin() + begin + left_rows.size());

        nodes[id].feature = best.feature;
        nodes[id].threshold = best.threshold;
        const auto split_at = begin + static_cast<std::int64_t>(left_rows.size());
        nodes[id].left = grow(begin, split_at, depth + 1);
        nodes[id].right = grow(split_at, end, depth + 1);
        return id;
    }
};

int infer_classes(std::span<const double> targets) {
    double max_label = 0;
    for (double v : targets) max_label = std::max(max_label, v);
    return static_cast<int>(max_label) + 1;
}

void check_rows(const Tree& t, MatrixView rows) {
    if (rows.p != t.trained_p)
        throw std::invalid_argument("expected " + std::to_string(t.trained_p) + " feature columns, got " +
                                    std::to_string(rows.p));
}

int leaf_for(const Tree& t, MatrixView rows, std::int64_t i) {
    int node = 0;
    while (!t.nodes[node].is_leaf()) {
        const TreeNode& nd = t.nodes[node];
        node = rows(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return node;
}

int argmax_class(const std::vector<double>& proportions) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(proportions.size()); ++k)
        if (proportions[k] > proportions[best]) best = k;
    return best;
}

}  // namespace

std::vector<int> Tree::parents() const {
    std::vector<int> parent(nodes.size(), -1);
    for (const TreeNode& nd : nodes) {
        if (nd.is_leaf()) continue;
        parent[nd.left] = nd.id;
        parent[nd.right] = nd.id;
    }
    return parent;
}

Tree fit_tree(const FitInputs& in, const TreeConfig& cfg) {
    if (in.x.n < 2) throw std::invalid_argument("need at least 2 samples to fit a tree");
    if (in.x.n < 2 * cfg.min_samples_leaf)
        throw std::invalid_argument("min_samples_leaf infeasible: n < 2 * min_samples_leaf");
    if (cfg.min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    if (cfg.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");

    int classes = 0;
    if (in.task == TaskKind::classification)
        classes = in.n_classes > 0 ? in.n_classes : std::max(2, infer_classes(in.targets));
    int audit = in.n_audit_classes;
    if (audit == 0 && in.audit_labels.empty() && in.task == TaskKind::classification) audit = classes;

    Trainer trainer(in, cfg, classes, audit);
    trainer.grow(0, in.x.n, 0);

    Tree t;
    t.nodes = std::move(trainer.nodes);
    t.task = in.task;
    t.loss = trainer.loss;
    t.trained_n = in.x.n;
    t.trained_p = in.x.p;
    t.n_classes = classes;
    t.n_audit_classes = audit;
    return t;
}

Tree fit_tree(const Dataset& d, TaskKind task, const TreeConfig& cfg) {
    auto report = validate_dataset(d, task);
    if (!report.ok()) throw std::runtime_error("invalid dataset: " + report.errors.front().message);
    FitInputs in;
    in.x = d.features();
    in.task = task;
    in.targets = d.y.values;
    in.z = d.z;
    if (task == TaskKind::classification) {
        in.n_audit_classes = d.y.n_classes;
        in.n_classes = d.y.n_classes;
    }
    return fit_tree(in, cfg);
}

std::vector<double> predict(const Tree& t, MatrixView rows) {
    check_rows(t, rows);
    std::vector<double> out(rows.n);
    for (std::int64_t i = 0; i < rows.n; ++i) {
        const NodeStats& s = t.nodes[leaf_for(t, rows, i)].stats;
        out[i] = t.task == TaskKind::classification ? argmax_class(s.proportions) : s.mean;
    }
    return out;
}

std::vector<std::vector<double>> predict_proba(const Tree& t, MatrixView rows) {
    if (t.task != TaskKind::classification)
        throw std::invalid_argument("predict_proba requires a classification tree");
    check_rows(t, rows);
    std::vector<std::vector<double>> out(rows.n);
    for (std::int64_t i = 0; i < rows.n; ++i)
        out[i] = t.nodes[leaf_for(t, rows, i)].stats.proportions;
    return out;
}

std::vector<int> apply(const Tree& t, MatrixView rows) {
    check_rows(t, rows);
    std::vector<int> out(rows.n);
    for (std::int64_t i = 0; i < rows.n; ++i) out[i] = leaf_for(t, rows, i);
    return out;
}

namespace {

json node_to_json(const TreeNode& nd, const Tree& t) {
    json j;
    j["id"] = nd.id;
    j["depth"] = nd.depth;
    if (nd.is_leaf()) {
        j["feature"] = nullptr;
        j["threshold"] = nullptr;
        j["left"] = nullptr;
        j["right"] = nullptr;
    } else {
        j["feature"] = nd.feature;
        j["threshold"] = nd.threshold;
        j["left"] = nd.left;
        j["right"] = nd.right;
    }
    j["n"] = nd.stats.n;
    json counts;
    counts["group"] = nd.stats.group;
    if (!nd.stats.label_group.empty()) counts["label_group"] = nd.stats.label_group;
    j["counts"] = counts;
    if (t.task == TaskKind::classification)
        j["value"] = nd.stats.proportions;
    else
        j["value"] = nd.stats.mean;
    j["impurity"] = nd.stats.impurity;
    return j;
}

TreeNode node_from_json(const json& j, const Tree& t) {
    TreeNode nd;
    nd.id = j.at("id").get<int>();
    nd.depth = j.at("depth").get<int>();
    if (!j.at("feature").is_null()) {
        nd.feature = j.at("feature").get<int>();
        nd.threshold = j.at("threshold").get<double>();
        nd.left = j.at("left").get<int>();
        nd.right = j.at("right").get<int>();
    }
    nd.stats.n = j.at("n").get<std::int64_t>();
    nd.stats.weight = static_cast<double>(nd.stats.n) / static_cast<double>(t.trained_n);
    const auto& counts = j.at("counts");
    nd.stats.group = counts.at("group").get<std::array<std::int64_t, 2>>();
    if (counts.contains("label_group"))
        nd.stats.label_group = counts.at("label_group").get<std::vector<std::array<std::int64_t, 2>>>();
    if (t.task == TaskKind::classification)
        nd.stats.proportions = j.at("value").get<std::vector<double>>();
    else
        nd.stats.mean = j.at("value").get<double>();
    nd.stats.impurity = j.at("impurity").get<double>();
    return nd;
}

}  // namespace

json tree_to_json_obj(const Tree& t) {
    json j;
    j["kind"] = "tree";
    j["task"] = t.task == TaskKind::classification ? "classification" : "regression";
    j["loss"] = t.loss == LossKind::gini ? "gini" : "mse";
    j["n"] = t.trained_n;
    j["p"] = t.trained_p;
    j["classes"] = t.n_classes;
    j["audit_classes"] = t.n_audit_classes;
    j["nodes"] = json::array();
    for (const TreeNode& nd : t.nodes) j["nodes"].push_back(node_to_json(nd, t));
    return j;
}

Tree tree_from_json_obj(const json& j) {
    Tree t;
    t.task = j.at("task").get<std::string>() == "classification" ? TaskKind::classification
                                                                 : TaskKind::regression;
    t.loss = j.at("loss").get<std::string>() == "gini" ? LossKind::gini : LossKind::mse;
    t.trained_n = j.at("n").get<std::int64_t>();
    t.trained_p = j.at("p").get<int>();
    t.n_classes = j.at("classes").get<int>();
    t.n_audit_classes = j.at("audit_classes").get<int>();
    for (const auto& nj : j.at("nodes")) t.nodes.push_back(node_from_json(nj, t));
    if (t.nodes.empty() || t.nodes[0].id != 0) throw std::runtime_error("corrupt tree model: missing root");
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        const TreeNode& nd = t.nodes[i];
        if (nd.id != static_cast<int>(i)) throw std::runtime_error("corrupt tree model: ids not 0..T-1");
        if (!nd.is_leaf() &&
            (nd.left <= nd.id || nd.right <= nd.id || nd.left >= static_cast<int>(t.nodes.size()) ||
             nd.right >= static_cast<int>(t.nodes.size())))
            throw std::runtime_error("corrupt tree model: bad child link");
    }
    return t;
}

std::string tree_to_json(const Tree& t) { return tree_to_json_obj(t).dump(2); }

Tree tree_from_json(const std::string& text) {
    json j = json::parse(text);
    return tree_from_json_obj(j);
}

}  // namespace fairfis
