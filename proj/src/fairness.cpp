#include "fairfis/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fairfis/util.hpp"

namespace fairfis {
namespace {

// Shared bilinear form behind every level-bias variant. With A_s and B_s the
// fractions of the level's z=1 / z=0 population sitting in side s, the bias of
// the pair is the reduction of
//   v = value_l * (A_l - B_l) + value_r * (A_r - B_r)
// where value is the node success rate (binary), class-mix vector (multiclass)
// or node mean (regression). Since A_l + A_r = B_l + B_r = 1, this collapses to
// (value_l - value_r) * (A_l - B_l); the factored form keeps the equal-values
// cancellation exact. Populations with a missing group are degenerate and
// contribute zero by convention.
BiasValue bilinear_bias(std::span<const double> value_l, std::span<const double> value_r,
                        std::int64_t l_z1, std::int64_t r_z1, std::int64_t l_z0, std::int64_t r_z0,
                        MulticlassReduction reduction) {
    const std::int64_t lev_z1 = l_z1 + r_z1;
    const std::int64_t lev_z0 = l_z0 + r_z0;
    if (lev_z1 == 0 || lev_z0 == 0) return {0.0, true};
    const double dl = static_cast<double>(l_z1) / lev_z1 - static_cast<double>(l_z0) / lev_z0;
    if (value_l.size() == 1) return {std::abs((value_l[0] - value_r[0]) * dl), false};
    double l1 = 0.0, worst = 0.0;
    for (size_t k = 0; k < value_l.size(); ++k) {
        double component = std::abs((value_l[k] - value_r[k]) * dl);
        l1 += component;
        worst = std::max(worst, component);
    }
    return {reduction == MulticlassReduction::l1 ? l1 : worst, false};
}

std::span<const double> scalar(const double& v) { return {&v, 1}; }

}  // namespace

double impurity_gini(std::span<const std::int64_t> class_counts) {
    std::int64_t n = 0;
    for (auto c : class_counts) n += c;
    if (n == 0) throw std::invalid_argument("impurity of an empty node");
    double sq = 0;
    for (auto c : class_counts) {
        double pi = static_cast<double>(c) / static_cast<double>(n);
        sq += pi * pi;
    }
    return 1.0 - sq;
}

double impurity_mse(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("impurity of an empty node");
    CompensatedSum sum;
    for (double v : values) sum.add(v);
    const double mean = sum.value() / static_cast<double>(values.size());
    CompensatedSum dev;
    for (double v : values) dev.add((v - mean) * (v - mean));
    return dev.value() / static_cast<double>(values.size());
}

std::vector<LevelPair> collect_levels(const Tree& t) {
    std::vector<LevelPair> out;
    for (const TreeNode& nd : t.nodes) {
        if (nd.is_leaf()) continue;
        LevelPair pair;
        pair.node_id = nd.id;
        pair.parent_feature = nd.feature;
        pair.parent_weight = nd.stats.weight;
        pair.left = t.nodes[nd.left].stats;
        pair.right = t.nodes[nd.right].stats;
        out.push_back(std::move(pair));
    }
    return out;
}

BiasValue level_bias_dp_classification(const LevelPair& pair) {
    const double pi_l = pair.left.proportions.at(1);
    const double pi_r = pair.right.proportions.at(1);
    return bilinear_bias(scalar(pi_l), scalar(pi_r), pair.left.group[1], pair.right.group[1],
                         pair.left.group[0], pair.right.group[0], MulticlassReduction::l1);
}

BiasValue level_bias_eqop_classification(const LevelPair& pair, int positive_class) {
    const double pi_l = pair.left.proportions.at(1);
    const double pi_r = pair.right.proportions.at(1);
    return bilinear_bias(scalar(pi_l), scalar(pi_r), pair.left.pos_count(1, positive_class),
                         pair.right.pos_count(1, positive_class), pair.left.pos_count(0, positive_class),
                         pair.right.pos_count(0, positive_class), MulticlassReduction::l1);
}

BiasValue level_bias_dp_regression(const LevelPair& pair) {
    return bilinear_bias(scalar(pair.left.mean), scalar(pair.right.mean), pair.left.group[1],
                         pair.right.group[1], pair.left.group[0], pair.right.group[0],
                         MulticlassReduction::l1);
}

BiasValue level_bias_eqop_regression(const LevelPair& pair, int positive_class) {
    return bilinear_bias(scalar(pair.left.mean), scalar(pair.right.mean),
                         pair.left.pos_count(1, positive_class), pair.right.pos_count(1, positive_class),
                         pair.left.pos_count(0, positive_class), pair.right.pos_count(0, positive_class),
                         MulticlassReduction::l1);
}

BiasValue level_bias_dp_multiclass(const LevelPair& pair, MulticlassReduction reduction) {
    return bilinear_bias(pair.left.proportions, pair.right.proportions, pair.left.group[1],
                         pair.right.group[1], pair.left.group[0], pair.right.group[0], reduction);
}

BiasValue level_bias(const LevelPair& pair, const Tree& t, const BiasMetric& metric) {
    if (t.task == TaskKind::regression) {
        if (metric.kind == BiasKind::dp) return level_bias_dp_regression(pair);
        if (t.n_audit_classes == 0)
            throw std::invalid_argument("EQOP requires classification labels");
        return level_bias_eqop_regression(pair, metric.positive_class);
    }
    if (t.n_classes > 2) {
        if (metric.kind == BiasKind::dp) return level_bias_dp_multiclass(pair, metric.reduction);
        return bilinear_bias(pair.left.proportions, pair.right.proportions,
                             pair.left.pos_count(1, metric.positive_class),
                             pair.right.pos_count(1, metric.positive_class),
                             pair.left.pos_count(0, metric.positive_class),
                             pair.right.pos_count(0, metric.positive_class), metric.reduction);
    }
    return metric.kind == BiasKind::dp ? level_bias_dp_classification(pair)
                                       : level_bias_eqop_classification(pair, metric.positive_class);
}

std::vector<double> fis_raw(const Tree& t) {
    std::vector<double> out(t.trained_p, 0.0);
    for (const TreeNode& nd : t.nodes) {
        if (nd.is_leaf()) continue;
        const NodeStats& l = t.nodes[nd.left].stats;
        const NodeStats& r = t.nodes[nd.right].stats;
        out[nd.feature] +=
            nd.stats.weight * nd.stats.impurity - l.weight * l.impurity - r.weight * r.impurity;
    }
    return out;
}

std::vector<double> fairfis_raw(const Tree& t, const BiasMetric& metric,
                                std::vector<NodeContribution>* audit) {
    if (metric.kind == BiasKind::eqop && t.task == TaskKind::regression && t.n_audit_classes == 0)
        throw std::invalid_argument("EQOP requires classification labels");

    std::vector<double> out(t.trained_p, 0.0);
    auto levels = collect_levels(t);
    if (levels.empty()) return out;

    // bias of each internal node's own pair, indexed by node id
    std::vector<BiasValue> pair_bias(t.nodes.size());
    for (const LevelPair& pair : levels) pair_bias[pair.node_id] = level_bias(pair, t, metric);
    auto parents = t.parents();

    for (const TreeNode& nd : t.nodes) {
        if (nd.is_leaf()) continue;
        // the level containing nd is the pair produced by its parent's split;
        // the root's level is the constant model, bias zero
        BiasValue level = nd.id == 0 ? BiasValue{0.0, false} : pair_bias[parents[nd.id]];
        const BiasValue& child = pair_bias[nd.id];
        // a split whose level lacks one group (or its positives, for EQOP)
        // carries no bias information: no term, only an audit record
        if (!child.degenerate) out[nd.feature] += nd.stats.weight * (level.value - child.value);
        if (audit)
            audit->push_back({nd.id, nd.feature, nd.stats.weight, level.value, child.value,
                              level.degenerate, child.degenerate});
    }
    return out;
}

ImportanceScores normalize(ImportanceScores scores) {
    CompensatedSum fis_sum;
    for (double v : scores.raw_fis) fis_sum.add(v);
    scores.fis = scores.raw_fis;
    if (fis_sum.value() > 0)
        for (double& v : scores.fis) v /= fis_sum.value();

    CompensatedSum fair_sum;
    for (double v : scores.raw_fairfis) fair_sum.add(std::abs(v));
    scores.fairfis = scores.raw_fairfis;
    if (fair_sum.value() > 0)
        for (double& v : scores.fairfis) v /= fair_sum.value();
    return scores;
}

ImportanceScores tree_importance(const Tree& t, const BiasMetric& metric) {
    ImportanceScores s;
    s.metric = metric;
    s.raw_fis = fis_raw(t);
    s.raw_fairfis = fairfis_raw(t, metric, &s.contributions);
    return normalize(std::move(s));
}

BiasValue model_bias(std::span<const double> predictions, const TargetVector& y,
                     std::span<const int> z, const BiasMetric& metric) {
    if (predictions.size() != y.values.size() || predictions.size() != z.size())
        throw std::invalid_argument("predictions/dataset length mismatch");
    if (metric.kind == BiasKind::eqop && y.kind == TargetVector::Kind::continuous)
        throw std::invalid_argument("EQOP requires classification");

    CompensatedSum num[2];
    std::int64_t count[2] = {0, 0};
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (metric.kind == BiasKind::eqop) {
            if (y.label(static_cast<std::int64_t>(i)) != metric.positive_class) continue;
            num[z[i]].add(predictions[i] == metric.positive_class ? 1.0 : 0.0);
        } else {
            num[z[i]].add(predictions[i]);
        }
        count[z[i]]++;
    }
    if (count[0] == 0 || count[1] == 0) return {0.0, true};
    return {std::abs(num[1].value() / count[1] - num[0].value() / count[0]), false};
}

std::string scores_to_csv(const ImportanceScores& s, const std::vector<std::string>& feature_names) {
    std::ostringstream out;
    out << "feature,fis,fairfis\n";
    for (size_t j = 0; j < s.fis.size(); ++j)
        out << feature_names[j] << "," << format_double(s.fis[j]) << "," << format_double(s.fairfis[j])
            << "\n";
    return out.str();
}

std::string scores_to_json(const ImportanceScores& s, const std::vector<std::string>& feature_names) {
    nlohmann::ordered_json j;
    j["metric"] = s.metric.kind == BiasKind::dp ? "dp" : "eqop";
    if (s.metric.kind == BiasKind::eqop) j["positive_class"] = s.metric.positive_class;
    j["features"] = feature_names;
    j["fis"] = s.fis;
    j["fairfis"] = s.fairfis;
    j["raw_fis"] = s.raw_fis;
    j["raw_fairfis"] = s.raw_fairfis;
    j["per_node"] = nlohmann::ordered_json::array();
    for (const NodeContribution& c : s.contributions) {
        nlohmann::ordered_json cj;
        cj["node"] = c.node_id;
        cj["feature"] = c.feature;
        cj["weight"] = c.weight;
        cj["level_bias"] = c.level_bias;
        cj["child_bias"] = c.child_bias;
        cj["level_degenerate"] = c.level_degenerate;
        cj["child_degenerate"] = c.child_degenerate;
        j["per_node"].push_back(cj);
    }
    return j.dump(2);
}

}  // namespace fairfis
