#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairfis/tree.hpp"

namespace fairfis {

enum class BiasKind { dp, eqop };
enum class MulticlassReduction { l1, max_class };

struct BiasMetric {
    BiasKind kind = BiasKind::dp;
    int positive_class = 1;  // EQOP conditioning class
    MulticlassReduction reduction = MulticlassReduction::l1;
};

// The two sibling nodes produced by one split, together with the identity of
// the split that produced them. Level bias is evaluated over the combined
// population of the pair.
struct LevelPair {
    int node_id = -1;        // internal node whose split produced this pair
    int parent_feature = -1; // feature that split was on
    double parent_weight = 0.0;
    NodeStats left;
    NodeStats right;

    std::int64_t population_n() const { return left.n + right.n; }
    std::int64_t population_group(int z_value) const { return left.group[z_value] + right.group[z_value]; }
    std::int64_t population_pos(int z_value, int positive_class) const {
        return left.pos_count(z_value, positive_class) + right.pos_count(z_value, positive_class);
    }
};

// One pair per internal node, in node-id order.
std::vector<LevelPair> collect_levels(const Tree& t);

// A bias value plus the degenerate-group convention flag: levels whose
// population lacks one protected group (or lacks positives in one group for
// EQOP) are defined to contribute zero bias.
struct BiasValue {
    double value = 0.0;
    bool degenerate = false;
};

double impurity_gini(std::span<const std::int64_t> class_counts);
double impurity_mse(std::span<const double> values);

BiasValue level_bias_dp_classification(const LevelPair& pair);
BiasValue level_bias_eqop_classification(const LevelPair& pair, int positive_class);
BiasValue level_bias_dp_regression(const LevelPair& pair);
BiasValue level_bias_eqop_regression(const LevelPair& pair, int positive_class);
BiasValue level_bias_dp_multiclass(const LevelPair& pair,
                                   MulticlassReduction reduction = MulticlassReduction::l1);

// Dispatch on the tree's task / class count; what every caller inside the
// importance computation uses.
BiasValue level_bias(const LevelPair& pair, const Tree& t, const BiasMetric& metric);

struct NodeContribution {
    int node_id = -1;
    int feature = -1;
    double weight = 0.0;
    double level_bias = 0.0;  // bias of the level containing the node
    double child_bias = 0.0;  // bias of the pair produced by the node's split
    bool level_degenerate = false;
    bool child_degenerate = false;
};

struct ImportanceScores {
    std::vector<double> raw_fis;
    std::vector<double> fis;
    std::vector<double> raw_fairfis;
    std::vector<double> fairfis;
    BiasMetric metric;
    std::vector<NodeContribution> contributions;
};

std::vector<double> fis_raw(const Tree& t);
std::vector<double> fairfis_raw(const Tree& t, const BiasMetric& metric,
                                std::vector<NodeContribution>* audit = nullptr);

// fis scaled to sum 1, fairfis scaled so the absolute values sum to 1; all-zero
// vectors pass through unchanged.
ImportanceScores normalize(ImportanceScores scores);

// Raw + normalized scores for one tree.
ImportanceScores tree_importance(const Tree& t, const BiasMetric& metric);

// Model-level bias of final hard predictions, Demographic Parity or Equality
// of Opportunity.
BiasValue model_bias(std::span<const double> predictions, const TargetVector& y,
                     std::span<const int> z, const BiasMetric& metric);

std::string scores_to_csv(const ImportanceScores& s, const std::vector<std::string>& feature_names);
std::string scores_to_json(const ImportanceScores& s, const std::vector<std::string>& feature_names);

}  // namespace fairfis
