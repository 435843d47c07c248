#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairfis/dataset.hpp"
#include "fairfis/util.hpp"

namespace fairfis {

enum class LossKind { gini, mse };

// Per-node bookkeeping carried by every fitted tree. Group counts are always
// against the protected attribute z; label_group counts are against the audit
// labels (the original y even when the tree was fit to other targets, as for
// surrogates and boosting stages).
struct NodeStats {
    std::int64_t n = 0;
    double weight = 0.0;                                   // n / n_trained
    std::array<std::int64_t, 2> group = {0, 0};            // indexed by z
    std::vector<std::array<std::int64_t, 2>> label_group;  // [audit class][z]
    std::vector<double> proportions;                       // class mix (classification)
    double mean = 0.0;                                     // node mean (regression)
    double impurity = 0.0;

    std::int64_t pos_count(int z_value, int positive_class) const {
        if (positive_class < 0 || positive_class >= static_cast<int>(label_group.size())) return 0;
        return label_group[positive_class][z_value];
    }
};

struct TreeNode {
    int id = 0;
    int depth = 0;
    int feature = -1;  // split feature, -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    NodeStats stats;

    bool is_leaf() const { return left < 0; }
};

struct TreeConfig {
    std::optional<int> max_depth;           // absent = fully grown
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::optional<int> feature_subsample;   // candidate features per split
    std::uint64_t rng_seed = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // preorder, root at id 0
    TaskKind task = TaskKind::classification;
    LossKind loss = LossKind::gini;
    std::int64_t trained_n = 0;
    int trained_p = 0;
    int n_classes = 0;        // classification targets
    int n_audit_classes = 0;  // rows of NodeStats::label_group

    const TreeNode& root() const { return nodes.front(); }
    int node_count() const { return static_cast<int>(nodes.size()); }
    std::vector<int> parents() const;
};

// Lower-level fit entry shared by ensembles and surrogates, where the fitting
// targets differ from the labels the bias metrics condition on.
struct FitInputs {
    MatrixView x;
    TaskKind task = TaskKind::classification;
    std::span<const double> targets;      // class labels or real targets, length n
    std::span<const int> z;               // length n
    std::span<const int> audit_labels;    // empty = derive from targets (classification only)
    int n_audit_classes = 0;              // required when audit_labels given
    int n_classes = 0;                    // classification target classes; 0 = infer
};

Tree fit_tree(const Dataset& d, TaskKind task, const TreeConfig& cfg);
Tree fit_tree(const FitInputs& in, const TreeConfig& cfg);

std::vector<double> predict(const Tree& t, MatrixView rows);
std::vector<std::vector<double>> predict_proba(const Tree& t, MatrixView rows);

// Index of the leaf each row lands in.
std::vector<int> apply(const Tree& t, MatrixView rows);

std::string tree_to_json(const Tree& t);
Tree tree_from_json(const std::string& text);

}  // namespace fairfis
