#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairfis/dataset.hpp"
#include "fairfis/ensemble.hpp"
#include "fairfis/fairness.hpp"

namespace fairfis {

enum class Scenario { linear, additive_sin, interactions };
enum class SigmaKind { identity, ar_precision };

// Synthetic design: four contiguous feature groups; G1 and G2 shifted with the
// protected attribute, G1 and G3 carrying signal, G4 pure noise.
struct SimulationSpec {
    Scenario scenario = Scenario::linear;
    TaskKind task = TaskKind::classification;
    std::int64_t n = 1000;
    int p = 12;
    double pi_z = 0.2;      // Bernoulli rate of z
    double alpha = 2.0;     // mean shift on G1 and G2 for z = 1 rows
    double beta = 1.0;      // signal coefficient on G1 and G3
    double beta0 = 0.0;
    double gamma = 1.0;     // interaction coefficient on designated pairs
    SigmaKind sigma = SigmaKind::identity;
    double ar_coefficient = 0.5;  // precision off-diagonal for ar_precision
    std::vector<int> group_sizes; // 4 contiguous blocks summing to p
    std::uint64_t seed = 0;

    // Task defaults from the reference designs: classification alpha 2 beta 1,
    // regression alpha 0.4 beta 3; equal group blocks (p divisible by 4).
    static SimulationSpec defaults(Scenario scenario, TaskKind task, std::int64_t n, int p,
                                   std::uint64_t seed);
    // Large-p layout: 5 features in each of G1..G3, the rest noise.
    static SimulationSpec large_p(Scenario scenario, TaskKind task, std::int64_t n, int p,
                                  std::uint64_t seed);

    int group_of(int j) const;  // 1..4
    bool shifted(int j) const { int g = group_of(j); return g == 1 || g == 2; }
    bool signal(int j) const { int g = group_of(j); return g == 1 || g == 3; }
    // First two features of each group carry the pairwise interactions.
    std::vector<int> interaction_features() const;
    void check() const;  // throws on an invalid spec
};

struct Design {
    std::vector<double> x;  // row-major n * p
    std::vector<int> z;
};

Design gen_design(const SimulationSpec& spec);
double scenario_f(const SimulationSpec& spec, std::span<const double> x_row);
TargetVector gen_response(const SimulationSpec& spec, std::span<const double> f_values);

// Full draw: design + response packaged as a Dataset with names x1..xp.
Dataset gen_dataset(const SimulationSpec& spec);

enum class ModelKind { tree, forest, boosting };

struct ModelConfig {
    ModelKind kind = ModelKind::tree;
    TreeConfig tree;
    ForestConfig forest;
    BoostingConfig boosting;
};

struct ReplicateSummary {
    std::vector<std::string> feature_names;
    std::vector<int> feature_group;  // 1..4
    std::vector<double> mean_fis, sd_fis;
    std::vector<double> mean_fairfis, sd_fairfis;
    std::array<double, 4> group_mean_fis{};      // G1..G4 means of mean_fis
    std::array<double, 4> group_mean_fairfis{};
    int n_reps = 0;
};

// Trains the model on n_reps fresh draws (seeds derived from spec.seed) and
// aggregates the normalized scores.
ReplicateSummary run_replicates(const SimulationSpec& spec, const ModelConfig& model,
                                const BiasMetric& metric, int n_reps, int threads = 1);

std::string replicate_summary_to_csv(const ReplicateSummary& s);
std::string simulation_spec_to_json(const SimulationSpec& spec);

}  // namespace fairfis
