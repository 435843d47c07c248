#include "fairfis/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fairfis/rng.hpp"
#include "fairfis/surrogate.hpp"

namespace fairfis {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Cholesky factor of the tridiagonal precision matrix (unit diagonal,
// `c` off-diagonal): lower bidiagonal, diag d, subdiagonal s.
struct PrecisionCholesky {
    std::vector<double> d;
    std::vector<double> s;

    PrecisionCholesky(int p, double c) : d(p), s(p > 0 ? p - 1 : 0) {
        d[0] = 1.0;
        for (int j = 0; j + 1 < p; ++j) {
            s[j] = c / d[j];
            const double rem = 1.0 - s[j] * s[j];
            if (rem <= 0.0)
                throw std::invalid_argument("ar precision matrix is not positive definite");
            d[j + 1] = std::sqrt(rem);
        }
    }

    // x = L^-T e gives x ~ N(0, Q^-1) for e ~ N(0, I)
    void correlate(std::span<double> e) const {
        const int p = static_cast<int>(d.size());
        e[p - 1] /= d[p - 1];
        for (int j = p - 2; j >= 0; --j) e[j] = (e[j] - s[j] * e[j + 1]) / d[j];
    }
};

}  // namespace

SimulationSpec SimulationSpec::defaults(Scenario scenario, TaskKind task, std::int64_t n, int p,
                                        std::uint64_t seed) {
    SimulationSpec spec;
    spec.scenario = scenario;
    spec.task = task;
    spec.n = n;
    spec.p = p;
    spec.seed = seed;
    spec.alpha = task == TaskKind::classification ? 2.0 : 0.4;
    spec.beta = task == TaskKind::classification ? 1.0 : 3.0;
    if (p % 4 != 0) throw std::invalid_argument("p must be divisible by 4 for equal group blocks");
    spec.group_sizes = {p / 4, p / 4, p / 4, p / 4};
    spec.check();
    return spec;
}

SimulationSpec SimulationSpec::large_p(Scenario scenario, TaskKind task, std::int64_t n, int p,
                                       std::uint64_t seed) {
    if (p < 16) throw std::invalid_argument("large-p layout needs p >= 16");
    SimulationSpec spec;
    spec.scenario = scenario;
    spec.task = task;
    spec.n = n;
    spec.p = p;
    spec.seed = seed;
    spec.alpha = task == TaskKind::classification ? 2.0 : 0.4;
    spec.beta = task == TaskKind::classification ? 1.0 : 3.0;
    spec.group_sizes = {5, 5, 5, p - 15};
    spec.check();
    return spec;
}

void SimulationSpec::check() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (!(pi_z > 0.0 && pi_z < 1.0)) throw std::invalid_argument("pi_z must be in (0,1)");
    if (group_sizes.size() != 4) throw std::invalid_argument("group layout needs 4 blocks");
    int total = 0;
    for (int g : group_sizes) {
        if (g < 1) throw std::invalid_argument("every feature group must be nonempty");
        total += g;
    }
    if (total != p) throw std::invalid_argument("group sizes must sum to p");
    if (sigma == SigmaKind::ar_precision) PrecisionCholesky(p, ar_coefficient);  // positive definite?
}

int SimulationSpec::group_of(int j) const {
    int offset = 0;
    for (int g = 0; g < 4; ++g) {
        offset += group_sizes[g];
        if (j < offset) return g + 1;
    }
    throw std::out_of_range("feature index outside the group layout");
}

std::vector<int> SimulationSpec::interaction_features() const {
    std::vector<int> out;
    int offset = 0;
    for (int g = 0; g < 4; ++g) {
        for (int k = 0; k < std::min(2, group_sizes[g]); ++k) out.push_back(offset + k);
        offset += group_sizes[g];
    }
    return out;
}

Design gen_design(const SimulationSpec& spec) {
    spec.check();
    Rng rng(mix_seed(spec.seed, 0));
    Design design;
    design.z.resize(spec.n);
    for (std::int64_t i = 0; i < spec.n; ++i) design.z[i] = rng.bernoulli(spec.pi_z) ? 1 : 0;

    std::optional<PrecisionCholesky> chol;
    if (spec.sigma == SigmaKind::ar_precision) chol.emplace(spec.p, spec.ar_coefficient);

    design.x.resize(spec.n * spec.p);
    std::vector<double> row(spec.p);
    for (std::int64_t i = 0; i < spec.n; ++i) {
        for (int j = 0; j < spec.p; ++j) row[j] = rng.normal();
        if (chol) chol->correlate(row);
        for (int j = 0; j < spec.p; ++j) {
            double shift = spec.shifted(j) && design.z[i] == 1 ? spec.alpha : 0.0;
            design.x[i * spec.p + j] = row[j] + shift;
        }
    }
    return design;
}

double scenario_f(const SimulationSpec& spec, std::span<const double> x_row) {
    if (static_cast<int>(x_row.size()) != spec.p)
        throw std::invalid_argument("row length does not match p");
    double f = spec.beta0;
    for (int j = 0; j < spec.p; ++j) {
        if (!spec.signal(j)) continue;
        f += spec.beta * (spec.scenario == Scenario::additive_sin ? std::sin(x_row[j]) : x_row[j]);
    }
    if (spec.scenario == Scenario::interactions) {
        auto designated = spec.interaction_features();
        for (size_t a = 0; a < designated.size(); ++a)
            for (size_t b = a + 1; b < designated.size(); ++b)
                f += spec.gamma * std::sin(x_row[designated[a]] * x_row[designated[b]]);
    }
    return f;
}

TargetVector gen_response(const SimulationSpec& spec, std::span<const double> f_values) {
    if (static_cast<std::int64_t>(f_values.size()) != spec.n)
        throw std::invalid_argument("f_values length does not match n");
    Rng rng(mix_seed(spec.seed, 1));
    TargetVector y;
    y.values.resize(spec.n);
    if (spec.task == TaskKind::regression) {
        y.kind = TargetVector::Kind::continuous;
        for (std::int64_t i = 0; i < spec.n; ++i) y.values[i] = f_values[i] + rng.normal();
    } else {
        y.kind = TargetVector::Kind::binary;
        y.n_classes = 2;
        for (std::int64_t i = 0; i < spec.n; ++i)
            y.values[i] = rng.bernoulli(sigmoid(f_values[i])) ? 1.0 : 0.0;
    }
    return y;
}

Dataset gen_dataset(const SimulationSpec& spec) {
    Design design = gen_design(spec);
    std::vector<double> f(spec.n);
    for (std::int64_t i = 0; i < spec.n; ++i)
        f[i] = scenario_f(spec, {design.x.data() + i * spec.p, static_cast<size_t>(spec.p)});
    Dataset d;
    d.x = std::move(design.x);
    d.z = std::move(design.z);
    d.y = gen_response(spec, f);
    d.n = spec.n;
    d.p = spec.p;
    for (int j = 0; j < spec.p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
    return d;
}

ReplicateSummary run_replicates(const SimulationSpec& spec, const ModelConfig& model,
                                const BiasMetric& metric, int n_reps, int threads) {
    if (n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    spec.check();

    std::vector<std::vector<double>> fis(n_reps), fairfis(n_reps);
    parallel_for(n_reps, threads, [&](std::int64_t r) {
        SimulationSpec rep_spec = spec;
        rep_spec.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(r));
        Dataset d = gen_dataset(rep_spec);
        const std::uint64_t model_seed = mix_seed(rep_spec.seed, 2);
        ImportanceScores scores;
        if (model.kind == ModelKind::tree) {
            TreeConfig cfg = model.tree;
            cfg.rng_seed = model_seed;
            scores = tree_importance(fit_tree(d, spec.task, cfg), metric);
        } else if (model.kind == ModelKind::forest) {
            ForestConfig cfg = model.forest;
            cfg.tree.rng_seed = model_seed;
            scores = aggregate_importance(fit_random_forest(d, spec.task, cfg), metric);
        } else {
            BoostingConfig cfg = model.boosting;
            cfg.tree.rng_seed = model_seed;
            scores = aggregate_importance(fit_gradient_boosting(d, spec.task, cfg), metric);
        }
        fis[r] = std::move(scores.fis);
        fairfis[r] = std::move(scores.fairfis);
    });

    ReplicateSummary out;
    out.n_reps = n_reps;
    out.mean_fis.resize(spec.p);
    out.sd_fis.resize(spec.p);
    out.mean_fairfis.resize(spec.p);
    out.sd_fairfis.resize(spec.p);
    for (int j = 0; j < spec.p; ++j) {
        out.feature_names.push_back("x" + std::to_string(j + 1));
        out.feature_group.push_back(spec.group_of(j));
    }

    auto aggregate = [&](const std::vector<std::vector<double>>& values, std::vector<double>& mean,
                         std::vector<double>& sd) {
        for (int j = 0; j < spec.p; ++j) {
            CompensatedSum sum;
            for (int r = 0; r < n_reps; ++r) sum.add(values[r][j]);
            mean[j] = sum.value() / n_reps;
            if (n_reps > 1) {
                CompensatedSum dev;
                for (int r = 0; r < n_reps; ++r)
                    dev.add((values[r][j] - mean[j]) * (values[r][j] - mean[j]));
                sd[j] = std::sqrt(dev.value() / (n_reps - 1));
            }
        }
    };
    aggregate(fis, out.mean_fis, out.sd_fis);
    aggregate(fairfis, out.mean_fairfis, out.sd_fairfis);

    std::array<int, 4> members{};
    for (int j = 0; j < spec.p; ++j) {
        const int g = out.feature_group[j] - 1;
        out.group_mean_fis[g] += out.mean_fis[j];
        out.group_mean_fairfis[g] += out.mean_fairfis[j];
        members[g]++;
    }
    for (int g = 0; g < 4; ++g) {
        if (members[g] == 0) continue;
        out.group_mean_fis[g] /= members[g];
        out.group_mean_fairfis[g] /= members[g];
    }
    return out;
}

std::string replicate_summary_to_csv(const ReplicateSummary& s) {
    std::ostringstream out;
    out << "feature,group,mean_fis,sd_fis,mean_fairfis,sd_fairfis\n";
    for (size_t j = 0; j < s.feature_names.size(); ++j) {
        out << s.feature_names[j] << ",G" << s.feature_group[j] << "," << format_double(s.mean_fis[j])
            << "," << format_double(s.sd_fis[j]) << "," << format_double(s.mean_fairfis[j]) << ","
            << format_double(s.sd_fairfis[j]) << "\n";
    }
    return out.str();
}

std::string simulation_spec_to_json(const SimulationSpec& spec) {
    nlohmann::ordered_json j;
    j["scenario"] = spec.scenario == Scenario::linear
                        ? "linear"
                        : (spec.scenario == Scenario::additive_sin ? "additive_sin" : "interactions");
    j["task"] = spec.task == TaskKind::classification ? "classification" : "regression";
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["pi_z"] = spec.pi_z;
    j["alpha"] = spec.alpha;
    j["beta"] = spec.beta;
    j["beta0"] = spec.beta0;
    j["gamma"] = spec.gamma;
    j["sigma"] = spec.sigma == SigmaKind::identity ? "identity" : "ar_precision";
    j["ar_coefficient"] = spec.ar_coefficient;
    j["groups"] = spec.group_sizes;
    j["seed"] = spec.seed;
    return j.dump(2);
}

}  // namespace fairfis
