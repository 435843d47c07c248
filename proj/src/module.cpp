#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>

#include "fairfis/dataset.hpp"
#include "fairfis/ensemble.hpp"
#include "fairfis/fairness.hpp"
#include "fairfis/simulate.hpp"
#include "fairfis/surrogate.hpp"
#include "fairfis/tree.hpp"

namespace py = pybind11;
using namespace fairfis;

namespace {

TaskKind task_from(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "regression") return TaskKind::regression;
    throw std::invalid_argument("task must be 'classification' or 'regression'");
}

BiasMetric metric_from(const std::string& kind, int positive_class, const std::string& reduction) {
    BiasMetric m;
    if (kind == "dp")
        m.kind = BiasKind::dp;
    else if (kind == "eqop")
        m.kind = BiasKind::eqop;
    else
        throw std::invalid_argument("metric must be 'dp' or 'eqop'");
    m.positive_class = positive_class;
    if (reduction == "l1")
        m.reduction = MulticlassReduction::l1;
    else if (reduction == "max")
        m.reduction = MulticlassReduction::max_class;
    else
        throw std::invalid_argument("multiclass reduction must be 'l1' or 'max'");
    return m;
}

Dataset dataset_from(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     const std::vector<int>& z, const std::string& task,
                     std::vector<std::string> feature_names) {
    Dataset d;
    d.n = static_cast<std::int64_t>(x.size());
    d.p = d.n > 0 ? static_cast<int>(x[0].size()) : 0;
    d.x.reserve(d.n * d.p);
    for (const auto& row : x) {
        if (static_cast<int>(row.size()) != d.p)
            throw std::invalid_argument("x rows have inconsistent lengths");
        d.x.insert(d.x.end(), row.begin(), row.end());
    }
    d.y = make_target(y, task_from(task));
    d.z = z;
    if (feature_names.empty())
        for (int j = 0; j < d.p; ++j) feature_names.push_back("x" + std::to_string(j + 1));
    d.feature_names = std::move(feature_names);
    auto report = validate_dataset(d, task_from(task));
    if (!report.ok()) throw std::invalid_argument("invalid dataset: " + report.errors.front().message);
    return d;
}

MatrixView rows_view(const std::vector<std::vector<double>>& rows, std::vector<double>& storage) {
    const auto n = static_cast<std::int64_t>(rows.size());
    const int p = n > 0 ? static_cast<int>(rows[0].size()) : 0;
    storage.clear();
    storage.reserve(n * p);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != p) throw std::invalid_argument("rows have inconsistent lengths");
        storage.insert(storage.end(), r.begin(), r.end());
    }
    return MatrixView{storage.data(), n, p};
}

TreeConfig tree_config(py::object max_depth, int min_samples_split, int min_samples_leaf,
                       py::object feature_subsample, std::uint64_t seed) {
    TreeConfig cfg;
    if (!max_depth.is_none()) cfg.max_depth = max_depth.cast<int>();
    cfg.min_samples_split = min_samples_split;
    cfg.min_samples_leaf = min_samples_leaf;
    if (!feature_subsample.is_none()) cfg.feature_subsample = feature_subsample.cast<int>();
    cfg.rng_seed = seed;
    return cfg;
}

py::dict scores_dict(const ImportanceScores& s) {
    py::dict out;
    out["fis"] = s.fis;
    out["fairfis"] = s.fairfis;
    out["raw_fis"] = s.raw_fis;
    out["raw_fairfis"] = s.raw_fairfis;
    out["metric"] = s.metric.kind == BiasKind::dp ? "dp" : "eqop";
    return out;
}

}  // namespace

PYBIND11_MODULE(fairfis, m) {
    m.doc() = "trees, tree ensembles and tree surrogates with accuracy- and fairness-based "
              "feature importance scores";

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&dataset_from), py::arg("x"), py::arg("y"), py::arg("z"),
             py::arg("task") = "classification", py::arg("feature_names") = std::vector<std::string>{})
        .def_readonly("n", &Dataset::n)
        .def_readonly("p", &Dataset::p)
        .def_readonly("z", &Dataset::z)
        .def_readonly("feature_names", &Dataset::feature_names)
        .def_property_readonly("y", [](const Dataset& d) { return d.y.values; });

    py::class_<Tree>(m, "Tree")
        .def_property_readonly("node_count", &Tree::node_count)
        .def_property_readonly("task", [](const Tree& t) {
            return t.task == TaskKind::classification ? "classification" : "regression";
        })
        .def("predict",
             [](const Tree& t, const std::vector<std::vector<double>>& rows) {
                 std::vector<double> storage;
                 return predict(t, rows_view(rows, storage));
             })
        .def("predict_proba",
             [](const Tree& t, const std::vector<std::vector<double>>& rows) {
                 std::vector<double> storage;
                 return predict_proba(t, rows_view(rows, storage));
             })
        .def("to_json", &tree_to_json)
        .def_static("from_json", &tree_from_json);

    py::class_<Ensemble>(m, "Ensemble")
        .def_property_readonly("n_trees", [](const Ensemble& e) { return e.trees.size(); })
        .def_property_readonly("kind", [](const Ensemble& e) {
            return e.kind == EnsembleKind::random_forest ? "random_forest" : "gradient_boosting";
        })
        .def("predict",
             [](const Ensemble& e, const std::vector<std::vector<double>>& rows) {
                 std::vector<double> storage;
                 return predict_ensemble(e, rows_view(rows, storage));
             })
        .def("to_json", &ensemble_to_json)
        .def_static("from_json", &ensemble_from_json);

    py::class_<SurrogateReport>(m, "SurrogateReport")
        .def_readonly("fidelity", &SurrogateReport::fidelity)
        .def_readonly("black_box_accuracy", &SurrogateReport::black_box_accuracy)
        .def_readonly("black_box_fairness", &SurrogateReport::black_box_fairness)
        .def_readonly("tree", &SurrogateReport::tree)
        .def_property_readonly("scores", [](const SurrogateReport& r) { return scores_dict(r.scores); });

    m.def(
        "fit_tree",
        [](const Dataset& d, const std::string& task, py::object max_depth, int min_samples_split,
           int min_samples_leaf, py::object feature_subsample, std::uint64_t seed) {
            return fit_tree(d, task_from(task),
                            tree_config(max_depth, min_samples_split, min_samples_leaf,
                                        feature_subsample, seed));
        },
        py::arg("dataset"), py::arg("task") = "classification", py::arg("max_depth") = py::none(),
        py::arg("min_samples_split") = 2, py::arg("min_samples_leaf") = 1,
        py::arg("feature_subsample") = py::none(), py::arg("seed") = 0);

    m.def(
        "fit_random_forest",
        [](const Dataset& d, const std::string& task, int n_trees, bool bootstrap,
           py::object feature_subsample, py::object max_depth, std::uint64_t seed, int threads) {
            ForestConfig cfg;
            cfg.n_trees = n_trees;
            cfg.bootstrap = bootstrap;
            if (!feature_subsample.is_none()) cfg.feature_subsample = feature_subsample.cast<int>();
            if (!max_depth.is_none()) cfg.tree.max_depth = max_depth.cast<int>();
            cfg.tree.rng_seed = seed;
            cfg.threads = threads;
            return fit_random_forest(d, task_from(task), cfg);
        },
        py::arg("dataset"), py::arg("task") = "classification", py::arg("n_trees") = 100,
        py::arg("bootstrap") = true, py::arg("feature_subsample") = py::none(),
        py::arg("max_depth") = py::none(), py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "fit_gradient_boosting",
        [](const Dataset& d, const std::string& task, int n_stages, double learning_rate,
           py::object max_depth, std::uint64_t seed) {
            BoostingConfig cfg;
            cfg.n_stages = n_stages;
            cfg.learning_rate = learning_rate;
            if (!max_depth.is_none()) cfg.tree.max_depth = max_depth.cast<int>();
            cfg.tree.rng_seed = seed;
            return fit_gradient_boosting(d, task_from(task), cfg);
        },
        py::arg("dataset"), py::arg("task") = "classification", py::arg("n_stages") = 100,
        py::arg("learning_rate") = 0.1, py::arg("max_depth") = py::none(), py::arg("seed") = 0);

    m.def(
        "importance",
        [](py::object model, const std::string& metric, int positive_class,
           const std::string& reduction) {
            BiasMetric m2 = metric_from(metric, positive_class, reduction);
            if (py::isinstance<Tree>(model)) return scores_dict(tree_importance(model.cast<const Tree&>(), m2));
            return scores_dict(aggregate_importance(model.cast<const Ensemble&>(), m2));
        },
        py::arg("model"), py::arg("metric") = "dp", py::arg("positive_class") = 1,
        py::arg("reduction") = "l1");

    m.def(
        "fit_surrogate",
        [](const Dataset& d, const std::vector<double>& predictions, const std::string& task,
           const std::string& metric, int positive_class) {
            return fit_surrogate(d, predictions, task_from(task), metric_from(metric, positive_class, "l1"));
        },
        py::arg("dataset"), py::arg("predictions"), py::arg("task") = "classification",
        py::arg("metric") = "dp", py::arg("positive_class") = 1);

    m.def(
        "model_bias",
        [](const std::vector<double>& predictions, const std::vector<double>& y,
           const std::vector<int>& z, const std::string& metric, int positive_class,
           const std::string& task) {
            TargetVector target = make_target(y, task_from(task));
            return model_bias(predictions, target, z, metric_from(metric, positive_class, "l1")).value;
        },
        py::arg("predictions"), py::arg("y"), py::arg("z"), py::arg("metric") = "dp",
        py::arg("positive_class") = 1, py::arg("task") = "classification");

    m.def(
        "simulate",
        [](const std::string& scenario, const std::string& task, std::int64_t n, int p,
           std::uint64_t seed, const std::string& sigma) {
            Scenario sc;
            if (scenario == "linear")
                sc = Scenario::linear;
            else if (scenario == "additive_sin")
                sc = Scenario::additive_sin;
            else if (scenario == "interactions")
                sc = Scenario::interactions;
            else
                throw std::invalid_argument("scenario must be linear, additive_sin or interactions");
            auto spec = SimulationSpec::defaults(sc, task_from(task), n, p, seed);
            if (sigma == "ar")
                spec.sigma = SigmaKind::ar_precision;
            else if (sigma != "identity")
                throw std::invalid_argument("sigma must be 'identity' or 'ar'");
            return gen_dataset(spec);
        },
        py::arg("scenario") = "linear", py::arg("task") = "classification", py::arg("n") = 1000,
        py::arg("p") = 12, py::arg("seed") = 0, py::arg("sigma") = "identity");
}
