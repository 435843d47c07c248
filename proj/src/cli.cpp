#include "fairfis/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairfis/dataset.hpp"
#include "fairfis/ensemble.hpp"
#include "fairfis/fairness.hpp"
#include "fairfis/simulate.hpp"
#include "fairfis/surrogate.hpp"
#include "fairfis/svg.hpp"
#include "fairfis/tree.hpp"
#include "fairfis/util.hpp"

namespace fairfis::cli {
namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TaskKind parse_task(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "regression") return TaskKind::regression;
    throw UsageError("unknown task '" + s + "' (classification|regression)");
}

BiasMetric parse_metric(const std::string& kind, int positive_class, const std::string& reduction,
                        TaskKind task) {
    BiasMetric m;
    if (kind == "dp") {
        m.kind = BiasKind::dp;
    } else if (kind == "eqop") {
        if (task == TaskKind::regression) throw UsageError("EQOP requires classification");
        m.kind = BiasKind::eqop;
    } else {
        throw UsageError("unknown metric '" + kind + "' (dp|eqop)");
    }
    m.positive_class = positive_class;
    if (reduction == "l1")
        m.reduction = MulticlassReduction::l1;
    else if (reduction == "max")
        m.reduction = MulticlassReduction::max_class;
    else
        throw UsageError("unknown multiclass reduction '" + reduction + "' (l1|max)");
    return m;
}

// --data plus the column-role flags shared by train / importance / surrogate
struct DataArgs {
    std::string path;
    std::string target;
    std::string protected_col;
    std::string protected_positive;  // empty = column already 0/1
    std::vector<std::string> ignore;
    std::string delimiter = ",";
    bool no_header = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", path, "input CSV file")->required();
        cmd->add_option("--target", target, "target column (name, or index without --header)")->required();
        cmd->add_option("--protected", protected_col, "protected attribute column")->required();
        cmd->add_option("--protected-positive", protected_positive,
                        "raw value of the protected column mapped to z=1");
        cmd->add_option("--ignore", ignore, "columns to drop")->delimiter(',');
        cmd->add_option("--delimiter", delimiter, "field delimiter (default ,)");
        cmd->add_flag("--no-header", no_header, "file has no header row; columns are 0-based indices");
    }

    Dataset load(TaskKind task) const {
        ColumnSchema schema;
        schema.target = target;
        schema.protected_col = protected_col;
        if (!protected_positive.empty()) schema.protected_positive = protected_positive;
        schema.ignored = ignore;
        if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
        schema.delimiter = delimiter[0];
        schema.has_header = !no_header;
        schema.task = task;
        return load_dataset(path, schema);
    }
};

struct ModelArgs {
    std::string model = "tree";
    std::optional<int> max_depth;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::string feature_subsample = "auto";  // auto | none | <count>
    int n_trees = 100;
    bool no_bootstrap = false;
    int n_stages = 100;
    double learning_rate = 0.1;
    int threads = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", model, "tree | forest | boosting")->capture_default_str();
        cmd->add_option("--max-depth", max_depth, "depth limit (default: fully grown; boosting: 3)");
        cmd->add_option("--min-samples-split", min_samples_split)->capture_default_str();
        cmd->add_option("--min-samples-leaf", min_samples_leaf)->capture_default_str();
        cmd->add_option("--feature-subsample", feature_subsample,
                        "candidate features per split: auto, none or a count")
            ->capture_default_str();
        cmd->add_option("--n-trees", n_trees, "forest size")->capture_default_str();
        cmd->add_flag("--no-bootstrap", no_bootstrap, "fit forest members on the full data");
        cmd->add_option("--n-stages", n_stages, "boosting stages")->capture_default_str();
        cmd->add_option("--learning-rate", learning_rate)->capture_default_str();
        cmd->add_option("--threads", threads, "worker cap; does not change results")
            ->capture_default_str();
    }

    ModelConfig config(std::uint64_t seed) const {
        ModelConfig cfg;
        if (model == "tree")
            cfg.kind = ModelKind::tree;
        else if (model == "forest")
            cfg.kind = ModelKind::forest;
        else if (model == "boosting")
            cfg.kind = ModelKind::boosting;
        else
            throw UsageError("unknown model '" + model + "' (tree|forest|boosting)");

        TreeConfig tree;
        tree.max_depth = max_depth;
        tree.min_samples_split = min_samples_split;
        tree.min_samples_leaf = min_samples_leaf;
        tree.rng_seed = seed;
        if (feature_subsample != "auto" && feature_subsample != "none") {
            try {
                tree.feature_subsample = std::stoi(feature_subsample);
            } catch (const std::exception&) {
                throw UsageError("--feature-subsample expects auto, none or a count");
            }
        }
        cfg.tree = tree;
        if (cfg.kind == ModelKind::tree && feature_subsample == "auto")
            cfg.tree.feature_subsample.reset();  // single trees use all features by default

        cfg.forest.n_trees = n_trees;
        cfg.forest.bootstrap = !no_bootstrap;
        cfg.forest.tree = tree;
        cfg.forest.threads = threads;
        if (feature_subsample == "none")
            cfg.forest.feature_subsample = 0;
        else if (feature_subsample != "auto")
            cfg.forest.feature_subsample = *tree.feature_subsample;
        cfg.forest.tree.feature_subsample.reset();

        cfg.boosting.n_stages = n_stages;
        cfg.boosting.learning_rate = learning_rate;
        cfg.boosting.tree = tree;
        return cfg;
    }
};

struct SimArgs {
    std::string scenario = "linear";
    std::string task = "classification";
    std::int64_t n = 1000;
    int p = 12;
    double pi_z = 0.2;
    std::optional<double> alpha;
    std::optional<double> beta;
    double beta0 = 0.0;
    double gamma = 1.0;
    std::string sigma = "identity";
    double ar_coefficient = 0.5;
    std::string layout = "equal";

    void attach(CLI::App* cmd) {
        cmd->add_option("--scenario", scenario, "linear | additive_sin | interactions")
            ->capture_default_str();
        cmd->add_option("--task", task, "classification | regression")->capture_default_str();
        cmd->add_option("--n", n, "sample count")->capture_default_str();
        cmd->add_option("--p", p, "feature count")->capture_default_str();
        cmd->add_option("--pi", pi_z, "Bernoulli rate of the protected attribute")
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "mean shift on G1/G2 (default 2 classification, 0.4 regression)");
        cmd->add_option("--beta", beta, "signal coefficient on G1/G3 (default 1 classification, 3 regression)");
        cmd->add_option("--beta0", beta0, "intercept")->capture_default_str();
        cmd->add_option("--gamma", gamma, "interaction coefficient")->capture_default_str();
        cmd->add_option("--sigma", sigma, "identity | ar")->capture_default_str();
        cmd->add_option("--ar-coefficient", ar_coefficient, "precision off-diagonal for --sigma ar")
            ->capture_default_str();
        cmd->add_option("--layout", layout, "equal | large-p group layout")->capture_default_str();
    }

    SimulationSpec spec(std::uint64_t seed) const {
        TaskKind t = parse_task(task);
        Scenario sc;
        if (scenario == "linear")
            sc = Scenario::linear;
        else if (scenario == "additive_sin")
            sc = Scenario::additive_sin;
        else if (scenario == "interactions")
            sc = Scenario::interactions;
        else
            throw UsageError("unknown scenario '" + scenario + "'");

        SimulationSpec spec;
        try {
            spec = layout == "large-p" ? SimulationSpec::large_p(sc, t, n, p, seed)
                                       : SimulationSpec::defaults(sc, t, n, p, seed);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        spec.pi_z = pi_z;
        if (alpha) spec.alpha = *alpha;
        if (beta) spec.beta = *beta;
        spec.beta0 = beta0;
        spec.gamma = gamma;
        if (sigma == "ar")
            spec.sigma = SigmaKind::ar_precision;
        else if (sigma != "identity")
            throw UsageError("unknown sigma '" + sigma + "' (identity|ar)");
        spec.ar_coefficient = ar_coefficient;
        return spec;
    }
};

struct LoadedModel {
    std::optional<Tree> tree;
    std::optional<Ensemble> ensemble;

    TaskKind task() const { return tree ? tree->task : ensemble->task; }
    int trained_p() const { return tree ? tree->trained_p : ensemble->trees.front().trained_p; }
    std::vector<double> predict_rows(MatrixView rows) const {
        return tree ? predict(*tree, rows) : predict_ensemble(*ensemble, rows);
    }
    ImportanceScores importance(const BiasMetric& metric) const {
        return tree ? tree_importance(*tree, metric) : aggregate_importance(*ensemble, metric);
    }
};

LoadedModel load_model(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupted model file " + path + ": " + e.what());
    }
    LoadedModel m;
    try {
        if (j.at("kind") == "tree")
            m.tree = tree_from_json(text);
        else
            m.ensemble = ensemble_from_json(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupted model file " + path + ": " + e.what());
    }
    return m;
}

double accuracy_of(const std::vector<double>& pred, const TargetVector& y, TaskKind task) {
    if (task == TaskKind::classification) {
        std::int64_t correct = 0;
        for (size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == y.values[i]) ++correct;
        return static_cast<double>(correct) / static_cast<double>(pred.size());
    }
    double mse = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double diff = pred[i] - y.values[i];
        mse += diff * diff;
    }
    return mse / static_cast<double>(pred.size());
}

void emit_scores(const ImportanceScores& scores, const std::vector<std::string>& names,
                 const std::string& out_path, const std::string& format, const std::string& svg_path) {
    if (format == "csv")
        write_file(out_path, scores_to_csv(scores, names));
    else if (format == "json")
        write_file(out_path, scores_to_json(scores, names));
    else
        throw UsageError("unknown format '" + format + "' (csv|json)");
    if (!svg_path.empty())
        write_file(svg_path, importance_chart_svg(names, scores.fis, scores.fairfis));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fair feature importance for trees, tree ensembles and tree surrogates"};
    app.require_subcommand(1);
    std::uint64_t seed = 20240;
    app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic benchmark dataset");
    SimArgs sim_args;
    sim_args.attach(sim_cmd);
    std::string sim_out, sim_sidecar;
    sim_cmd->add_option("--out", sim_out, "output CSV path")->required();
    sim_cmd->add_option("--sidecar", sim_sidecar, "spec JSON path (default <out>.spec.json)");
    sim_cmd->callback([&] {
        SimulationSpec spec = sim_args.spec(seed);
        Dataset d = gen_dataset(spec);
        write_dataset(sim_out, d);
        write_file(sim_sidecar.empty() ? sim_out + ".spec.json" : sim_sidecar,
                   simulation_spec_to_json(spec) + "\n");
        out << "wrote " << d.n << " rows, " << d.p << " features to " << sim_out << "\n";
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "fit a tree, forest or boosting model");
    DataArgs train_data;
    ModelArgs train_model;
    train_data.attach(train_cmd);
    train_model.attach(train_cmd);
    std::string train_task = "classification", train_metric = "dp", train_out;
    int train_positive = 1;
    train_cmd->add_option("--task", train_task, "classification | regression")->capture_default_str();
    train_cmd->add_option("--metric", train_metric, "dp | eqop")->capture_default_str();
    train_cmd->add_option("--positive-class", train_positive)->capture_default_str();
    train_cmd->add_option("--out", train_out, "model JSON path")->required();
    train_cmd->callback([&] {
        TaskKind task = parse_task(train_task);
        BiasMetric metric = parse_metric(train_metric, train_positive, "l1", task);
        ModelConfig cfg = train_model.config(seed);
        Dataset d = train_data.load(task);

        std::vector<double> pred;
        std::string model_json;
        if (cfg.kind == ModelKind::tree) {
            Tree t = fit_tree(d, task, cfg.tree);
            pred = predict(t, d.features());
            model_json = tree_to_json(t);
        } else if (cfg.kind == ModelKind::forest) {
            Ensemble e = fit_random_forest(d, task, cfg.forest);
            pred = predict_ensemble(e, d.features());
            model_json = ensemble_to_json(e);
        } else {
            Ensemble e = fit_gradient_boosting(d, task, cfg.boosting);
            pred = predict_ensemble(e, d.features());
            model_json = ensemble_to_json(e);
        }
        write_file(train_out, model_json);
        BiasValue bias = model_bias(pred, d.y, d.z, metric);
        out << (task == TaskKind::classification ? "accuracy=" : "mse=")
            << format_double(accuracy_of(pred, d.y, task)) << "\n";
        out << "fairness=" << format_double(1.0 - bias.value)
            << (bias.degenerate ? " (degenerate protected attribute)" : "") << "\n";
        out << "model=" << train_out << "\n";
    });

    // importance
    auto* imp_cmd = app.add_subcommand("importance", "fis / fairfis scores of a fitted model");
    DataArgs imp_data;
    imp_data.attach(imp_cmd);
    std::string imp_model, imp_metric = "dp", imp_reduction = "l1", imp_format = "csv", imp_out, imp_svg;
    int imp_positive = 1;
    imp_cmd->add_option("--model", imp_model, "model JSON from train")->required();
    imp_cmd->add_option("--metric", imp_metric, "dp | eqop")->capture_default_str();
    imp_cmd->add_option("--positive-class", imp_positive)->capture_default_str();
    imp_cmd->add_option("--multiclass-reduction", imp_reduction, "l1 | max")->capture_default_str();
    imp_cmd->add_option("--format", imp_format, "csv | json")->capture_default_str();
    imp_cmd->add_option("--out", imp_out, "scores output path")->required();
    imp_cmd->add_option("--svg", imp_svg, "optional bar chart path");
    imp_cmd->callback([&] {
        LoadedModel model = load_model(imp_model);
        BiasMetric metric = parse_metric(imp_metric, imp_positive, imp_reduction, model.task());
        Dataset d = imp_data.load(model.task());
        if (d.p != model.trained_p())
            throw std::runtime_error("model expects " + std::to_string(model.trained_p()) +
                                     " features but dataset has " + std::to_string(d.p));
        ImportanceScores scores = model.importance(metric);
        emit_scores(scores, d.feature_names, imp_out, imp_format, imp_svg);
        out << "wrote scores for " << d.p << " features to " << imp_out << "\n";
    });

    // surrogate
    auto* sur_cmd = app.add_subcommand("surrogate", "distill black-box predictions into a tree");
    DataArgs sur_data;
    sur_data.attach(sur_cmd);
    std::string sur_pred, sur_task = "classification", sur_metric = "dp", sur_out, sur_scores, sur_svg,
                sur_model_out;
    int sur_positive = 1;
    sur_cmd->add_option("--predictions", sur_pred, "single-column black-box predictions file")
        ->required();
    sur_cmd->add_option("--task", sur_task, "classification | regression")->capture_default_str();
    sur_cmd->add_option("--metric", sur_metric, "dp | eqop")->capture_default_str();
    sur_cmd->add_option("--positive-class", sur_positive)->capture_default_str();
    sur_cmd->add_option("--out", sur_out, "report JSON path")->required();
    sur_cmd->add_option("--scores", sur_scores, "optional scores CSV path");
    sur_cmd->add_option("--svg", sur_svg, "optional bar chart path");
    sur_cmd->add_option("--model-out", sur_model_out, "optional surrogate tree JSON path");
    sur_cmd->callback([&] {
        TaskKind task = parse_task(sur_task);
        BiasMetric metric = parse_metric(sur_metric, sur_positive, "l1", task);
        Dataset d = sur_data.load(task);
        auto preds = load_predictions(sur_pred);
        SurrogateReport report = fit_surrogate(d, preds, task, metric);
        write_file(sur_out, surrogate_report_to_json(report, d.feature_names) + "\n");
        if (!sur_scores.empty()) write_file(sur_scores, scores_to_csv(report.scores, d.feature_names));
        if (!sur_svg.empty())
            write_file(sur_svg,
                       importance_chart_svg(d.feature_names, report.scores.fis, report.scores.fairfis));
        if (!sur_model_out.empty()) write_file(sur_model_out, tree_to_json(report.tree));
        if (report.thresholded_soft_predictions)
            err << "warning: soft predictions thresholded at 0.5\n";
        out << "fidelity=" << format_double(report.fidelity) << "\n";
        out << "black_box_accuracy=" << format_double(report.black_box_accuracy) << "\n";
        out << "black_box_fairness=" << format_double(report.black_box_fairness) << "\n";
    });

    // replicate
    auto* rep_cmd = app.add_subcommand("replicate", "score summary over repeated simulation draws");
    SimArgs rep_sim;
    ModelArgs rep_model;
    rep_sim.attach(rep_cmd);
    rep_model.attach(rep_cmd);
    std::string rep_metric = "dp", rep_out;
    int rep_positive = 1, rep_reps = 10;
    rep_cmd->add_option("--metric", rep_metric, "dp | eqop")->capture_default_str();
    rep_cmd->add_option("--positive-class", rep_positive)->capture_default_str();
    rep_cmd->add_option("--reps", rep_reps, "replicate count")->capture_default_str();
    rep_cmd->add_option("--out", rep_out, "summary CSV path")->required();
    rep_cmd->callback([&] {
        SimulationSpec spec = rep_sim.spec(seed);
        BiasMetric metric = parse_metric(rep_metric, rep_positive, "l1", spec.task);
        ModelConfig cfg = rep_model.config(seed);
        ReplicateSummary summary = run_replicates(spec, cfg, metric, rep_reps, rep_model.threads);
        write_file(rep_out, replicate_summary_to_csv(summary));
        for (int g = 0; g < 4; ++g)
            out << "G" << g + 1 << ": mean_fis=" << format_double(summary.group_mean_fis[g])
                << " mean_fairfis=" << format_double(summary.group_mean_fairfis[g]) << "\n";
        out << "wrote " << rep_out << "\n";
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace fairfis::cli
