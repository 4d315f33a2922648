#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mldf/cascade.hpp"
#include "mldf/dataset.hpp"
#include "mldf/error.hpp"
#include "mldf/io.hpp"
#include "mldf/metrics.hpp"
#include "mldf/model_io.hpp"
#include "mldf/parallel.hpp"

namespace {

using nlohmann::json;
using namespace mldf;

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Applies config-file values to every option the command line left untouched.
struct Binder {
    std::vector<std::function<void(const json&)>> appliers;
    std::set<std::string> keys;

    template <class T>
    void bind(CLI::Option* opt, T& target, const std::string& key) {
        keys.insert(key);
        appliers.push_back([opt, &target, key](const json& j) {
            if (opt->count() == 0 && j.contains(key)) target = j.at(key).get<T>();
        });
    }

    void apply(const std::string& config_path) const {
        if (config_path.empty()) return;
        json j;
        try {
            j = json::parse(read_file(config_path));
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!keys.count(key))
                std::cerr << "warning: ignoring unknown config key '" << key << "'\n";
        }
        try {
            for (const auto& f : appliers) f(j);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad config value: ") + e.what());
        }
    }
};

struct TrainOpts {
    std::string config_path;
    std::string data, labels;
    std::string measure = "hamming-loss";
    std::vector<std::string> forests = {"rf-pct", "erf-pct"};
    std::size_t max_layers = 20;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    double split = 0.0;  // 0 disables splitting
    std::size_t trees_first = 40, trees_step = 20, trees_max = 100;
    std::size_t depth_first = 3, depth_step = 3;
    std::size_t min_samples_leaf = 1;
    std::size_t feature_candidates = 0;
    double binarization_threshold = 0.5;
    bool no_reuse = false;
    bool threshold_from_layer2 = false;
    unsigned threads = 0;
};

void add_train_options(CLI::App* cmd, TrainOpts& o, Binder& binder) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override it");
    binder.bind(cmd->add_option("--data", o.data, "dataset file (.arff or .csv)"), o.data, "data");
    binder.bind(cmd->add_option("--labels", o.labels, "label list XML (for .arff data)"), o.labels,
                "labels");
    binder.bind(cmd->add_option("--measure", o.measure,
                                "target measure: hamming-loss, one-error, coverage, ranking-loss, "
                                "average-precision, macro-auc"),
                o.measure, "measure");
    binder.bind(cmd->add_option("--forests", o.forests,
                                "forest kinds per layer (rf-pct, erf-pct, rfml-c45, erfml-c45)")
                    ->delimiter(','),
                o.forests, "forests");
    binder.bind(cmd->add_option("--max-layers", o.max_layers, "layer cap T"), o.max_layers,
                "max-layers");
    binder.bind(cmd->add_option("--folds", o.folds, "cross-validation folds"), o.folds, "folds");
    binder.bind(cmd->add_option("--seed", o.seed, "random seed"), o.seed, "seed");
    binder.bind(cmd->add_option("--split", o.split, "train fraction; rest is held out"), o.split,
                "split");
    binder.bind(cmd->add_option("--trees-first", o.trees_first, "trees per forest in layer 1"),
                o.trees_first, "trees-first");
    binder.bind(cmd->add_option("--trees-step", o.trees_step, "tree increment per layer"),
                o.trees_step, "trees-step");
    binder.bind(cmd->add_option("--trees-max", o.trees_max, "tree cap per forest"), o.trees_max,
                "trees-max");
    binder.bind(cmd->add_option("--depth-first", o.depth_first, "tree depth in layer 1"),
                o.depth_first, "depth-first");
    binder.bind(cmd->add_option("--depth-step", o.depth_step, "depth increment per layer"),
                o.depth_step, "depth-step");
    binder.bind(cmd->add_option("--min-samples-leaf", o.min_samples_leaf, "leaf size floor"),
                o.min_samples_leaf, "min-samples-leaf");
    binder.bind(cmd->add_option("--feature-candidates", o.feature_candidates,
                                "features tried per node; 0 means sqrt(width)"),
                o.feature_candidates, "feature-candidates");
    binder.bind(cmd->add_option("--binarization-threshold", o.binarization_threshold,
                                "score cut for binary predictions"),
                o.binarization_threshold, "binarization-threshold");
    binder.bind(cmd->add_flag("--no-reuse", o.no_reuse, "disable confidence screening"),
                o.no_reuse, "no-reuse");
    binder.bind(cmd->add_flag("--threshold-from-layer2", o.threshold_from_layer2,
                              "start degradation tracking one layer earlier"),
                o.threshold_from_layer2, "threshold-from-layer2");
    binder.bind(cmd->add_option("--threads", o.threads, "worker threads; 0 means all cores"),
                o.threads, "threads");
}

CascadeConfig to_config(const TrainOpts& o) {
    CascadeConfig c;
    c.measure = measure_from_name(o.measure);
    c.forests.clear();
    for (const std::string& name : o.forests) c.forests.push_back(forest_spec_from_name(name));
    if (c.forests.empty()) throw ArgumentError("at least one forest kind required");
    c.schedule.trees_first = o.trees_first;
    c.schedule.trees_step = o.trees_step;
    c.schedule.trees_max = o.trees_max;
    c.schedule.depth_first = o.depth_first;
    c.schedule.depth_step = o.depth_step;
    c.max_layers = o.max_layers;
    c.folds = o.folds;
    c.min_samples_leaf = o.min_samples_leaf;
    c.feature_candidates = o.feature_candidates;
    c.binarization_threshold = o.binarization_threshold;
    c.seed = o.seed;
    c.reuse_enabled = !o.no_reuse;
    c.threshold_from_layer2 = o.threshold_from_layer2;
    return c;
}

json config_echo(const TrainOpts& o) {
    return json{{"measure", o.measure},
                {"forests", o.forests},
                {"max-layers", o.max_layers},
                {"folds", o.folds},
                {"seed", o.seed},
                {"split", o.split},
                {"trees-first", o.trees_first},
                {"trees-step", o.trees_step},
                {"trees-max", o.trees_max},
                {"depth-first", o.depth_first},
                {"depth-step", o.depth_step},
                {"min-samples-leaf", o.min_samples_leaf},
                {"feature-candidates", o.feature_candidates},
                {"binarization-threshold", o.binarization_threshold},
                {"no-reuse", o.no_reuse},
                {"threshold-from-layer2", o.threshold_from_layer2}};
}

DatasetBundle load_bundle(const TrainOpts& o) {
    if (o.data.empty()) throw ArgumentError("--data is required");
    return load_dataset(o.data, o.labels);
}

json measure_table(const Matrix& scores, const BinaryMatrix& truth, double threshold) {
    json out = json::object();
    for (MeasureKind m : all_measures()) {
        double v;
        try {
            v = evaluate(m, scores, truth, threshold);
        } catch (const UndefinedMeasureError&) {
            v = std::numeric_limits<double>::quiet_NaN();
        }
        if (std::isnan(v)) out[measure_name(m)] = nullptr;
        else out[measure_name(m)] = v;
    }
    return out;
}

void print_measure_table(const json& table, const std::string& indent) {
    for (MeasureKind m : all_measures()) {
        const json& v = table.at(measure_name(m));
        std::cout << indent << measure_name(m) << ": "
                  << (v.is_null() ? "undefined" : g17(v.get<double>())) << "\n";
    }
}

void write_scores_csv(const std::string& path, const Matrix& scores,
                      const std::vector<std::string>& label_names) {
    std::string out;
    for (std::size_t j = 0; j < scores.cols(); ++j) {
        if (j) out += ',';
        out += j < label_names.size() ? label_names[j] : "label_" + std::to_string(j);
    }
    out += '\n';
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        for (std::size_t j = 0; j < scores.cols(); ++j) {
            if (j) out += ',';
            out += g17(scores(i, j));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

void write_binary_csv(const std::string& path, const BinaryMatrix& binary,
                      const std::vector<std::string>& label_names) {
    std::string out;
    for (std::size_t j = 0; j < binary.cols(); ++j) {
        if (j) out += ',';
        out += j < label_names.size() ? label_names[j] : "label_" + std::to_string(j);
    }
    out += '\n';
    for (std::size_t i = 0; i < binary.rows(); ++i) {
        for (std::size_t j = 0; j < binary.cols(); ++j) {
            if (j) out += ',';
            out += binary(i, j) ? '1' : '0';
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

int run_train(const TrainOpts& o, const std::string& model_out, const std::string& report_path) {
    set_max_threads(o.threads);
    const DatasetBundle bundle = load_bundle(o);
    DatasetBundle train = bundle;
    DatasetBundle test;
    const bool held_out = o.split != 0.0;
    if (held_out) {
        auto parts = split_train_test(bundle, o.split, o.seed);
        train = std::move(parts.first);
        test = std::move(parts.second);
    }
    std::cout << "dataset " << train.name << ": " << train.rows() << " rows, "
              << train.n_features() << " features, " << train.n_labels() << " labels\n";

    const CascadeConfig config = to_config(o);
    TrainReport rep;
    CascadeModel model = fit_cascade(config, train.features, train.labels, &rep);
    model.label_names = train.label_names;

    json layers = json::array();
    for (std::size_t t = 0; t < rep.trained_layers; ++t) {
        std::cout << "layer " << t + 1 << ": trees=" << rep.layer_trees[t]
                  << " depth=" << rep.layer_depths[t] << " theta=" << g17(rep.layer_thetas[t])
                  << " " << o.measure << "=" << g17(rep.layer_measures[t]) << "\n";
        layers.push_back(json{{"layer", t + 1},
                              {"trees", rep.layer_trees[t]},
                              {"depth", rep.layer_depths[t]},
                              {"theta", rep.layer_thetas[t]},
                              {"measure", rep.layer_measures[t]}});
    }
    std::cout << "kept layers 1.." << rep.final_layer << "; best " << o.measure << "="
              << g17(rep.best_measure) << " (" << g17(rep.wall_seconds) << " s)\n";

    json report{{"command", "train"},
                {"dataset", bundle.name},
                {"rows", train.rows()},
                {"features", train.n_features()},
                {"labels", train.n_labels()},
                {"config", config_echo(o)},
                {"layers", std::move(layers)},
                {"final-layer", rep.final_layer},
                {"best-measure", rep.best_measure},
                {"wall-seconds", rep.wall_seconds}};

    if (held_out) {
        const CascadePrediction pred = predict_cascade(model, test.features);
        const json table =
            measure_table(pred.scores, test.labels, config.binarization_threshold);
        std::cout << "held-out measures (" << test.rows() << " rows):\n";
        print_measure_table(table, "  ");
        report["test-measures"] = table;
        report["test-rows"] = test.rows();
    }

    if (!model_out.empty()) {
        save_model(model, model_out);
        std::cout << "model written to " << model_out << "\n";
    }
    if (!report_path.empty()) write_file_atomic(report_path, report.dump(2) + "\n");
    return 0;
}

int run_evaluate_model(const TrainOpts& o, const std::string& model_in,
                       const std::string& report_path) {
    set_max_threads(o.threads);
    const CascadeModel model = load_model(model_in);
    const DatasetBundle bundle = load_bundle(o);
    if (bundle.n_features() != model.n_features)
        throw DataError("dataset has " + std::to_string(bundle.n_features()) +
                        " features, model expects " + std::to_string(model.n_features));
    if (bundle.n_labels() != model.n_labels)
        throw DataError("dataset has " + std::to_string(bundle.n_labels()) +
                        " labels, model expects " + std::to_string(model.n_labels));

    const CascadePrediction pred = predict_cascade(model, bundle.features);
    if (pred.screening_disabled)
        std::cerr << "warning: single-row batch under a label-based measure; "
                     "confidence screening disabled\n";
    const json table =
        measure_table(pred.scores, bundle.labels, model.config.binarization_threshold);
    std::cout << "dataset " << bundle.name << ": " << bundle.rows() << " rows\n";
    print_measure_table(table, "  ");

    if (!report_path.empty()) {
        const json report{{"command", "evaluate"},
                          {"model", model_in},
                          {"dataset", bundle.name},
                          {"rows", bundle.rows()},
                          {"measures", table}};
        write_file_atomic(report_path, report.dump(2) + "\n");
    }
    return 0;
}

int run_evaluate_protocol(const TrainOpts& o, std::size_t repeat,
                          const std::string& report_path) {
    set_max_threads(o.threads);
    if (repeat < 1) throw ArgumentError("--repeat must be at least 1");
    const DatasetBundle bundle = load_bundle(o);
    const double fraction = o.split == 0.0 ? 0.5 : o.split;

    std::vector<json> per_seed;
    for (std::size_t r = 0; r < repeat; ++r) {
        const std::uint64_t seed = o.seed + r;
        auto parts = split_train_test(bundle, fraction, seed);
        CascadeConfig config = to_config(o);
        config.seed = seed;
        CascadeModel model = fit_cascade(config, parts.first.features, parts.first.labels);
        model.label_names = bundle.label_names;
        const CascadePrediction pred = predict_cascade(model, parts.second.features);
        json table =
            measure_table(pred.scores, parts.second.labels, config.binarization_threshold);
        std::cout << "seed " << seed << " (L=" << model.final_layer() << "):\n";
        print_measure_table(table, "  ");
        table["seed"] = seed;
        table["final-layer"] = model.final_layer();
        per_seed.push_back(std::move(table));
    }

    json means = json::object(), stds = json::object();
    std::cout << "summary over " << repeat << " runs:\n";
    for (MeasureKind m : all_measures()) {
        const std::string name = measure_name(m);
        double sum = 0.0;
        bool defined = true;
        for (const json& row : per_seed) {
            if (row.at(name).is_null()) defined = false;
            else sum += row.at(name).get<double>();
        }
        if (!defined) {
            means[name] = nullptr;
            stds[name] = nullptr;
            std::cout << "  " << name << ": undefined\n";
            continue;
        }
        const double mean = sum / static_cast<double>(repeat);
        double ss = 0.0;
        for (const json& row : per_seed) {
            const double d = row.at(name).get<double>() - mean;
            ss += d * d;
        }
        const double sd = repeat > 1 ? std::sqrt(ss / static_cast<double>(repeat - 1)) : 0.0;
        means[name] = mean;
        stds[name] = sd;
        std::cout << "  " << name << ": " << g17(mean) << " +/- " << g17(sd) << "\n";
    }

    if (!report_path.empty()) {
        const json report{{"command", "evaluate"},
                          {"dataset", bundle.name},
                          {"protocol", json{{"split", fraction}, {"repeat", repeat}, {"base-seed", o.seed}}},
                          {"config", config_echo(o)},
                          {"per-seed", per_seed},
                          {"mean", means},
                          {"std", stds}};
        write_file_atomic(report_path, report.dump(2) + "\n");
    }
    return 0;
}

int run_predict(const TrainOpts& o, const std::string& model_in, const std::string& scores_out,
                const std::string& binary_out) {
    set_max_threads(o.threads);
    const CascadeModel model = load_model(model_in);
    const DatasetBundle bundle = load_bundle(o);
    if (bundle.n_features() != model.n_features)
        throw DataError("dataset has " + std::to_string(bundle.n_features()) +
                        " features, model expects " + std::to_string(model.n_features));

    const CascadePrediction pred = predict_cascade(model, bundle.features);
    if (pred.screening_disabled)
        std::cerr << "warning: single-row batch under a label-based measure; "
                     "confidence screening disabled\n";

    if (!scores_out.empty()) write_scores_csv(scores_out, pred.scores, model.label_names);
    if (!binary_out.empty()) write_binary_csv(binary_out, pred.binary, model.label_names);
    if (scores_out.empty() && binary_out.empty()) {
        for (std::size_t j = 0; j < pred.scores.cols(); ++j) {
            if (j) std::cout << ',';
            std::cout << (j < model.label_names.size() ? model.label_names[j]
                                                       : "label_" + std::to_string(j));
        }
        std::cout << '\n';
        for (std::size_t i = 0; i < pred.scores.rows(); ++i) {
            for (std::size_t j = 0; j < pred.scores.cols(); ++j) {
                if (j) std::cout << ',';
                std::cout << g17(pred.scores(i, j));
            }
            std::cout << '\n';
        }
    }
    return 0;
}

int run_probe(const TrainOpts& o, const std::string& out_path) {
    set_max_threads(o.threads);
    const DatasetBundle bundle = load_bundle(o);
    const CascadeConfig config = to_config(o);
    const Matrix deltas = probe_all_labels(config, bundle.features, bundle.labels);

    std::string out = "deleted";
    for (const std::string& name : bundle.label_names) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < deltas.rows(); ++i) {
        out += bundle.label_names[i];
        for (std::size_t j = 0; j < deltas.cols(); ++j) out += "," + g17(deltas(i, j));
        out += '\n';
    }
    if (out_path.empty()) std::cout << out;
    else write_file_atomic(out_path, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-label deep forest: cascaded multi-label forests with "
                 "measure-aware screening and layer growth"};
    app.require_subcommand(1);

    TrainOpts train_opts;
    Binder train_binder;
    std::string train_model_out, train_report;
    CLI::App* train_cmd = app.add_subcommand("train", "fit a cascade and save it");
    add_train_options(train_cmd, train_opts, train_binder);
    train_binder.bind(train_cmd->add_option("--model-out", train_model_out, "model file to write"),
                      train_model_out, "model-out");
    train_binder.bind(train_cmd->add_option("--report", train_report, "JSON training report"),
                      train_report, "report");

    TrainOpts eval_opts;
    Binder eval_binder;
    std::string eval_model_in, eval_report;
    std::size_t eval_repeat = 1;
    CLI::App* eval_cmd = app.add_subcommand(
        "evaluate", "score a saved model, or run the split-train-evaluate protocol");
    add_train_options(eval_cmd, eval_opts, eval_binder);
    eval_binder.bind(eval_cmd->add_option("--model-in", eval_model_in, "saved model to evaluate"),
                     eval_model_in, "model-in");
    eval_binder.bind(eval_cmd->add_option("--repeat", eval_repeat,
                                          "protocol runs with seeds seed..seed+N-1"),
                     eval_repeat, "repeat");
    eval_binder.bind(eval_cmd->add_option("--report", eval_report, "JSON report file"),
                     eval_report, "report");

    TrainOpts predict_opts;
    Binder predict_binder;
    std::string predict_model_in, predict_scores, predict_binary;
    CLI::App* predict_cmd = app.add_subcommand("predict", "score new instances with a saved model");
    add_train_options(predict_cmd, predict_opts, predict_binder);
    predict_binder.bind(
        predict_cmd->add_option("--model-in", predict_model_in, "saved model to apply"),
        predict_model_in, "model-in");
    predict_binder.bind(predict_cmd->add_option("--scores-out", predict_scores, "score CSV"),
                        predict_scores, "scores-out");
    predict_binder.bind(predict_cmd->add_option("--binary-out", predict_binary, "binary CSV"),
                        predict_binary, "binary-out");

    TrainOpts probe_opts;
    Binder probe_binder;
    std::string probe_out;
    CLI::App* probe_cmd = app.add_subcommand(
        "probe", "label-correlation probe: delete each label from the first layer's "
                 "representation and report per-label accuracy decreases");
    add_train_options(probe_cmd, probe_opts, probe_binder);
    probe_binder.bind(probe_cmd->add_option("--out", probe_out, "delta matrix CSV"), probe_out,
                      "out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            train_binder.apply(train_opts.config_path);
            return run_train(train_opts, train_model_out, train_report);
        }
        if (eval_cmd->parsed()) {
            eval_binder.apply(eval_opts.config_path);
            if (!eval_model_in.empty()) return run_evaluate_model(eval_opts, eval_model_in, eval_report);
            return run_evaluate_protocol(eval_opts, eval_repeat, eval_report);
        }
        if (predict_cmd->parsed()) {
            predict_binder.apply(predict_opts.config_path);
            if (predict_model_in.empty()) throw ArgumentError("--model-in is required");
            return run_predict(predict_opts, predict_model_in, predict_scores, predict_binary);
        }
        if (probe_cmd->parsed()) {
            probe_binder.apply(probe_opts.config_path);
            return run_probe(probe_opts, probe_out);
        }
        throw ArgumentError("no command given");
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const VersionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        // parse, schema, data, undefined-measure
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
