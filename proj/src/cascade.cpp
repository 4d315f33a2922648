#include "mldf/cascade.hpp"

#include <chrono>
#include <cmath>
#include <iterator>
#include <limits>

#include "mldf/confidence.hpp"
#include "mldf/error.hpp"
#include "mldf/rng.hpp"

namespace mldf {

namespace {

constexpr std::uint64_t kCascadeForestStream = 5;
constexpr std::size_t kStallLimit = 3;

bool measure_definable(MeasureKind m, const BinaryMatrix& Y) {
    if (m == MeasureKind::HammingLoss) return true;
    if (m == MeasureKind::MacroAUC) {
        for (std::size_t j = 0; j < Y.cols(); ++j) {
            std::size_t pos = 0;
            for (std::size_t i = 0; i < Y.rows(); ++i) pos += Y(i, j);
            if (pos > 0 && pos < Y.rows()) return true;
        }
        return false;
    }
    for (std::size_t i = 0; i < Y.rows(); ++i) {
        std::size_t pos = 0;
        auto r = Y.row(i);
        for (std::uint8_t v : r) pos += v;
        if (pos > 0 && pos < Y.cols()) return true;
    }
    return false;
}

void check_config(const CascadeConfig& config, const Matrix& X, const BinaryMatrix& Y) {
    if (config.max_layers < 1) throw ConfigError("max_layers must be at least 1");
    if (config.forests.empty()) throw ConfigError("a layer needs at least one forest");
    if (config.folds < 2) throw ConfigError("folds must be at least 2");
    if (!(config.binarization_threshold >= 0.0 && config.binarization_threshold <= 1.0))
        throw ConfigError("binarization threshold must lie in [0,1]");
    if (config.theta_override && *config.theta_override < 0.0)
        throw ConfigError("theta override must be nonnegative");
    if (config.schedule.trees_first == 0 || config.schedule.trees_max == 0)
        throw ConfigError("tree budget must be positive");
    if (config.schedule.depth_first == 0) throw ConfigError("depth schedule must be positive");
    if (X.empty()) throw ConfigError("empty feature matrix");
    if (X.rows() != Y.rows()) throw ConfigError("feature/label row mismatch");
    if (Y.cols() < 2) throw ConfigError("at least two labels required");
    if (X.rows() < config.folds) throw ConfigError("fewer rows than folds");
    if (!measure_definable(config.measure, Y))
        throw ConfigError("measure '" + measure_name(config.measure) +
                          "' is undefined on every slice of the labels");
}

ForestParams layer_forest_params(const CascadeConfig& config, const ForestSpec& spec,
                                 std::size_t t) {
    ForestParams fp;
    fp.tree.criterion = spec.criterion;
    fp.tree.mode = spec.mode;
    fp.tree.max_depth = config.schedule.depth_at(t);
    fp.tree.min_samples_leaf = config.min_samples_leaf;
    fp.tree.feature_candidates = config.feature_candidates;
    fp.n_trees = config.schedule.trees_at(t);
    fp.bootstrap = true;
    return fp;
}

void copy_label_slice(Representation& dst, const Representation& src, std::size_t label,
                      std::size_t n_forests, std::size_t l) {
    for (std::size_t f = 0; f < n_forests; ++f) {
        const std::size_t c = f * l + label;
        for (std::size_t i = 0; i < dst.blocks.rows(); ++i)
            dst.blocks(i, c) = src.blocks(i, c);
    }
    for (std::size_t i = 0; i < dst.P.rows(); ++i) dst.P(i, label) = src.P(i, label);
}

void copy_row_slice(Representation& dst, const Representation& src, std::size_t row) {
    auto db = dst.blocks.row(row);
    auto sb = src.blocks.row(row);
    std::copy(sb.begin(), sb.end(), db.begin());
    auto dp = dst.P.row(row);
    auto sp = src.P.row(row);
    std::copy(sp.begin(), sp.end(), dp.begin());
}

}  // namespace

std::string forest_spec_name(const ForestSpec& spec) {
    const bool pct = spec.criterion == SplitCriterion::VarianceReduction;
    const bool exhaustive = spec.mode == SplitPointMode::Exhaustive;
    if (pct) return exhaustive ? "rf-pct" : "erf-pct";
    return exhaustive ? "rfml-c45" : "erfml-c45";
}

ForestSpec forest_spec_from_name(const std::string& name) {
    if (name == "rf-pct")
        return {SplitCriterion::VarianceReduction, SplitPointMode::Exhaustive};
    if (name == "erf-pct")
        return {SplitCriterion::VarianceReduction, SplitPointMode::SingleRandom};
    if (name == "rfml-c45")
        return {SplitCriterion::MultiLabelEntropy, SplitPointMode::Exhaustive};
    if (name == "erfml-c45")
        return {SplitCriterion::MultiLabelEntropy, SplitPointMode::SingleRandom};
    throw ArgumentError("unknown forest kind '" + name + "'");
}

Representation make_representation(const std::vector<Matrix>& forest_outputs) {
    if (forest_outputs.empty()) throw ArgumentError("representation needs at least one block");
    const std::size_t m = forest_outputs.front().rows();
    const std::size_t l = forest_outputs.front().cols();
    for (const Matrix& block : forest_outputs)
        if (block.rows() != m || block.cols() != l)
            throw ArgumentError("forest output shapes disagree");

    Representation rep;
    rep.blocks = Matrix(m, forest_outputs.size() * l);
    rep.P = Matrix(m, l);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            double sum = 0.0;
            for (std::size_t f = 0; f < forest_outputs.size(); ++f) {
                const double v = forest_outputs[f](i, j);
                rep.blocks(i, f * l + j) = v;
                sum += v;
            }
            rep.P(i, j) = sum / static_cast<double>(forest_outputs.size());
        }
    }
    return rep;
}

std::vector<double> slice_measures(MeasureKind measure, const Matrix& P, const BinaryMatrix& Y,
                                   double binarization_threshold) {
    if (P.rows() != Y.rows() || P.cols() != Y.cols())
        throw ArgumentError("slice_measures: shape mismatch");
    std::vector<double> out;
    if (label_based(measure)) {
        out.resize(P.cols());
        for (std::size_t j = 0; j < P.cols(); ++j) {
            try {
                out[j] = evaluate_per_label(measure, P.col(j), Y.col(j), binarization_threshold);
            } catch (const UndefinedMeasureError&) {
                out[j] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    } else {
        out.resize(P.rows());
        for (std::size_t i = 0; i < P.rows(); ++i) {
            try {
                out[i] = evaluate_per_instance(measure, P.row(i), Y.row(i));
            } catch (const UndefinedMeasureError&) {
                out[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return out;
}

ThresholdResult determine_threshold(MeasureKind measure, const Representation& H,
                                    const BinaryMatrix& Y,
                                    std::span<const double> prev_slice_measures,
                                    double binarization_threshold) {
    ThresholdResult result;
    result.current = slice_measures(measure, H.P, Y, binarization_threshold);
    if (prev_slice_measures.size() != result.current.size())
        throw ArgumentError("determine_threshold: slice alignment mismatch");
    const ConfidenceVector alpha = confidence(measure, H.P);
    double sum = 0.0;
    std::size_t degraded = 0;
    for (std::size_t s = 0; s < result.current.size(); ++s) {
        if (std::isnan(result.current[s]) || std::isnan(prev_slice_measures[s])) continue;
        if (worse(measure, result.current[s], prev_slice_measures[s])) {
            sum += alpha.values[s];
            ++degraded;
        }
    }
    result.theta = degraded == 0 ? 0.0 : sum / static_cast<double>(degraded);
    return result;
}

Representation feature_reuse(MeasureKind measure, const Representation& H,
                             const Representation& G_prev, double theta) {
    if (theta < 0.0) throw ArgumentError("feature_reuse: negative threshold");
    if (G_prev.P.empty()) throw ArgumentError("feature_reuse: no previous representation");
    if (H.blocks.rows() != G_prev.blocks.rows() || H.blocks.cols() != G_prev.blocks.cols() ||
        H.P.rows() != G_prev.P.rows() || H.P.cols() != G_prev.P.cols())
        throw ArgumentError("feature_reuse: representation shapes disagree");
    const std::size_t l = H.P.cols();
    if (l == 0 || H.blocks.cols() % l != 0)
        throw ArgumentError("feature_reuse: block width is not a multiple of the label count");
    const std::size_t n_forests = H.blocks.cols() / l;

    Representation G = H;
    const ConfidenceVector alpha = confidence(measure, H.P);
    if (alpha.axis == Axis::Columns) {
        for (std::size_t j = 0; j < l; ++j)
            if (alpha.values[j] < theta) copy_label_slice(G, G_prev, j, n_forests, l);
    } else {
        for (std::size_t i = 0; i < H.P.rows(); ++i)
            if (alpha.values[i] < theta) copy_row_slice(G, G_prev, i);
    }
    return G;
}

std::uint64_t cascade_forest_seed(std::uint64_t seed, std::size_t layer, std::size_t forest) {
    return mix_seed(seed, kCascadeForestStream, layer, forest);
}

CascadeModel fit_cascade(const CascadeConfig& config, const Matrix& X, const BinaryMatrix& Y,
                         TrainReport* report) {
    const auto start = std::chrono::steady_clock::now();
    check_config(config, X, Y);

    CascadeModel model;
    model.config = config;
    model.n_features = X.cols();
    model.n_labels = Y.cols();

    std::vector<Layer> layers;
    std::vector<double> thetas;
    TrainReport rep;
    Representation G_prev;
    std::vector<double> prev_slices;
    double p_best = 0.0;
    std::size_t best_layer = 0;
    std::size_t stall = 0;

    for (std::size_t t = 1; t <= config.max_layers; ++t) {
        const Matrix input = t == 1 ? X : hconcat(X, G_prev.blocks);
        Layer layer;
        std::vector<Matrix> blocks;
        for (std::size_t f = 0; f < config.forests.size(); ++f) {
            FoldedFit fit = fit_folded(layer_forest_params(config, config.forests[f], t), input,
                                       Y, config.folds, cascade_forest_seed(config.seed, t, f));
            layer.forests.push_back(std::move(fit.model));
            blocks.push_back(std::move(fit.oof));
        }
        Representation H = make_representation(blocks);

        double theta = 0.0;
        if (t > 2 || (config.threshold_from_layer2 && t == 2))
            theta = determine_threshold(config.measure, H, Y, prev_slices,
                                        config.binarization_threshold)
                        .theta;
        if (t >= 2 && config.theta_override) theta = *config.theta_override;

        Representation G = (t == 1 || !config.reuse_enabled)
                               ? std::move(H)
                               : feature_reuse(config.measure, H, G_prev, theta);

        const double value =
            config.layer_measure_override
                ? config.layer_measure_override(t, G, Y)
                : evaluate(config.measure, G.P, Y, config.binarization_threshold);

        layers.push_back(std::move(layer));
        thetas.push_back(theta);
        rep.layer_measures.push_back(value);
        rep.layer_thetas.push_back(theta);
        rep.layer_trees.push_back(config.schedule.trees_at(t));
        rep.layer_depths.push_back(config.schedule.depth_at(t));

        if (t == 1 || better(config.measure, value, p_best)) {
            p_best = value;
            best_layer = t;
            stall = 0;
        } else {
            ++stall;
        }

        prev_slices = slice_measures(config.measure, G.P, Y, config.binarization_threshold);
        G_prev = std::move(G);
        if (stall >= kStallLimit) break;
    }

    rep.trained_layers = layers.size();
    rep.final_layer = best_layer;
    rep.best_measure = p_best;

    model.layers.assign(std::make_move_iterator(layers.begin()),
                        std::make_move_iterator(layers.begin() + static_cast<std::ptrdiff_t>(best_layer)));
    model.thetas.assign(thetas.begin(), thetas.begin() + static_cast<std::ptrdiff_t>(best_layer));

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report) *report = std::move(rep);
    return model;
}

CascadePrediction predict_cascade(const CascadeModel& model, const Matrix& X) {
    if (model.layers.empty()) throw ArgumentError("predict_cascade: model has no layers");
    if (X.rows() == 0) throw ArgumentError("predict_cascade: empty batch");
    if (X.cols() != model.n_features) throw ArgumentError("predict_cascade: feature width mismatch");

    // Confidence for a label-based measure spans the whole batch, so a lone
    // row cannot be screened meaningfully; fall back to plain pass-through.
    const bool passthrough = X.rows() == 1 && label_based(model.config.measure);
    bool any_theta = false;
    for (double theta : model.thetas) any_theta = any_theta || theta > 0.0;

    Representation G_prev;
    for (std::size_t t = 1; t <= model.layers.size(); ++t) {
        const Matrix input = t == 1 ? X : hconcat(X, G_prev.blocks);
        std::vector<Matrix> blocks;
        for (const FoldedForest& ff : model.layers[t - 1].forests)
            blocks.push_back(predict_folded(ff, input));
        Representation H = make_representation(blocks);
        G_prev = (t == 1 || !model.config.reuse_enabled || passthrough)
                     ? std::move(H)
                     : feature_reuse(model.config.measure, H, G_prev, model.thetas[t - 1]);
    }

    CascadePrediction out;
    out.scores = std::move(G_prev.P);
    out.binary = binarize(out.scores, model.config.binarization_threshold);
    out.screening_disabled = passthrough && any_theta && model.config.reuse_enabled;
    return out;
}

namespace {

// Layer-2 pipeline shared by the probe: G1 feeds layer 2, theta_2 = 0.
Representation probe_fit_layer(const CascadeConfig& config, const Matrix& input,
                               const BinaryMatrix& Y, std::size_t t) {
    std::vector<Matrix> blocks;
    for (std::size_t f = 0; f < config.forests.size(); ++f) {
        FoldedFit fit = fit_folded(layer_forest_params(config, config.forests[f], t), input, Y,
                                   config.folds, cascade_forest_seed(config.seed, t, f));
        blocks.push_back(std::move(fit.oof));
    }
    return make_representation(blocks);
}

std::vector<double> probe_layer2_accuracy(const CascadeConfig& config, const Matrix& X,
                                          const BinaryMatrix& Y, const Representation& G1) {
    const Representation G2 = probe_fit_layer(config, hconcat(X, G1.blocks), Y, 2);
    std::vector<double> acc(Y.cols());
    for (std::size_t j = 0; j < Y.cols(); ++j)
        acc[j] = 1.0 - evaluate_per_label(MeasureKind::HammingLoss, G2.P.col(j), Y.col(j),
                                          config.binarization_threshold);
    return acc;
}

Representation zero_label_columns(Representation G, std::size_t label) {
    const std::size_t l = G.P.cols();
    const std::size_t n_forests = G.blocks.cols() / l;
    for (std::size_t i = 0; i < G.blocks.rows(); ++i) {
        for (std::size_t f = 0; f < n_forests; ++f) G.blocks(i, f * l + label) = 0.0;
        G.P(i, label) = 0.0;
    }
    return G;
}

std::vector<double> normalized_decrease(std::span<const double> base,
                                        std::span<const double> ablated) {
    std::vector<double> delta(base.size());
    for (std::size_t j = 0; j < base.size(); ++j) {
        const double denom = std::max(std::abs(base[j]), 1e-12);
        delta[j] = (base[j] - ablated[j]) / denom;
    }
    return delta;
}

}  // namespace

std::vector<double> probe_label_correlation(const CascadeConfig& config, const Matrix& X,
                                            const BinaryMatrix& Y, std::size_t deleted_label) {
    check_config(config, X, Y);
    if (deleted_label >= Y.cols()) throw ArgumentError("probe: label index out of range");
    const Representation G1 = probe_fit_layer(config, X, Y, 1);
    const std::vector<double> base = probe_layer2_accuracy(config, X, Y, G1);
    const std::vector<double> ablated =
        probe_layer2_accuracy(config, X, Y, zero_label_columns(G1, deleted_label));
    return normalized_decrease(base, ablated);
}

Matrix probe_all_labels(const CascadeConfig& config, const Matrix& X, const BinaryMatrix& Y) {
    check_config(config, X, Y);
    const std::size_t l = Y.cols();
    const Representation G1 = probe_fit_layer(config, X, Y, 1);
    const std::vector<double> base = probe_layer2_accuracy(config, X, Y, G1);
    Matrix deltas(l, l);
    for (std::size_t j = 0; j < l; ++j) {
        const std::vector<double> ablated =
            probe_layer2_accuracy(config, X, Y, zero_label_columns(G1, j));
        const std::vector<double> row = normalized_decrease(base, ablated);
        for (std::size_t c = 0; c < l; ++c) deltas(j, c) = row[c];
    }
    return deltas;
}

}  // namespace mldf
