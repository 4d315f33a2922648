#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mldf/forest.hpp"
#include "mldf/matrix.hpp"
#include "mldf/metrics.hpp"

namespace mldf {

// A forest flavor within a layer: rf-pct, erf-pct, rfml-c45, erfml-c45.
struct ForestSpec {
    SplitCriterion criterion = SplitCriterion::VarianceReduction;
    SplitPointMode mode = SplitPointMode::Exhaustive;

    bool operator==(const ForestSpec&) const = default;
};

std::string forest_spec_name(const ForestSpec& spec);
ForestSpec forest_spec_from_name(const std::string& name);

// Per-layer tree budget and depth cap: trees grow by trees_step up to
// trees_max, depth grows without cap. Layer indices are 1-based.
struct LayerSchedule {
    std::size_t trees_first = 40;
    std::size_t trees_step = 20;
    std::size_t trees_max = 100;
    std::size_t depth_first = 3;
    std::size_t depth_step = 3;

    std::size_t trees_at(std::size_t t) const {
        return std::min(trees_first + trees_step * (t - 1), trees_max);
    }
    std::size_t depth_at(std::size_t t) const { return depth_first + depth_step * (t - 1); }
};

// Concatenated per-forest score blocks plus their average P. P drives both
// confidence screening and measure evaluation.
struct Representation {
    Matrix blocks;  // m x (n_forests * l)
    Matrix P;       // m x l
};

Representation make_representation(const std::vector<Matrix>& forest_outputs);

struct CascadeConfig {
    MeasureKind measure = MeasureKind::HammingLoss;
    std::vector<ForestSpec> forests = {
        {SplitCriterion::VarianceReduction, SplitPointMode::Exhaustive},
        {SplitCriterion::VarianceReduction, SplitPointMode::SingleRandom},
    };
    LayerSchedule schedule;
    std::size_t max_layers = 20;
    std::size_t folds = 5;
    std::size_t min_samples_leaf = 1;
    std::size_t feature_candidates = 0;  // 0: sqrt of the layer input width
    double binarization_threshold = 0.5;
    std::uint64_t seed = 0;
    bool reuse_enabled = true;
    // Layer-2 thresholds are zero by default (degradation tracking starts at
    // layer 3); this switch starts it one layer earlier.
    bool threshold_from_layer2 = false;
    std::optional<double> theta_override;  // forces every theta for t >= 2

    // Test hook: replaces measure evaluation during layer growth.
    std::function<double(std::size_t layer, const Representation& G, const BinaryMatrix& Y)>
        layer_measure_override;
};

struct Layer {
    std::vector<FoldedForest> forests;  // aligned with config.forests
};

struct CascadeModel {
    CascadeConfig config;
    std::vector<Layer> layers;    // layers 1..L
    std::vector<double> thetas;   // aligned with layers
    std::size_t n_features = 0;
    std::size_t n_labels = 0;
    std::vector<std::string> label_names;  // may be empty

    std::size_t final_layer() const { return layers.size(); }
};

struct TrainReport {
    std::vector<double> layer_measures;  // every trained layer, kept or not
    std::vector<double> layer_thetas;
    std::vector<std::size_t> layer_trees;
    std::vector<std::size_t> layer_depths;
    std::size_t trained_layers = 0;
    std::size_t final_layer = 0;
    double best_measure = 0.0;
    double wall_seconds = 0.0;
};

struct CascadePrediction {
    Matrix scores;        // m x l, averaged final representation
    BinaryMatrix binary;  // scores thresholded
    bool screening_disabled = false;  // single-row batch under a label-based measure
};

// Per-slice measure values on P against Y: per column for label-based
// measures, per row otherwise. Undefined slices yield NaN.
std::vector<double> slice_measures(MeasureKind measure, const Matrix& P, const BinaryMatrix& Y,
                                   double binarization_threshold);

struct ThresholdResult {
    double theta = 0.0;
    std::vector<double> current;  // slice measures of H, for the next layer
};

// Mean confidence over the slices whose measure strictly degraded versus the
// previous layer; zero when none did. Undefined slices are skipped.
ThresholdResult determine_threshold(MeasureKind measure, const Representation& H,
                                    const BinaryMatrix& Y,
                                    std::span<const double> prev_slice_measures,
                                    double binarization_threshold);

// Starts from H and swaps in G_prev's slice wherever confidence < theta.
Representation feature_reuse(MeasureKind measure, const Representation& H,
                             const Representation& G_prev, double theta);

std::uint64_t cascade_forest_seed(std::uint64_t seed, std::size_t layer, std::size_t forest);

CascadeModel fit_cascade(const CascadeConfig& config, const Matrix& X, const BinaryMatrix& Y,
                         TrainReport* report = nullptr);

CascadePrediction predict_cascade(const CascadeModel& model, const Matrix& X);

// Trains an unablated and an ablated 2-layer cascade (the ablation zeroes one
// label's columns throughout the first layer's representation) and reports the
// relative per-label accuracy decrease caused by the deletion.
std::vector<double> probe_label_correlation(const CascadeConfig& config, const Matrix& X,
                                            const BinaryMatrix& Y, std::size_t deleted_label);

// Stacks probe_label_correlation for every label: row j = deltas after
// deleting label j.
Matrix probe_all_labels(const CascadeConfig& config, const Matrix& X, const BinaryMatrix& Y);

}  // namespace mldf
