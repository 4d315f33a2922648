#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mldf/matrix.hpp"

namespace mldf {

enum class SplitCriterion {
    VarianceReduction,  // PCT: sum of per-label score variances
    MultiLabelEntropy,  // ML-C4.5: sum of per-label binary entropies
};

enum class SplitPointMode {
    Exhaustive,    // midpoints between consecutive distinct values
    SingleRandom,  // one uniform threshold in (min, max) per candidate
};

struct TreeParams {
    SplitCriterion criterion = SplitCriterion::VarianceReduction;
    SplitPointMode mode = SplitPointMode::Exhaustive;
    std::size_t max_depth = 3;        // root has depth 1
    std::size_t min_samples_leaf = 1;
    std::size_t feature_candidates = 0;  // 0 selects round(sqrt(d))
    std::uint64_t seed = 0;
};

// Nodes live in a flat array; feature < 0 marks a leaf.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> leaf;  // per-label positive fraction, leaves only
    std::uint32_t count = 0;   // training rows that reached the node, leaves only

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::size_t n_features = 0;
    std::size_t n_labels = 0;
};

std::size_t default_feature_candidates(std::size_t d);

// Impurity decrease of partitioning the rows listed in left/right. The parent
// is their union; both sides must be non-empty.
double split_gain(SplitCriterion criterion, const BinaryMatrix& Z,
                  std::span<const std::size_t> left, std::span<const std::size_t> right);

Tree fit_tree(const TreeParams& params, const Matrix& X, const BinaryMatrix& Z,
              std::span<const std::size_t> rows);

std::vector<double> predict_tree(const Tree& tree, std::span<const double> x);

// Longest root-to-leaf path, counted in nodes.
std::size_t tree_depth(const Tree& tree);

}  // namespace mldf
