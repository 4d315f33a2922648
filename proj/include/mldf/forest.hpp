#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mldf/matrix.hpp"
#include "mldf/tree.hpp"

namespace mldf {

struct ForestParams {
    TreeParams tree;
    std::size_t n_trees = 40;
    bool bootstrap = true;
};

struct Forest {
    std::vector<Tree> trees;
    std::size_t n_features = 0;
    std::size_t n_labels = 0;
};

// One forest per fold; row i's out-of-fold score comes from the forest whose
// held-out fold contains i.
struct FoldedForest {
    std::vector<Forest> forests;
    std::vector<std::size_t> fold_of_row;
    std::size_t k = 0;
};

struct FoldedFit {
    FoldedForest model;
    Matrix oof;  // m x l out-of-fold scores
};

// Seed-derivation scheme, exposed so tests can reconstruct exactly which rows
// each tree resampled and which seed each component received.
std::uint64_t bootstrap_seed(std::uint64_t forest_seed, std::size_t tree_index);
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);
std::uint64_t fold_forest_seed(std::uint64_t seed, std::size_t fold);
std::vector<std::size_t> bootstrap_rows(std::span<const std::size_t> pool,
                                        std::uint64_t forest_seed, std::size_t tree_index);
std::vector<std::size_t> fold_assignment(std::size_t m, std::size_t k, std::uint64_t seed);

Forest fit_forest(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                  std::uint64_t seed);
// Same, but trains on (and bootstraps from) the given subset of rows.
Forest fit_forest_rows(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                       std::span<const std::size_t> rows, std::uint64_t seed);

std::vector<double> predict_forest_row(const Forest& forest, std::span<const double> x);
Matrix predict_forest(const Forest& forest, const Matrix& X);

FoldedFit fit_folded(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                     std::size_t k, std::uint64_t seed);
Matrix predict_folded(const FoldedForest& ff, const Matrix& X);

}  // namespace mldf
