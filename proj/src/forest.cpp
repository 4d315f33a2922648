#include "mldf/forest.hpp"

#include <numeric>
#include <random>

#include "mldf/error.hpp"
#include "mldf/parallel.hpp"
#include "mldf/rng.hpp"

namespace mldf {

namespace {

// Stream tags keep the per-purpose RNG streams disjoint.
constexpr std::uint64_t kBootstrapStream = 1;
constexpr std::uint64_t kTreeStream = 2;
constexpr std::uint64_t kFoldShuffleStream = 3;
constexpr std::uint64_t kFoldForestStream = 4;

}  // namespace

std::uint64_t bootstrap_seed(std::uint64_t forest_seed, std::size_t tree_index) {
    return mix_seed(forest_seed, kBootstrapStream, tree_index);
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
    return mix_seed(forest_seed, kTreeStream, tree_index);
}

std::uint64_t fold_forest_seed(std::uint64_t seed, std::size_t fold) {
    return mix_seed(seed, kFoldForestStream, fold);
}

std::vector<std::size_t> bootstrap_rows(std::span<const std::size_t> pool,
                                        std::uint64_t forest_seed, std::size_t tree_index) {
    std::mt19937_64 rng(bootstrap_seed(forest_seed, tree_index));
    std::vector<std::size_t> rows(pool.size());
    for (std::size_t& r : rows) r = pool[rng_index(rng, pool.size())];
    return rows;
}

std::vector<std::size_t> fold_assignment(std::size_t m, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("fold count must be at least 2");
    if (m < k) throw ArgumentError("fewer rows than folds");
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(seed, kFoldShuffleStream));
    shuffle_indices(idx, rng);
    std::vector<std::size_t> fold_of_row(m);
    for (std::size_t i = 0; i < m; ++i) fold_of_row[idx[i]] = i % k;
    return fold_of_row;
}

Forest fit_forest_rows(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                       std::span<const std::size_t> rows, std::uint64_t seed) {
    if (X.rows() != Z.rows()) throw ArgumentError("fit_forest: feature/label row mismatch");
    if (rows.empty()) throw ArgumentError("fit_forest: no training rows");
    if (params.n_trees == 0) throw ArgumentError("fit_forest: n_trees must be positive");

    Forest forest;
    forest.n_features = X.cols();
    forest.n_labels = Z.cols();
    forest.trees.resize(params.n_trees);
    parallel_for(params.n_trees, [&](std::size_t i) {
        TreeParams tp = params.tree;
        tp.seed = tree_seed(seed, i);
        if (params.bootstrap) {
            const std::vector<std::size_t> sample = bootstrap_rows(rows, seed, i);
            forest.trees[i] = fit_tree(tp, X, Z, sample);
        } else {
            forest.trees[i] = fit_tree(tp, X, Z, rows);
        }
    });
    return forest;
}

Forest fit_forest(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                  std::uint64_t seed) {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return fit_forest_rows(params, X, Z, rows, seed);
}

std::vector<double> predict_forest_row(const Forest& forest, std::span<const double> x) {
    std::vector<double> mean(forest.n_labels, 0.0);
    for (const Tree& tree : forest.trees) {
        const std::vector<double> scores = predict_tree(tree, x);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += scores[j];
    }
    const double n = static_cast<double>(forest.trees.size());
    for (double& v : mean) v /= n;
    return mean;
}

Matrix predict_forest(const Forest& forest, const Matrix& X) {
    if (X.cols() != forest.n_features)
        throw ArgumentError("predict_forest: feature width mismatch");
    Matrix out(X.rows(), forest.n_labels);
    parallel_for(X.rows(), [&](std::size_t i) {
        const std::vector<double> scores = predict_forest_row(forest, X.row(i));
        for (std::size_t j = 0; j < scores.size(); ++j) out(i, j) = scores[j];
    });
    return out;
}

FoldedFit fit_folded(const ForestParams& params, const Matrix& X, const BinaryMatrix& Z,
                     std::size_t k, std::uint64_t seed) {
    const std::size_t m = X.rows();
    FoldedFit fit;
    fit.model.k = k;
    fit.model.fold_of_row = fold_assignment(m, k, seed);
    fit.model.forests.resize(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows;
        train_rows.reserve(m);
        for (std::size_t i = 0; i < m; ++i)
            if (fit.model.fold_of_row[i] != f) train_rows.push_back(i);
        fit.model.forests[f] =
            fit_forest_rows(params, X, Z, train_rows, fold_forest_seed(seed, f));
    }
    fit.oof = Matrix(m, Z.cols());
    parallel_for(m, [&](std::size_t i) {
        const Forest& holdout = fit.model.forests[fit.model.fold_of_row[i]];
        const std::vector<double> scores = predict_forest_row(holdout, X.row(i));
        for (std::size_t j = 0; j < scores.size(); ++j) fit.oof(i, j) = scores[j];
    });
    return fit;
}

Matrix predict_folded(const FoldedForest& ff, const Matrix& X) {
    if (ff.forests.empty()) throw ArgumentError("predict_folded: empty model");
    if (X.cols() != ff.forests.front().n_features)
        throw ArgumentError("predict_folded: feature width mismatch");
    const std::size_t l = ff.forests.front().n_labels;
    Matrix out(X.rows(), l);
    parallel_for(X.rows(), [&](std::size_t i) {
        std::vector<double> mean(l, 0.0);
        for (const Forest& forest : ff.forests) {
            const std::vector<double> scores = predict_forest_row(forest, X.row(i));
            for (std::size_t j = 0; j < l; ++j) mean[j] += scores[j];
        }
        for (std::size_t j = 0; j < l; ++j) out(i, j) = mean[j] / static_cast<double>(ff.forests.size());
    });
    return out;
}

}  // namespace mldf
