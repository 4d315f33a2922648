#include "mldf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mldf/error.hpp"
#include "mldf/rng.hpp"

namespace mldf {

namespace {

double impurity_term(SplitCriterion criterion, double q) {
    if (criterion == SplitCriterion::VarianceReduction) return q * (1.0 - q);
    double h = 0.0;
    if (q > 0.0) h -= q * std::log2(q);
    if (q < 1.0) h -= (1.0 - q) * std::log2(1.0 - q);
    return h;
}

double impurity_from_counts(SplitCriterion criterion, std::span<const std::size_t> counts,
                            std::size_t n) {
    double sum = 0.0;
    for (std::size_t c : counts)
        sum += impurity_term(criterion, static_cast<double>(c) / static_cast<double>(n));
    return sum;
}

std::vector<std::size_t> label_counts(const BinaryMatrix& Z, std::span<const std::size_t> rows) {
    std::vector<std::size_t> counts(Z.cols(), 0);
    for (std::size_t i : rows) {
        auto r = Z.row(i);
        for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += r[j];
    }
    return counts;
}

struct BestSplit {
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    bool found = false;
};

struct Builder {
    const TreeParams& params;
    const Matrix& X;
    const BinaryMatrix& Z;
    std::size_t candidates;
    std::mt19937_64 rng;
    Tree tree;

    Builder(const TreeParams& p, const Matrix& x, const BinaryMatrix& z, std::size_t cand)
        : params(p), X(x), Z(z), candidates(cand), rng(p.seed) {}

    std::int32_t build(std::vector<std::size_t>& rows, std::size_t depth) {
        const std::size_t n = rows.size();
        const std::size_t l = Z.cols();
        std::vector<std::size_t> counts = label_counts(Z, rows);

        bool pure = true;
        for (std::size_t c : counts)
            if (c != 0 && c != n) {
                pure = false;
                break;
            }

        BestSplit best;
        if (depth < params.max_depth && !pure && n >= 2 * params.min_samples_leaf)
            best = find_split(rows, counts);

        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (!best.found) {
            TreeNode& node = tree.nodes.back();
            node.leaf.resize(l);
            for (std::size_t j = 0; j < l; ++j)
                node.leaf[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
            node.count = static_cast<std::uint32_t>(n);
            return index;
        }

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t i : rows) {
            if (X(i, best.feature) <= best.threshold) left_rows.push_back(i);
            else right_rows.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        const std::int32_t left = build(left_rows, depth + 1);
        const std::int32_t right = build(right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<std::int32_t>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return index;
    }

    BestSplit find_split(const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& counts) {
        const std::size_t n = rows.size();
        const std::size_t l = Z.cols();
        const double parent = impurity_from_counts(params.criterion, counts, n);
        const double nd = static_cast<double>(n);

        BestSplit best;
        std::vector<std::size_t> features =
            sample_without_replacement(rng, X.cols(), std::min(candidates, X.cols()));
        std::vector<std::pair<double, std::size_t>> order(n);
        std::vector<std::size_t> left_counts(l);

        auto evaluate = [&](std::size_t feature, double threshold, std::size_t n_left,
                            std::span<const std::size_t> lc) {
            const std::size_t n_right = n - n_left;
            if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) return;
            double left_imp = 0.0, right_imp = 0.0;
            for (std::size_t j = 0; j < l; ++j) {
                left_imp += impurity_term(params.criterion,
                                          static_cast<double>(lc[j]) / static_cast<double>(n_left));
                right_imp += impurity_term(params.criterion,
                                           static_cast<double>(counts[j] - lc[j]) /
                                               static_cast<double>(n_right));
            }
            const double gain = parent - (static_cast<double>(n_left) / nd) * left_imp -
                                (static_cast<double>(n_right) / nd) * right_imp;
            // Strict improvement keeps the first-seen candidate, so ties fall
            // to the lower feature index and lower threshold.
            if (gain > 0.0 && (!best.found || gain > best.gain)) {
                best.gain = gain;
                best.feature = feature;
                best.threshold = threshold;
                best.found = true;
            }
        };

        for (std::size_t f : features) {
            if (params.mode == SplitPointMode::Exhaustive) {
                for (std::size_t i = 0; i < n; ++i) order[i] = {X(rows[i], f), rows[i]};
                std::stable_sort(order.begin(), order.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
                std::fill(left_counts.begin(), left_counts.end(), 0);
                std::size_t n_left = 0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    auto zr = Z.row(order[i].second);
                    for (std::size_t j = 0; j < l; ++j) left_counts[j] += zr[j];
                    ++n_left;
                    if (order[i].first == order[i + 1].first) continue;
                    const double threshold = order[i].first + (order[i + 1].first - order[i].first) / 2.0;
                    evaluate(f, threshold, n_left, left_counts);
                }
            } else {
                double lo = X(rows[0], f), hi = lo;
                for (std::size_t i : rows) {
                    const double v = X(i, f);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                if (lo == hi) continue;
                const double threshold = rng_real(rng, lo, hi);
                std::fill(left_counts.begin(), left_counts.end(), 0);
                std::size_t n_left = 0;
                for (std::size_t i : rows) {
                    if (X(i, f) <= threshold) {
                        auto zr = Z.row(i);
                        for (std::size_t j = 0; j < l; ++j) left_counts[j] += zr[j];
                        ++n_left;
                    }
                }
                evaluate(f, threshold, n_left, left_counts);
            }
        }
        return best;
    }
};

}  // namespace

std::size_t default_feature_candidates(std::size_t d) {
    if (d == 0) return 0;
    auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    return std::clamp<std::size_t>(k, 1, d);
}

double split_gain(SplitCriterion criterion, const BinaryMatrix& Z,
                  std::span<const std::size_t> left, std::span<const std::size_t> right) {
    if (left.empty() || right.empty()) throw ArgumentError("split_gain: empty side");
    std::vector<std::size_t> parent_rows(left.begin(), left.end());
    parent_rows.insert(parent_rows.end(), right.begin(), right.end());
    const auto pc = label_counts(Z, parent_rows);
    const auto lc = label_counts(Z, left);
    const auto rc = label_counts(Z, right);
    const double n = static_cast<double>(parent_rows.size());
    return impurity_from_counts(criterion, pc, parent_rows.size()) -
           (static_cast<double>(left.size()) / n) * impurity_from_counts(criterion, lc, left.size()) -
           (static_cast<double>(right.size()) / n) * impurity_from_counts(criterion, rc, right.size());
}

Tree fit_tree(const TreeParams& params, const Matrix& X, const BinaryMatrix& Z,
              std::span<const std::size_t> rows) {
    if (rows.empty()) throw ArgumentError("fit_tree: no training rows");
    if (X.rows() != Z.rows()) throw ArgumentError("fit_tree: feature/label row mismatch");
    if (params.max_depth == 0) throw ArgumentError("fit_tree: max_depth must be positive");
    if (params.min_samples_leaf == 0)
        throw ArgumentError("fit_tree: min_samples_leaf must be positive");
    for (std::size_t i : rows)
        if (i >= X.rows()) throw ArgumentError("fit_tree: row index out of range");

    const std::size_t cand = params.feature_candidates == 0
                                 ? default_feature_candidates(X.cols())
                                 : params.feature_candidates;
    if (cand > X.cols()) throw ArgumentError("fit_tree: feature_candidates exceeds feature count");

    Builder builder(params, X, Z, cand);
    builder.tree.n_features = X.cols();
    builder.tree.n_labels = Z.cols();
    std::vector<std::size_t> root_rows(rows.begin(), rows.end());
    builder.build(root_rows, 1);
    return std::move(builder.tree);
}

std::vector<double> predict_tree(const Tree& tree, std::span<const double> x) {
    if (x.size() != tree.n_features) throw ArgumentError("predict_tree: feature width mismatch");
    std::size_t at = 0;
    while (!tree.nodes[at].is_leaf()) {
        const TreeNode& node = tree.nodes[at];
        at = static_cast<std::size_t>(
            x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return tree.nodes[at].leaf;
}

std::size_t tree_depth(const Tree& tree) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 1}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [at, depth] = stack.back();
        stack.pop_back();
        const TreeNode& node = tree.nodes[at];
        if (node.is_leaf()) {
            deepest = std::max(deepest, depth);
        } else {
            stack.push_back({static_cast<std::size_t>(node.left), depth + 1});
            stack.push_back({static_cast<std::size_t>(node.right), depth + 1});
        }
    }
    return deepest;
}

}  // namespace mldf
