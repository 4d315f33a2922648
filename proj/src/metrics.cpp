#include "mldf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mldf {

bool lower_is_better(MeasureKind m) {
    switch (m) {
        case MeasureKind::HammingLoss:
        case MeasureKind::OneError:
        case MeasureKind::Coverage:
        case MeasureKind::RankingLoss:
            return true;
        case MeasureKind::AveragePrecision:
        case MeasureKind::MacroAUC:
            return false;
    }
    throw ArgumentError("unknown measure");
}

bool label_based(MeasureKind m) {
    return m == MeasureKind::HammingLoss || m == MeasureKind::MacroAUC;
}

bool better(MeasureKind m, double a, double b) {
    return lower_is_better(m) ? a < b : a > b;
}

bool worse(MeasureKind m, double a, double b) {
    return lower_is_better(m) ? a > b : a < b;
}

double worst_value(MeasureKind m) {
    return lower_is_better(m) ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
}

std::string measure_name(MeasureKind m) {
    switch (m) {
        case MeasureKind::HammingLoss: return "hamming-loss";
        case MeasureKind::OneError: return "one-error";
        case MeasureKind::Coverage: return "coverage";
        case MeasureKind::RankingLoss: return "ranking-loss";
        case MeasureKind::AveragePrecision: return "average-precision";
        case MeasureKind::MacroAUC: return "macro-auc";
    }
    throw ArgumentError("unknown measure");
}

MeasureKind measure_from_name(std::string_view name) {
    for (MeasureKind m : all_measures())
        if (measure_name(m) == name) return m;
    throw ArgumentError("unknown measure name: " + std::string(name));
}

BinaryMatrix binarize(const Matrix& scores, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ArgumentError("binarize: threshold must be in [0,1]");
    BinaryMatrix out(scores.rows(), scores.cols());
    for (std::size_t i = 0; i < scores.rows(); ++i)
        for (std::size_t j = 0; j < scores.cols(); ++j)
            out(i, j) = scores(i, j) > threshold ? 1 : 0;
    return out;
}

int rank_of(std::span<const double> row, std::size_t j) {
    int rank = 1;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] > row[j]) ++rank;
        else if (row[k] == row[j] && k < j) ++rank;
    }
    return rank;
}

namespace {

bool degenerate_row(std::span<const std::uint8_t> truth) {
    bool has_pos = false, has_neg = false;
    for (std::uint8_t y : truth) (y ? has_pos : has_neg) = true;
    return !(has_pos && has_neg);
}

std::size_t argmax_index(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

double one_error_row(std::span<const double> s, std::span<const std::uint8_t> y) {
    return y[argmax_index(s)] ? 0.0 : 1.0;
}

double coverage_row(std::span<const double> s, std::span<const std::uint8_t> y) {
    int max_rank = 0;
    for (std::size_t j = 0; j < y.size(); ++j)
        if (y[j]) max_rank = std::max(max_rank, rank_of(s, j));
    return static_cast<double>(max_rank - 1) / static_cast<double>(y.size());
}

double ranking_loss_row(std::span<const double> s, std::span<const std::uint8_t> y) {
    std::size_t pos = 0, neg = 0, violations = 0;
    for (std::size_t u = 0; u < y.size(); ++u) {
        if (!y[u]) continue;
        ++pos;
        for (std::size_t v = 0; v < y.size(); ++v)
            if (!y[v] && s[u] <= s[v]) ++violations;
    }
    for (std::uint8_t b : y) neg += b ? 0 : 1;
    return static_cast<double>(violations) / static_cast<double>(pos * neg);
}

double average_precision_row(std::span<const double> s, std::span<const std::uint8_t> y) {
    double sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (!y[j]) continue;
        ++pos;
        const int rank_j = rank_of(s, j);
        int at_or_above = 0;
        for (std::size_t k = 0; k < y.size(); ++k)
            if (y[k] && rank_of(s, k) <= rank_j) ++at_or_above;
        sum += static_cast<double>(at_or_above) / static_cast<double>(rank_j);
    }
    return sum / static_cast<double>(pos);
}

double hamming_col(std::span<const double> s, std::span<const std::uint8_t> y,
                   double threshold) {
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::uint8_t h = s[i] > threshold ? 1 : 0;
        if (h != y[i]) ++mismatches;
    }
    return static_cast<double>(mismatches) / static_cast<double>(y.size());
}

// Per-label AUC; ties (equal scores across a positive/negative pair)
// count as successes, matching the >= in the macro-AUC pair set.
double auc_col(std::span<const double> s, std::span<const std::uint8_t> y) {
    std::size_t pos = 0, neg = 0, successes = 0;
    for (std::size_t a = 0; a < y.size(); ++a) {
        if (!y[a]) continue;
        ++pos;
        for (std::size_t b = 0; b < y.size(); ++b)
            if (!y[b] && s[a] >= s[b]) ++successes;
    }
    for (std::uint8_t v : y) neg += v ? 0 : 1;
    return static_cast<double>(successes) / static_cast<double>(pos * neg);
}

}  // namespace

double evaluate_per_instance(MeasureKind m, std::span<const double> scores,
                             std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size())
        throw ArgumentError("evaluate_per_instance: length mismatch");
    if (label_based(m))
        throw ArgumentError("evaluate_per_instance: " + measure_name(m) +
                            " is label-based");
    if (degenerate_row(truth))
        throw UndefinedMeasureError("instance has empty relevant or irrelevant label set");
    switch (m) {
        case MeasureKind::OneError: return one_error_row(scores, truth);
        case MeasureKind::Coverage: return coverage_row(scores, truth);
        case MeasureKind::RankingLoss: return ranking_loss_row(scores, truth);
        case MeasureKind::AveragePrecision: return average_precision_row(scores, truth);
        default: break;
    }
    throw ArgumentError("unknown measure");
}

double evaluate_per_label(MeasureKind m, std::span<const double> scores,
                          std::span<const std::uint8_t> truth,
                          double binarization_threshold) {
    if (scores.size() != truth.size())
        throw ArgumentError("evaluate_per_label: length mismatch");
    switch (m) {
        case MeasureKind::HammingLoss:
            return hamming_col(scores, truth, binarization_threshold);
        case MeasureKind::MacroAUC:
            if (degenerate_row(truth))
                throw UndefinedMeasureError("label column is one-class");
            return auc_col(scores, truth);
        default:
            throw ArgumentError("evaluate_per_label: " + measure_name(m) +
                                " is instance-based");
    }
}

double evaluate(MeasureKind m, const Matrix& scores, const BinaryMatrix& truth,
                double binarization_threshold) {
    if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
        throw ArgumentError("evaluate: shape mismatch");
    if (scores.empty()) throw ArgumentError("evaluate: empty input");

    const std::size_t m_rows = scores.rows();
    const std::size_t l_cols = scores.cols();

    if (m == MeasureKind::HammingLoss) {
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < m_rows; ++i)
            for (std::size_t j = 0; j < l_cols; ++j) {
                const std::uint8_t h = scores(i, j) > binarization_threshold ? 1 : 0;
                if (h != truth(i, j)) ++mismatches;
            }
        return static_cast<double>(mismatches) / static_cast<double>(m_rows * l_cols);
    }

    if (m == MeasureKind::MacroAUC) {
        double sum = 0.0;
        std::size_t included = 0;
        for (std::size_t j = 0; j < l_cols; ++j) {
            const auto sc = scores.col(j);
            const auto tc = truth.col(j);
            if (degenerate_row(tc)) continue;
            sum += auc_col(sc, tc);
            ++included;
        }
        if (included == 0)
            throw UndefinedMeasureError("macro-auc: every label column is one-class");
        return sum / static_cast<double>(included);
    }

    double sum = 0.0;
    std::size_t included = 0;
    for (std::size_t i = 0; i < m_rows; ++i) {
        const auto s = scores.row(i);
        const auto y = truth.row(i);
        if (degenerate_row(y)) continue;
        sum += evaluate_per_instance(m, s, y);
        ++included;
    }
    if (included == 0)
        throw UndefinedMeasureError(measure_name(m) + ": every instance is degenerate");
    return sum / static_cast<double>(included);
}

}  // namespace mldf
