#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "mldf/matrix.hpp"

namespace mldf {

// The six supported multi-label performance measures. Hamming loss and
// macro-AUC are label-based (computed per score-matrix column); the other
// four are instance-based (computed per row).
enum class MeasureKind {
    HammingLoss,
    OneError,
    Coverage,
    RankingLoss,
    AveragePrecision,
    MacroAUC,
};

constexpr std::array<MeasureKind, 6> all_measures() {
    return {MeasureKind::HammingLoss,  MeasureKind::OneError,
            MeasureKind::Coverage,     MeasureKind::RankingLoss,
            MeasureKind::AveragePrecision, MeasureKind::MacroAUC};
}

bool lower_is_better(MeasureKind m);
bool label_based(MeasureKind m);

// Strict orientation-aware comparisons.
bool better(MeasureKind m, double a, double b);
bool worse(MeasureKind m, double a, double b);

// Initial value for best-so-far tracking (+inf or -inf by orientation).
double worst_value(MeasureKind m);

// Canonical CLI/config names: hamming-loss, one-error, coverage,
// ranking-loss, average-precision, macro-auc.
std::string measure_name(MeasureKind m);
MeasureKind measure_from_name(std::string_view name);

// Entry is 1 iff score > threshold (strictly).
BinaryMatrix binarize(const Matrix& scores, double threshold);

// 1-based rank of label j within a score row: 1 + number of strictly
// greater scores, ties broken in favor of the lower index.
int rank_of(std::span<const double> row, std::size_t j);

// Whole-matrix measure value in [0,1]. Degenerate instances (empty
// relevant or irrelevant set) are excluded from the four instance-based
// averages; one-class label columns are excluded from macro-AUC. Throws
// UndefinedMeasureError when everything is excluded.
double evaluate(MeasureKind m, const Matrix& scores, const BinaryMatrix& truth,
                double binarization_threshold = 0.5);

// Single-row value of an instance-based measure; throws
// UndefinedMeasureError on a degenerate row.
double evaluate_per_instance(MeasureKind m, std::span<const double> scores,
                             std::span<const std::uint8_t> truth);

// Single-column value of a label-based measure; per-label AUC throws
// UndefinedMeasureError on a one-class column.
double evaluate_per_label(MeasureKind m, std::span<const double> scores,
                          std::span<const std::uint8_t> truth,
                          double binarization_threshold = 0.5);

}  // namespace mldf
