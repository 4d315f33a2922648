#pragma once

#include <span>
#include <vector>

#include "mldf/matrix.hpp"
#include "mldf/metrics.hpp"

namespace mldf {

enum class Axis { Rows, Columns };

// Per-row (instance-based measure) or per-column (label-based measure)
// confidence of an averaged score matrix P.
struct ConfidenceVector {
    MeasureKind measure;
    Axis axis;
    std::vector<double> values;  // length m for rows, l for columns
};

// Confidence of a single row/column slice. Sorting (descending) happens
// internally; callers pass slices in natural order.
double confidence_of_slice(MeasureKind m, std::span<const double> slice);

// Computes confidence along the axis dictated by the measure's basis:
// rows for instance-based measures, columns for label-based ones.
ConfidenceVector confidence(MeasureKind m, const Matrix& P);

}  // namespace mldf
