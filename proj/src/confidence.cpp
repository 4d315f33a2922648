#include "mldf/confidence.hpp"

#include <algorithm>
#include <functional>

namespace mldf {

namespace {

// Probability that the ground truth is one of the n+1 "prefix-positive"
// patterns of the descending-sorted slice, under independent Bernoulli(p):
// sum_{j=0..n} prod_{k<=j} p_k * prod_{k>j} (1-p_k). This is the chance
// of a perfect ranking (zero ranking loss / AUC 1).
double prefix_pattern_mass(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    std::vector<double> suffix(n + 1, 1.0);
    for (std::size_t k = n; k > 0; --k) suffix[k - 1] = suffix[k] * (1.0 - sorted[k - 1]);
    double total = 0.0;
    double prefix = 1.0;
    for (std::size_t j = 0; j <= n; ++j) {
        total += prefix * suffix[j];
        if (j < n) prefix *= sorted[j];
    }
    return total;
}

double hamming_confidence(std::span<const double> slice) {
    double sum = 0.0;
    for (double p : slice) sum += p > 0.5 ? p : 1.0 - p;
    return sum / static_cast<double>(slice.size());
}

double coverage_confidence(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    std::vector<double> suffix(n + 1, 1.0);
    for (std::size_t k = n; k > 0; --k) suffix[k - 1] = suffix[k] * (1.0 - sorted[k - 1]);
    // j runs 1..n: the j=0 term carries a factor of j and vanishes.
    double sum = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
        sum += static_cast<double>(j) * sorted[j - 1] * suffix[j];
    return 1.0 - sum / static_cast<double>(n);
}

}  // namespace

double confidence_of_slice(MeasureKind m, std::span<const double> slice) {
    if (slice.empty()) throw ArgumentError("confidence: empty slice");
    switch (m) {
        case MeasureKind::HammingLoss:
            return hamming_confidence(slice);
        case MeasureKind::OneError:
            return *std::max_element(slice.begin(), slice.end());
        default:
            break;
    }
    std::vector<double> sorted(slice.begin(), slice.end());
    std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());
    switch (m) {
        case MeasureKind::Coverage:
            return coverage_confidence(sorted);
        case MeasureKind::RankingLoss:
        case MeasureKind::AveragePrecision:
        case MeasureKind::MacroAUC:
            return prefix_pattern_mass(sorted);
        default:
            break;
    }
    throw ArgumentError("unknown measure");
}

ConfidenceVector confidence(MeasureKind m, const Matrix& P) {
    if (P.empty()) throw ArgumentError("confidence: empty matrix");
    ConfidenceVector out;
    out.measure = m;
    if (label_based(m)) {
        out.axis = Axis::Columns;
        out.values.resize(P.cols());
        for (std::size_t j = 0; j < P.cols(); ++j)
            out.values[j] = confidence_of_slice(m, P.col(j));
    } else {
        out.axis = Axis::Rows;
        out.values.resize(P.rows());
        for (std::size_t i = 0; i < P.rows(); ++i)
            out.values[i] = confidence_of_slice(m, P.row(i));
    }
    return out;
}

}  // namespace mldf
