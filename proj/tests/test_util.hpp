#pragma once

// Shared helpers for the test binaries: literal matrix builders, tie-free
// random generators, conversions to the oracle containers, and a synthetic
// separable dataset for forest and cascade tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "mldf/matrix.hpp"

namespace testutil {

inline mldf::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    const std::size_t l = m == 0 ? 0 : rows.begin()->size();
    mldf::Matrix out(m, l);
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) out(i, j++) = v;
        ++i;
    }
    return out;
}

inline mldf::BinaryMatrix bmat(std::initializer_list<std::initializer_list<int>> rows) {
    const std::size_t m = rows.size();
    const std::size_t l = m == 0 ? 0 : rows.begin()->size();
    mldf::BinaryMatrix out(m, l);
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (int v : r) out(i, j++) = static_cast<std::uint8_t>(v);
        ++i;
    }
    return out;
}

inline std::vector<std::vector<double>> to_rows(const mldf::Matrix& a) {
    std::vector<std::vector<double>> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        out[i].assign(r.begin(), r.end());
    }
    return out;
}

inline std::vector<std::vector<std::uint8_t>> to_rows(const mldf::BinaryMatrix& a) {
    std::vector<std::vector<std::uint8_t>> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        out[i].assign(r.begin(), r.end());
    }
    return out;
}

// Uniform scores in (0,1) with all m*l values pairwise distinct, so the
// rank-based measures and the closed-form confidences see no ties.
inline mldf::Matrix random_scores(std::mt19937_64& rng, std::size_t m, std::size_t l) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    mldf::Matrix out(m, l);
    for (;;) {
        for (double& v : out.storage()) v = uni(rng);
        std::vector<double> sorted(out.storage());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return out;
    }
}

inline mldf::BinaryMatrix random_truth(std::mt19937_64& rng, std::size_t m, std::size_t l,
                                       double density = 0.5) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    mldf::BinaryMatrix out(m, l);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < l; ++j) out(i, j) = uni(rng) < density;
    return out;
}

struct Synth {
    mldf::Matrix X;
    mldf::BinaryMatrix Y;
};

// Each label depends on its own feature coordinate only: y_j = x_j > 0.5.
// Labels are mutually independent, which the correlation probe tests rely
// on. flip_prob adds symmetric label noise. Regenerates until every label
// column and at least one row is non-degenerate.
inline Synth separable(std::mt19937_64& rng, std::size_t m, std::size_t d, std::size_t l,
                       double flip_prob = 0.0) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (;;) {
        Synth s{mldf::Matrix(m, d), mldf::BinaryMatrix(m, l)};
        for (double& v : s.X.storage()) v = uni(rng);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < l; ++j) {
                bool y = s.X(i, j) > 0.5;
                if (flip_prob > 0.0 && uni(rng) < flip_prob) y = !y;
                s.Y(i, j) = y;
            }
        bool cols_ok = true;
        for (std::size_t j = 0; j < l && cols_ok; ++j) {
            std::size_t ones = 0;
            for (std::size_t i = 0; i < m; ++i) ones += s.Y(i, j);
            cols_ok = ones > 0 && ones < m;
        }
        bool row_mixed = false;
        for (std::size_t i = 0; i < m && !row_mixed; ++i) {
            std::size_t ones = 0;
            for (std::size_t j = 0; j < l; ++j) ones += s.Y(i, j);
            row_mixed = ones > 0 && ones < l;
        }
        if (cols_ok && row_mixed) return s;
    }
}

// Fresh directory under the system temp root; callers clean up via
// remove_all when they care, the OS otherwise.
inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (;;) {
        auto p = base / (tag + "-" + std::to_string(rng() & 0xffffff));
        std::error_code ec;
        if (std::filesystem::create_directory(p, ec)) return p;
    }
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace testutil
