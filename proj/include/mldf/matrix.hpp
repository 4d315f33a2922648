#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mldf/error.hpp"

namespace mldf {

// Dense row-major matrix of doubles. Used for both feature matrices and
// score matrices; scores live in [0,1] by construction of the producers.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double> col(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
        return out;
    }

    void set_col(std::size_t j, std::span<const double> v) {
        for (std::size_t i = 0; i < rows_; ++i) data_[i * cols_ + j] = v[i];
    }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Dense row-major binary matrix; entries are strictly 0 or 1.
class BinaryMatrix {
public:
    BinaryMatrix() = default;
    BinaryMatrix(std::size_t rows, std::size_t cols, std::uint8_t fill = 0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    std::uint8_t& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    std::uint8_t operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<std::uint8_t> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const std::uint8_t> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<std::uint8_t> col(std::size_t j) const {
        std::vector<std::uint8_t> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
        return out;
    }

    friend bool operator==(const BinaryMatrix& a, const BinaryMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

// Horizontal concatenation [left | right]; row counts must agree.
inline Matrix hconcat(const Matrix& left, const Matrix& right) {
    if (left.empty()) return right;
    if (right.empty()) return left;
    if (left.rows() != right.rows())
        throw ArgumentError("hconcat: row count mismatch");
    Matrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t i = 0; i < left.rows(); ++i) {
        for (std::size_t j = 0; j < left.cols(); ++j) out(i, j) = left(i, j);
        for (std::size_t j = 0; j < right.cols(); ++j) out(i, left.cols() + j) = right(i, j);
    }
    return out;
}

}  // namespace mldf
