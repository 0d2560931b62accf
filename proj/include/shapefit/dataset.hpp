#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace shapefit {

/// Dense column-major matrix. Columns are the natural unit for additive
/// models, so `col(j)` is contiguous.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

    std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const noexcept {
        return {data_.data() + j * rows_, rows_};
    }

    const std::vector<double>& data() const noexcept { return data_; }

    /// Rows selected by index, in the given order.
    Matrix select_rows(std::span<const std::size_t> idx) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Dataset {
    Matrix X;
    std::vector<double> y;
    std::vector<std::string> names;  // optional column names, size p when present

    std::size_t n() const noexcept { return X.rows(); }
    std::size_t p() const noexcept { return X.cols(); }

    /// Throws std::invalid_argument on shape mismatch, n < 2, or non-finite values.
    void validate() const;

    Dataset select_rows(std::span<const std::size_t> idx) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace shapefit
