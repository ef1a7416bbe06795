#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdmrg {

using Index = std::ptrdiff_t;

/// Non-owning column-major view: element (i, j) lives at data[i + j * ld].
template <class T>
struct BasicMatrixView {
    T* data = nullptr;
    Index rows = 0;
    Index cols = 0;
    Index ld = 0;

    T& operator()(Index i, Index j) const { return data[i + j * ld]; }
    bool empty() const { return rows == 0 || cols == 0; }

    operator BasicMatrixView<const T>() const { return {data, rows, cols, ld}; }
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Dense column-major real matrix with contiguous storage (ld == rows).
class Matrix {
public:
    Matrix() = default;
    Matrix(Index rows, Index cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    static Matrix identity(Index n) {
        Matrix m(n, n);
        for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return rows_ * cols_; }

    double& operator()(Index i, Index j) {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i + j * rows_)];
    }
    double operator()(Index i, Index j) const {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return data_[static_cast<std::size_t>(i + j * rows_)];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    MatrixView view() { return {data_.data(), rows_, cols_, std::max<Index>(rows_, 1)}; }
    ConstMatrixView view() const { return {data_.data(), rows_, cols_, std::max<Index>(rows_, 1)}; }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (Index j = 0; j < cols_; ++j)
            for (Index i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, v < 0 ? -v : v);
        return m;
    }

    bool operator==(const Matrix&) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> data_;
};

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (Index k = 0; k < a.size(); ++k) {
        double d = a.data()[k] - b.data()[k];
        m = std::max(m, d < 0 ? -d : d);
    }
    return m;
}

}  // namespace sdmrg
