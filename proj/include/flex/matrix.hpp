#ifndef FLEX_MATRIX_HPP
#define FLEX_MATRIX_HPP

#include <cassert>
#include <cstddef>
#include <vector>

namespace flex {

// Dense row-major matrix of doubles. Deliberately minimal: the project only
// needs storage, element access and a few elementwise helpers.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int i, int j) {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < rows && j >= 0 && j < cols);
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

inline double matrix_max(const Matrix& a) {
    double best = a.data.empty() ? 0.0 : a.data[0];
    for (double v : a.data) best = v > best ? v : best;
    return best;
}

} // namespace flex

#endif
