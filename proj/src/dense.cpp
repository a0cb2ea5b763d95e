#include "lcgnn/dense.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "lcgnn/errors.hpp"

namespace lcgnn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EMat>;
using Map = Eigen::Map<EMat>;

ConstMap map_of(const DenseMatrix& m) { return ConstMap(m.values.data(), m.rows, m.cols); }

}  // namespace

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw ShapeMismatch("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                            " times " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    DenseMatrix out(a.rows, b.cols);
    Map(out.values.data(), out.rows, out.cols).noalias() = map_of(a) * map_of(b);
    return out;
}

DenseMatrix hconcat(std::span<const DenseMatrix> parts) {
    if (parts.empty()) throw ShapeMismatch("hconcat: no operands");
    Index rows = parts.front().rows;
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows != rows) throw ShapeMismatch("hconcat: row counts differ");
        cols += p.cols;
    }
    DenseMatrix out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        Index c0 = 0;
        for (const auto& p : parts) {
            std::copy_n(p.values.data() + r * p.cols, p.cols, out.values.data() + r * cols + c0);
            c0 += p.cols;
        }
    }
    return out;
}

DenseMatrix cwise_max(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("cwise_max: shapes differ");
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = std::max(a.values[i], b.values[i]);
    return out;
}

DenseMatrix relu(const DenseMatrix& a) {
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = std::max(a.values[i], 0.0);
    return out;
}

DenseMatrix softmax_rows(const DenseMatrix& a) {
    DenseMatrix out(a.rows, a.cols);
    for (Index r = 0; r < a.rows; ++r) {
        const double* row = a.values.data() + r * a.cols;
        double* dst = out.values.data() + r * a.cols;
        double m = row[0];
        for (Index c = 1; c < a.cols; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (Index c = 0; c < a.cols; ++c) {
            dst[c] = std::exp(row[c] - m);
            sum += dst[c];
        }
        for (Index c = 0; c < a.cols; ++c) dst[c] /= sum;
    }
    return out;
}

DenseMatrix scaled(const DenseMatrix& a, double s) {
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * s;
    return out;
}

void add_scaled(DenseMatrix& acc, const DenseMatrix& a, double s) {
    if (!acc.same_shape(a)) throw ShapeMismatch("add_scaled: shapes differ");
    for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += a.values[i] * s;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("max_abs_diff: shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double v : a.values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace lcgnn
