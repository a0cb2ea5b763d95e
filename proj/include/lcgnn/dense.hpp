#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lcgnn {

using Index = std::int64_t;

/// Row-major dense matrix of 64-bit floats.
struct DenseMatrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<double> values;  // rows*cols entries, row-major

    DenseMatrix() = default;
    DenseMatrix(Index r, Index c) : rows(r), cols(c), values(static_cast<std::size_t>(r * c), 0.0) {}

    double& at(Index r, Index c) { return values[static_cast<std::size_t>(r * cols + c)]; }
    double at(Index r, Index c) const { return values[static_cast<std::size_t>(r * cols + c)]; }

    static DenseMatrix zeros(Index r, Index c) { return DenseMatrix(r, c); }
    static DenseMatrix identity(Index n);

    bool same_shape(const DenseMatrix& other) const { return rows == other.rows && cols == other.cols; }
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hconcat(std::span<const DenseMatrix> parts);
DenseMatrix cwise_max(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix relu(const DenseMatrix& a);

/// Row-wise softmax with per-row max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& a);

DenseMatrix scaled(const DenseMatrix& a, double s);
void add_scaled(DenseMatrix& acc, const DenseMatrix& a, double s);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);

}  // namespace lcgnn
