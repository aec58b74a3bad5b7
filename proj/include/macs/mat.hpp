#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "macs/errors.hpp"

namespace macs {

/// Dense real matrix, row-major. Constructors reject NaN/Inf so downstream
/// code never has to branch on non-finite values.
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols);  // zero-filled
    Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat zeros(std::size_t rows, std::size_t cols);
    static Mat diag(const std::vector<double>& d);
    static Mat col_vec(const std::vector<double>& v);
    static Mat row_vec(const std::vector<double>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> entries() const { return data_; }
    std::span<double> entries() { return data_; }

    Mat transposed() const;
    Mat block(std::size_t r0, std::size_t c0, std::size_t nrows, std::size_t ncols) const;
    void set_block(std::size_t r0, std::size_t c0, const Mat& m);

    Mat& operator+=(const Mat& rhs);
    Mat& operator-=(const Mat& rhs);
    Mat& operator*=(double s);

    double max_abs() const;
    double norm_fro() const;
    bool all_finite() const;

    bool same_shape(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;

    void require_finite(const char* where) const;
};

Mat operator+(Mat lhs, const Mat& rhs);
Mat operator-(Mat lhs, const Mat& rhs);
Mat operator*(const Mat& lhs, const Mat& rhs);
Mat operator*(double s, Mat m);
Mat operator*(Mat m, double s);
Mat operator-(Mat m);

bool operator==(const Mat& a, const Mat& b);

namespace kernels {

/// Reference product, plain triple loop. Kept as the comparison point for
/// the OpenMP path and used directly by the tests.
Mat mul_serial(const Mat& lhs, const Mat& rhs);

/// OpenMP product, rows distributed across threads. Per-element summation
/// order matches mul_serial, so results are bit-identical.
Mat mul_parallel(const Mat& lhs, const Mat& rhs);

/// Work threshold (element count of the result times inner dimension)
/// above which operator* dispatches to mul_parallel.
inline constexpr std::size_t parallel_flop_threshold = 64 * 64 * 64;

}  // namespace kernels

// ---- small vector helpers (column vectors are n-by-1 Mat) ----------------

Mat hstack(const std::vector<Mat>& parts);
Mat vstack(const std::vector<Mat>& parts);
Mat block_diag(const std::vector<Mat>& blocks);
Mat kron(const Mat& a, const Mat& b);

double dot(const Mat& a, const Mat& b);
double norm2(const Mat& v);

}  // namespace macs
