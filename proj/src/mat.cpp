#include "macs/mat.hpp"

#include <cmath>
#include <string>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macs {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

[[noreturn]] void throw_shape_mismatch(const char* op, const Mat& a, const Mat& b) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.rows(), a.cols()) +
                         " and " + shape_str(b.rows(), b.cols()) + " are incompatible");
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Mat: entry count " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(rows_, cols_));
    }
    require_finite("Mat(entries)");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
        if (row.size() != cols_) {
            throw DimensionError("Mat: ragged initializer list");
        }
        data_.insert(data_.end(), row.begin(), row.end());
    }
    require_finite("Mat(init-list)");
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }

Mat Mat::diag(const std::vector<double>& d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    m.require_finite("Mat::diag");
    return m;
}

Mat Mat::col_vec(const std::vector<double>& v) { return Mat(v.size(), 1, v); }

Mat Mat::row_vec(const std::vector<double>& v) { return Mat(1, v.size(), v); }

void Mat::require_finite(const char* where) const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            throw NonFiniteError(std::string(where) + ": non-finite entry");
        }
    }
}

Mat Mat::transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nrows, std::size_t ncols) const {
    if (r0 + nrows > rows_ || c0 + ncols > cols_) {
        throw DimensionError("Mat::block: region exceeds matrix bounds");
    }
    Mat b(nrows, ncols);
    for (std::size_t r = 0; r < nrows; ++r)
        for (std::size_t c = 0; c < ncols; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
    return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& m) {
    if (r0 + m.rows() > rows_ || c0 + m.cols() > cols_) {
        throw DimensionError("Mat::set_block: region exceeds matrix bounds");
    }
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) (*this)(r0 + r, c0 + c) = m(r, c);
}

Mat& Mat::operator+=(const Mat& rhs) {
    if (!same_shape(rhs)) throw_shape_mismatch("operator+", *this, rhs);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& rhs) {
    if (!same_shape(rhs)) throw_shape_mismatch("operator-", *this, rhs);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

double Mat::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

double Mat::norm_fro() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

bool Mat::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Mat operator+(Mat lhs, const Mat& rhs) {
    lhs += rhs;
    return lhs;
}

Mat operator-(Mat lhs, const Mat& rhs) {
    lhs -= rhs;
    return lhs;
}

Mat operator*(double s, Mat m) {
    m *= s;
    return m;
}

Mat operator*(Mat m, double s) {
    m *= s;
    return m;
}

Mat operator-(Mat m) {
    m *= -1.0;
    return m;
}

bool operator==(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            if (a(r, c) != b(r, c)) return false;
    return true;
}

namespace kernels {

namespace {

inline void mul_row(const Mat& lhs, const Mat& rhs, Mat& out, std::size_t r) {
    const std::size_t inner = lhs.cols();
    const std::size_t nc = rhs.cols();
    for (std::size_t k = 0; k < inner; ++k) {
        const double a = lhs(r, k);
        if (a == 0.0) continue;
        for (std::size_t c = 0; c < nc; ++c) {
            out(r, c) += a * rhs(k, c);
        }
    }
}

}  // namespace

Mat mul_serial(const Mat& lhs, const Mat& rhs) {
    if (lhs.cols() != rhs.rows()) throw_shape_mismatch("operator*", lhs, rhs);
    Mat out(lhs.rows(), rhs.cols());
    for (std::size_t r = 0; r < lhs.rows(); ++r) mul_row(lhs, rhs, out, r);
    return out;
}

Mat mul_parallel(const Mat& lhs, const Mat& rhs) {
    if (lhs.cols() != rhs.rows()) throw_shape_mismatch("operator*", lhs, rhs);
    Mat out(lhs.rows(), rhs.cols());
    const std::ptrdiff_t nr = static_cast<std::ptrdiff_t>(lhs.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t r = 0; r < nr; ++r) {
        mul_row(lhs, rhs, out, static_cast<std::size_t>(r));
    }
    return out;
}

}  // namespace kernels

Mat operator*(const Mat& lhs, const Mat& rhs) {
    const std::size_t flops = lhs.rows() * rhs.cols() * lhs.cols();
    if (flops >= kernels::parallel_flop_threshold) {
        return kernels::mul_parallel(lhs, rhs);
    }
    return kernels::mul_serial(lhs, rhs);
}

Mat hstack(const std::vector<Mat>& parts) {
    if (parts.empty()) return {};
    std::size_t cols = 0;
    for (const Mat& p : parts) {
        if (p.rows() != parts.front().rows()) {
            throw DimensionError("hstack: row counts differ");
        }
        cols += p.cols();
    }
    Mat out(parts.front().rows(), cols);
    std::size_t c0 = 0;
    for (const Mat& p : parts) {
        out.set_block(0, c0, p);
        c0 += p.cols();
    }
    return out;
}

Mat vstack(const std::vector<Mat>& parts) {
    if (parts.empty()) return {};
    std::size_t rows = 0;
    for (const Mat& p : parts) {
        if (p.cols() != parts.front().cols()) {
            throw DimensionError("vstack: column counts differ");
        }
        rows += p.rows();
    }
    Mat out(rows, parts.front().cols());
    std::size_t r0 = 0;
    for (const Mat& p : parts) {
        out.set_block(r0, 0, p);
        r0 += p.rows();
    }
    return out;
}

Mat block_diag(const std::vector<Mat>& blocks) {
    std::size_t rows = 0, cols = 0;
    for (const Mat& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out(rows, cols);
    std::size_t r0 = 0, c0 = 0;
    for (const Mat& b : blocks) {
        out.set_block(r0, c0, b);
        r0 += b.rows();
        c0 += b.cols();
    }
    return out;
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t ar = 0; ar < a.rows(); ++ar)
        for (std::size_t ac = 0; ac < a.cols(); ++ac) {
            const double s = a(ar, ac);
            if (s == 0.0) continue;
            for (std::size_t br = 0; br < b.rows(); ++br)
                for (std::size_t bc = 0; bc < b.cols(); ++bc)
                    out(ar * b.rows() + br, ac * b.cols() + bc) = s * b(br, bc);
        }
    return out;
}

double dot(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != 1 || b.cols() != 1) {
        throw DimensionError("dot: expects two column vectors of equal length");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, 0) * b(i, 0);
    return s;
}

double norm2(const Mat& v) { return v.norm_fro(); }

}  // namespace macs
