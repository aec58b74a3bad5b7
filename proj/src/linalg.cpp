#include "macs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace macs {

namespace {

constexpr double kPivotRelTol = 1e-12;

}  // namespace

Mat solve_linear(const Mat& a, const Mat& b) {
    if (!a.square()) {
        throw DimensionError("solve_linear: coefficient matrix must be square");
    }
    if (b.rows() != a.rows()) {
        throw DimensionError("solve_linear: rhs row count " + std::to_string(b.rows()) +
                             " does not match system size " + std::to_string(a.rows()));
    }
    const std::size_t n = a.rows();
    const double scale = a.max_abs();
    if (scale == 0.0) {
        throw SingularMatrixError("solve_linear: zero matrix");
    }

    Mat lu = a;
    Mat x = b;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(lu(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best <= kPivotRelTol * scale) {
            throw SingularMatrixError("solve_linear: pivot " + std::to_string(best) +
                                      " below relative tolerance at column " +
                                      std::to_string(col));
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(lu(col, c), lu(piv, c));
            for (std::size_t c = 0; c < x.cols(); ++c) std::swap(x(col, c), x(piv, c));
        }
        const double d = lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = lu(r, col) / d;
            if (f == 0.0) continue;
            lu(r, col) = f;
            for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= f * lu(col, c);
            for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) -= f * x(col, c);
        }
    }

    for (std::size_t ri = n; ri-- > 0;) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double s = x(ri, c);
            for (std::size_t k = ri + 1; k < n; ++k) s -= lu(ri, k) * x(k, c);
            x(ri, c) = s / lu(ri, ri);
        }
    }
    return x;
}

Mat inverse(const Mat& a) { return solve_linear(a, Mat::identity(a.rows())); }

// ---- general eigenvalues --------------------------------------------------

namespace {

using Cx = std::complex<double>;

// Parlett-Reinsch balancing: diagonal similarity scaling by powers of two.
void balance(Mat& a) {
    const std::size_t n = a.rows();
    constexpr double radix = 2.0;
    bool converged = false;
    while (!converged) {
        converged = true;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0, col = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                col += std::abs(a(j, i));
                row += std::abs(a(i, j));
            }
            if (col == 0.0 || row == 0.0) continue;
            double f = 1.0;
            const double s = col + row;
            while (col < row / radix) {
                col *= radix;
                row /= radix;
                f *= radix;
            }
            while (col >= row * radix) {
                col /= radix;
                row *= radix;
                f /= radix;
            }
            if ((col + row) < 0.95 * s && f != 1.0) {
                converged = false;
                for (std::size_t j = 0; j < n; ++j) a(i, j) /= f;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form (real arithmetic).
void to_hessenberg(Mat& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    std::vector<double> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = a(k + 1, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;

        // A <- (I - 2 v v^T / v^T v) A
        for (std::size_t c = k; c < n; ++c) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, c);
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k + 1; i < n; ++i) a(i, c) -= s * v[i];
        }
        // A <- A (I - 2 v v^T / v^T v)
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += a(r, i) * v[i];
            s = 2.0 * s / vnorm2;
            for (std::size_t i = k + 1; i < n; ++i) a(r, i) -= s * v[i];
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// Eigenvalues of a complex 2x2 block.
std::pair<Cx, Cx> eig2(Cx a, Cx b, Cx c, Cx d) {
    const Cx tr = a + d;
    const Cx det = a * d - b * c;
    const Cx disc = std::sqrt(tr * tr - 4.0 * det);
    return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

// Explicitly shifted QR iteration with Givens rotations on a complex upper
// Hessenberg matrix. Deflation at negligible subdiagonals.
std::vector<Cx> hessenberg_qr_eigenvalues(const Mat& hess) {
    const std::size_t n = hess.rows();
    std::vector<Cx> h(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) h[r * n + c] = hess(r, c);
    auto H = [&](std::size_t r, std::size_t c) -> Cx& { return h[r * n + c]; };

    std::vector<Cx> eig(n);
    const double eps = 1e-16;
    std::size_t hi = n;  // active block is [lo, hi)
    std::size_t iters_on_block = 0;

    while (hi > 0) {
        // Deflate trailing 1x1 / locate active block start.
        std::size_t lo = hi - 1;
        while (lo > 0) {
            const double off = std::abs(H(lo, lo - 1));
            const double diag = std::abs(H(lo - 1, lo - 1)) + std::abs(H(lo, lo));
            if (off <= eps * std::max(diag, 1e-300)) {
                H(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi - 1) {
            eig[hi - 1] = H(hi - 1, hi - 1);
            --hi;
            iters_on_block = 0;
            continue;
        }
        if (lo == hi - 2) {
            auto [l1, l2] = eig2(H(lo, lo), H(lo, lo + 1), H(lo + 1, lo), H(lo + 1, lo + 1));
            eig[hi - 2] = l1;
            eig[hi - 1] = l2;
            hi -= 2;
            iters_on_block = 0;
            continue;
        }

        if (++iters_on_block > 30 * (hi - lo)) {
            throw ConvergenceError("eigenvalues: QR iteration failed to converge");
        }

        // Wilkinson shift: eigenvalue of the trailing 2x2 closest to H(hi-1,hi-1).
        Cx shift;
        {
            auto [l1, l2] =
                eig2(H(hi - 2, hi - 2), H(hi - 2, hi - 1), H(hi - 1, hi - 2), H(hi - 1, hi - 1));
            const Cx t = H(hi - 1, hi - 1);
            shift = std::abs(l1 - t) < std::abs(l2 - t) ? l1 : l2;
            if (iters_on_block % 12 == 0) {
                // Exceptional shift to break symmetry-induced stalls.
                shift = H(hi - 1, hi - 1) +
                        Cx(0.75 * std::abs(H(hi - 1, hi - 2)), 0.0);
            }
        }

        // QR step: factor (H - shift I) with Givens rotations, then form RQ + shift I.
        for (std::size_t i = lo; i < hi; ++i) H(i, i) -= shift;
        std::vector<double> cs(hi - lo - 1);
        std::vector<Cx> sn(hi - lo - 1);
        for (std::size_t i = lo; i + 1 < hi; ++i) {
            Cx f = H(i, i);
            Cx g = H(i + 1, i);
            const double fa = std::abs(f), ga = std::abs(g);
            double c;
            Cx s;
            if (ga == 0.0) {
                c = 1.0;
                s = 0.0;
            } else if (fa == 0.0) {
                c = 0.0;
                s = std::conj(g) / ga;
            } else {
                const double r = std::hypot(fa, ga);
                c = fa / r;
                s = (f / fa) * std::conj(g) / r;
            }
            cs[i - lo] = c;
            sn[i - lo] = s;
            for (std::size_t col = i; col < hi; ++col) {
                const Cx t1 = H(i, col);
                const Cx t2 = H(i + 1, col);
                H(i, col) = c * t1 + s * t2;
                H(i + 1, col) = -std::conj(s) * t1 + c * t2;
            }
        }
        for (std::size_t i = lo; i + 1 < hi; ++i) {
            const double c = cs[i - lo];
            const Cx s = sn[i - lo];
            const std::size_t rtop = lo;
            for (std::size_t row = rtop; row <= std::min(i + 1, hi - 1); ++row) {
                const Cx t1 = H(row, i);
                const Cx t2 = H(row, i + 1);
                H(row, i) = c * t1 + std::conj(s) * t2;
                H(row, i + 1) = -s * t1 + c * t2;
            }
        }
        for (std::size_t i = lo; i < hi; ++i) H(i, i) += shift;
    }
    return eig;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Mat& m) {
    if (!m.square()) {
        throw DimensionError("eigenvalues: matrix must be square");
    }
    const std::size_t n = m.rows();
    if (n == 0) return {};
    if (n == 1) return {Cx(m(0, 0), 0.0)};
    Mat work = m;
    balance(work);
    to_hessenberg(work);
    return hessenberg_qr_eigenvalues(work);
}

double spectral_radius(const Mat& m) {
    double rho = 0.0;
    for (const auto& l : eigenvalues(m)) rho = std::max(rho, std::abs(l));
    return rho;
}

// ---- symmetric Jacobi ------------------------------------------------------

SymEig sym_eigen(const Mat& m, bool want_vectors) {
    if (!m.square()) {
        throw DimensionError("sym_eigen: matrix must be square");
    }
    const std::size_t n = m.rows();
    Mat a(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) a(r, c) = 0.5 * (m(r, c) + m(c, r));
    Mat v = want_vectors ? Mat::identity(n) : Mat();

    auto offdiag = [&]() {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) s += a(r, c) * a(r, c);
        return std::sqrt(2.0 * s);
    };

    const double scale = std::max(a.max_abs(), 1e-300);
    const double tol = 1e-15 * scale * n;
    for (int sweep = 0; sweep < 100 && offdiag() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double vkp = v(k, p), vkq = v(k, q);
                        v(k, p) = c * vkp - s * vkq;
                        v(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    SymEig out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return out.values[x] < out.values[y]; });
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = out.values[order[i]];
    out.values = std::move(sorted);
    if (want_vectors) {
        out.vectors = Mat(n, n);
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

double max_singular_value(const Mat& m) {
    if (m.empty()) return 0.0;
    const bool tall = m.rows() >= m.cols();
    const Mat g = tall ? m.transposed() * m : m * m.transposed();
    const SymEig e = sym_eigen(g, /*want_vectors=*/false);
    const double lmax = e.values.empty() ? 0.0 : e.values.back();
    return std::sqrt(std::max(lmax, 0.0));
}

namespace {

double penrose_defect_of(const Mat& m, const Mat& x) {
    double worst = (m * x * m - m).max_abs();
    worst = std::max(worst, (x * m * x - x).max_abs());
    const Mat mx = m * x;
    const Mat xm = x * m;
    worst = std::max(worst, (mx - mx.transposed()).max_abs());
    worst = std::max(worst, (xm - xm.transposed()).max_abs());
    return worst;
}

}  // namespace

Mat pseudo_inverse(const Mat& m) {
    if (m.empty()) return m.transposed();
    const bool tall = m.rows() >= m.cols();
    const Mat g = tall ? m.transposed() * m : m * m.transposed();
    const SymEig e = sym_eigen(g);
    const std::size_t k = g.rows();
    const double lmax = std::max(e.values.back(), 0.0);
    const double cutoff = lmax * static_cast<double>(std::max(m.rows(), m.cols())) * 1e-13;

    // g^+ = V diag(1/lambda on the retained spectrum) V^T
    Mat gpinv(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        const double l = e.values[i];
        if (l <= cutoff || l <= 0.0) continue;
        const double inv = 1.0 / l;
        for (std::size_t r = 0; r < k; ++r) {
            const double vr = e.vectors(r, i) * inv;
            if (vr == 0.0) continue;
            for (std::size_t c = 0; c < k; ++c) gpinv(r, c) += vr * e.vectors(c, i);
        }
    }
    Mat x = tall ? gpinv * m.transposed() : m.transposed() * gpinv;

    // The Gram squaring costs half the digits near the rank cutoff;
    // Newton-Schulz steps restore them. Keep the best iterate seen.
    double best_defect = penrose_defect_of(m, x);
    Mat best = x;
    for (int it = 0; it < 4 && best_defect > 1e-14; ++it) {
        x = 2.0 * x - x * (m * x);
        if (!x.all_finite()) break;
        const double defect = penrose_defect_of(m, x);
        if (defect < best_defect) {
            best_defect = defect;
            best = x;
        } else {
            break;
        }
    }
    return best;
}

bool is_positive_definite(const Mat& m) {
    if (!m.square()) {
        throw DimensionError("is_positive_definite: matrix must be square");
    }
    double asym = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = r + 1; c < m.cols(); ++c)
            asym = std::max(asym, std::abs(m(r, c) - m(c, r)));
    if (asym > 1e-10 * std::max(1.0, m.max_abs())) {
        throw ContractError("is_positive_definite: input asymmetric beyond tolerance");
    }
    const SymEig e = sym_eigen(m, /*want_vectors=*/false);
    if (e.values.empty()) return true;
    const double lmax = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    return e.values.front() > 1e-10 * std::max(1.0, lmax);
}

bool is_positive_semidefinite(const Mat& m) {
    if (!m.square()) {
        throw DimensionError("is_positive_semidefinite: matrix must be square");
    }
    const SymEig e = sym_eigen(m, /*want_vectors=*/false);
    if (e.values.empty()) return true;
    const double lmax = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    return e.values.front() > -1e-10 * std::max(1.0, lmax);
}

std::size_t numerical_rank(const Mat& m, double rel_tol) {
    if (m.empty()) return 0;
    const bool tall = m.rows() >= m.cols();
    const Mat g = tall ? m.transposed() * m : m * m.transposed();
    const SymEig e = sym_eigen(g, /*want_vectors=*/false);
    const double lmax = std::max(e.values.back(), 0.0);
    if (lmax == 0.0) return 0;
    const double cutoff = lmax * rel_tol * rel_tol;
    std::size_t rank = 0;
    for (double l : e.values) {
        if (l > cutoff) ++rank;
    }
    return rank;
}

}  // namespace macs
