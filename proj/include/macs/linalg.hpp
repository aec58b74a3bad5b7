#pragma once

#include <complex>
#include <vector>

#include "macs/mat.hpp"

namespace macs {

/// Solve a*x = b with partially pivoted LU. b may carry several right-hand
/// sides. Throws SingularMatrixError when a pivot falls below 1e-12 relative
/// to the matrix scale.
Mat solve_linear(const Mat& a, const Mat& b);

/// Inverse via solve_linear against the identity.
Mat inverse(const Mat& a);

/// All eigenvalues of a general real square matrix: balance, Householder
/// reduction to Hessenberg form, then explicitly shifted QR iteration in
/// complex arithmetic (Wilkinson shifts). Handles nonsymmetric matrices and
/// complex-conjugate pairs.
std::vector<std::complex<double>> eigenvalues(const Mat& m);

/// max |lambda| over the spectrum of a square matrix.
double spectral_radius(const Mat& m);

struct SymEig {
    std::vector<double> values;  // ascending
    Mat vectors;                 // columns are the eigenvectors
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. The input is
/// symmetrized as (m + m^T)/2 before iterating.
SymEig sym_eigen(const Mat& m, bool want_vectors = true);

/// sigma_max(m) = sqrt(rho(m^T m)).
double max_singular_value(const Mat& m);

/// Moore-Penrose pseudoinverse via the eigen-decomposition of the smaller
/// Gram matrix. Rank is truncated at max(r,c)*1e-13 relative to the largest
/// squared singular value, which keeps the Gram squaring from resurrecting
/// noise-level directions.
Mat pseudo_inverse(const Mat& m);

/// True iff every eigenvalue of the symmetrized input exceeds
/// 1e-10*max(1, ||m||_2). Throws ContractError when the input is asymmetric
/// beyond 1e-10*max(1, max|m_ij|).
bool is_positive_definite(const Mat& m);

/// Same eigenvalue test with threshold -tol instead: no eigenvalue may be
/// meaningfully negative.
bool is_positive_semidefinite(const Mat& m);

/// Numerical column rank from the Gram spectrum, shared by the feedforward
/// range test.
std::size_t numerical_rank(const Mat& m, double rel_tol = 1e-9);

}  // namespace macs
