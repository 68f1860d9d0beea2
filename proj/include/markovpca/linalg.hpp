#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace markovpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest singular value.
double spectral_norm(const Matrix& m);

// Spectral norm of a symmetric matrix (max |eigenvalue|).
double symmetric_norm(const Matrix& m);

// M^t by repeated squaring; M^0 = I.
Matrix matrix_power(const Matrix& m, std::uint64_t t);

// Symmetric PSD square root. Eigenvalues below tol * max eigenvalue are
// clamped to zero.
Matrix psd_sqrt(const Matrix& m, double rel_tol = 1e-12);

// 1 - <a, b>^2 for unit vectors, clamped to [0, 1].
double sin2(const Vector& a, const Vector& b);

}  // namespace markovpca
