#include "markovpca/linalg.hpp"

#include <algorithm>

namespace markovpca {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double symmetric_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

Matrix matrix_power(const Matrix& m, std::uint64_t t) {
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (t > 0) {
    if (t & 1U) result = result * base;
    t >>= 1U;
    if (t > 0) base = base * base;
  }
  return result;
}

Matrix psd_sqrt(const Matrix& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev(i) = ev(i) <= rel_tol * top ? 0.0 : std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double sin2(const Vector& a, const Vector& b) {
  const double c = a.dot(b);
  return std::clamp(1.0 - c * c, 0.0, 1.0);
}

}  // namespace markovpca
