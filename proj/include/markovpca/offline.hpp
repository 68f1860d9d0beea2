#pragma once

#include <cstdint>
#include <span>

#include "markovpca/linalg.hpp"
#include "markovpca/statedist.hpp"
#include "markovpca/streaming.hpp"

namespace markovpca {

// Running (1/n) sum x x^T. Only the lower triangle is accumulated.
class EmpiricalCovariance {
 public:
  explicit EmpiricalCovariance(int dim);

  void add(const Vector& x);
  // Weighted merge: the result equals accumulating both sample sets.
  void merge(const EmpiricalCovariance& other);

  int dim() const noexcept { return static_cast<int>(sum_.rows()); }
  std::size_t count() const noexcept { return n_; }
  Matrix sigma_hat() const;

 private:
  Matrix sum_;
  std::size_t n_ = 0;
};

EmpiricalCovariance accumulate(std::span<const Vector> samples);

struct LeadingEigen {
  Vector v;
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Power iteration from fixed-seed random starts; stops when successive
// iterates are within 1e-10 in sine distance, capped at 1e5 iterations.
// `converged` is false at the cap or when two independent starts settle on
// different directions (tied top eigenvalues).
LeadingEigen leading_eigenvector(const Matrix& symmetric);
LeadingEigen leading_eigenvector(const EmpiricalCovariance& emp);

// Offline baseline evaluated on stream prefixes at each checkpoint, using the
// same noise stream as run_oja for the same seed.
ErrorTrace run_offline(const StateDistributionSet& dist,
                       std::span<const int> path,
                       std::span<const std::size_t> checkpoints,
                       const EnsembleCovariance& truth, std::uint64_t seed);

}  // namespace markovpca
