#include "markovpca/markov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "markovpca/error.hpp"
#include "markovpca/rng.hpp"

namespace markovpca {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kDetailedBalanceTol = 1e-10;
constexpr double kErgodicGapTol = 1e-10;
constexpr double kPrimitivityFloor = 1e-300;
// Solves pi^T (I - P) = 0 with one equation swapped for sum(pi) = 1, then
// refines once against the residual. Power iteration stalls at roughly
// tol / (1 - |lambda2|) on slowly mixing chains; the direct solve does not.
Vector stationary_by_solve(const Matrix& p) {
  const auto n = p.rows();
  Matrix a = Matrix::Identity(n, n) - p.transpose();
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::FullPivLU<Matrix> lu(a);
  Vector v = lu.solve(b);
  v += lu.solve(b - a * v);
  v = v.cwiseMax(0.0);
  return v / v.sum();
}

bool is_primitive(const Matrix& p) {
  const auto n = static_cast<std::uint64_t>(p.rows());
  const Matrix pw = matrix_power(p, n * n);
  return (pw.array() > kPrimitivityFloor).all();
}

// Spectral radius of a (possibly non-normal) matrix from ||A^(2^s)||^(2^-s),
// squaring with renormalisation so nothing over- or underflows.
double spectral_radius(const Matrix& a) {
  Matrix b = a;
  double nrm = b.norm();
  if (nrm == 0.0) return 0.0;
  b /= nrm;
  double log_scale = std::log(nrm);
  double scale_pow = 1.0;  // 2^s
  double estimate = nrm;
  for (int s = 0; s < 60; ++s) {
    b = b * b;
    nrm = b.norm();
    if (nrm == 0.0 || !std::isfinite(nrm)) return nrm == 0.0 ? 0.0 : estimate;
    b /= nrm;
    log_scale = 2.0 * log_scale + std::log(nrm);
    scale_pow *= 2.0;
    const double next = std::exp(log_scale / scale_pow);
    if (s > 8 && std::abs(next - estimate) <= 1e-15 * std::max(next, 1e-300)) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix probs) : probs_(std::move(probs)) {
  require(probs_.rows() >= 1 && probs_.rows() == probs_.cols(),
          "transition matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
    for (Eigen::Index j = 0; j < probs_.cols(); ++j) {
      const double v = probs_(i, j);
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
              "transition probabilities must lie in [0, 1]");
    }
    if (std::abs(probs_.row(i).sum() - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os << "row " << i << " sums to " << probs_.row(i).sum();
      fail(ErrorCode::InvalidArgument, os.str());
    }
  }
}

TransitionMatrix TransitionMatrix::rho_chain(int n_states, double rho) {
  require(n_states >= 2, "rho chain needs at least 2 states");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  const double off = rho / static_cast<double>(n_states - 1);
  Matrix p = Matrix::Constant(n_states, n_states, off);
  p.diagonal().setConstant(1.0 - rho);
  return TransitionMatrix(std::move(p));
}

ChainSpectrum analyze_spectrum(const TransitionMatrix& chain) {
  const Matrix& p = chain.probs();
  const auto n = p.rows();
  if (!is_primitive(p)) {
    fail(ErrorCode::Ergodicity, "chain is not irreducible and aperiodic");
  }

  ChainSpectrum out;
  out.stationary = stationary_by_solve(p);
  out.pi_min = out.stationary.minCoeff();
  if (!(out.pi_min > 0.0)) {
    fail(ErrorCode::Ergodicity, "stationary distribution has empty states");
  }

  out.reversible = true;
  for (Eigen::Index x = 0; x < n && out.reversible; ++x) {
    for (Eigen::Index y = x + 1; y < n; ++y) {
      const double flow = out.stationary(x) * p(x, y);
      const double back = out.stationary(y) * p(y, x);
      if (std::abs(flow - back) > kDetailedBalanceTol) {
        out.reversible = false;
        break;
      }
    }
  }

  if (n == 1) {
    out.lambda2_abs = 0.0;
  } else if (out.reversible) {
    const Vector sq = out.stationary.array().sqrt();
    const Vector inv_sq = sq.cwiseInverse();
    Matrix sym = sq.asDiagonal() * p * inv_sq.asDiagonal();
    sym = 0.5 * (sym + sym.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();  // ascending, ev(n-1) ~ 1
    out.lambda2_abs = std::max(std::abs(ev(0)), std::abs(ev(n - 2)));
  } else {
    const Matrix deflated =
        p - Vector::Ones(n) * out.stationary.transpose();
    out.lambda2_abs = spectral_radius(deflated);
  }
  if (out.lambda2_abs >= 1.0 - kErgodicGapTol) {
    fail(ErrorCode::Ergodicity, "second eigenvalue has modulus ~1");
  }
  return out;
}

double sup_tv_distance(const Matrix& rows, const Vector& pi) {
  double worst = 0.0;
  for (Eigen::Index x = 0; x < rows.rows(); ++x) {
    const double tv =
        0.5 * (rows.row(x).transpose() - pi).cwiseAbs().sum();
    worst = std::max(worst, tv);
  }
  return worst;
}

namespace {

// P^t - 1 pi^T = (P - 1 pi^T)^t for t >= 1. Powering the deviation directly
// keeps relative accuracy where P^t - 1 pi^T would cancel to rounding noise,
// so tau_mix stays meaningful for eps far below machine epsilon.
Matrix deviation(const TransitionMatrix& chain, const ChainSpectrum& spectrum) {
  const auto n = chain.n_states();
  return chain.probs() - Vector::Ones(n) * spectrum.stationary.transpose();
}

double half_max_row_l1(const Matrix& m) {
  return 0.5 * m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

double d_mix(const TransitionMatrix& chain, const ChainSpectrum& spectrum,
             std::uint64_t t) {
  if (t == 0) {
    return sup_tv_distance(Matrix::Identity(chain.n_states(), chain.n_states()),
                           spectrum.stationary);
  }
  return half_max_row_l1(matrix_power(deviation(chain, spectrum), t));
}

std::uint64_t tau_mix(const TransitionMatrix& chain,
                      const ChainSpectrum& spectrum, double eps) {
  require(eps > 0.0 && eps < 1.0, "tau_mix: eps must lie in (0, 1)");

  // Doubling: dyadic[j] = D^(2^j).
  std::vector<Matrix> dyadic{deviation(chain, spectrum)};
  if (half_max_row_l1(dyadic[0]) <= eps) return 1;
  while (true) {
    if (dyadic.size() >= 62) {
      fail(ErrorCode::Ergodicity, "tau_mix: chain does not mix");
    }
    dyadic.push_back(dyadic.back() * dyadic.back());
    if (half_max_row_l1(dyadic.back()) <= eps) break;
  }

  // Binary lifting: largest t in [2^(j-1), 2^j) with d_mix(t) > eps.
  const std::size_t j = dyadic.size() - 1;
  std::uint64_t lo = std::uint64_t{1} << (j - 1);
  Matrix lo_pow = dyadic[j - 1];
  for (std::size_t m = j - 1; m-- > 0;) {
    Matrix cand = lo_pow * dyadic[m];
    if (half_max_row_l1(cand) > eps) {
      lo += std::uint64_t{1} << m;
      lo_pow = std::move(cand);
    }
  }
  return lo + 1;
}

MixingProfile::MixingProfile(TransitionMatrix chain, ChainSpectrum spectrum)
    : chain_(std::move(chain)),
      spectrum_(std::move(spectrum)),
      tau_quarter_(markovpca::tau_mix(chain_, spectrum_, 0.25)) {}

double MixingProfile::d_mix(std::uint64_t t) const {
  return markovpca::d_mix(chain_, spectrum_, t);
}

std::uint64_t MixingProfile::tau_mix(double eps) const {
  return markovpca::tau_mix(chain_, spectrum_, eps);
}

namespace {

std::vector<double> prefix_sums(const Vector& probs) {
  std::vector<double> cdf(static_cast<std::size_t>(probs.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  return cdf;
}

int draw_categorical(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  const auto idx = std::distance(cdf.begin(), it);
  return static_cast<int>(
      std::min<std::ptrdiff_t>(idx, static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

std::vector<int> sample_path(const TransitionMatrix& chain,
                             const ChainSpectrum& spectrum,
                             std::size_t length, std::uint64_t seed) {
  require(length >= 1, "sample_path: length must be positive");
  const int n = chain.n_states();
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    rows.push_back(prefix_sums(chain.probs().row(x).transpose()));
  }
  const auto start = prefix_sums(spectrum.stationary);

  Rng rng(seed);
  std::vector<int> path(length);
  path[0] = draw_categorical(start, rng.uniform());
  for (std::size_t t = 1; t < length; ++t) {
    path[t] = draw_categorical(rows[static_cast<std::size_t>(path[t - 1])],
                               rng.uniform());
  }
  return path;
}

Matrix reversed_conditional(const TransitionMatrix& chain,
                            const ChainSpectrum& spectrum, std::uint64_t k) {
  if (!spectrum.reversible) {
    fail(ErrorCode::Reversibility,
         "reversed_conditional requires a reversible chain");
  }
  const Vector& pi = spectrum.stationary;
  const Matrix pk = matrix_power(chain.probs(), k);
  const auto n = pk.rows();
  Matrix out(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index s = 0; s < n; ++s) {
      out(u, s) = pi(s) * pk(s, u) / pi(u);
    }
  }
  return out;
}

}  // namespace markovpca
