#pragma once

#include "netdist/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace testing {

using netdist::Matrix;
using netdist::Stack;
using netdist::Vector;

inline Stack random_stack(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Stack v(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) v(i, k) = g(rng);
  return v;
}

inline Vector random_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(d);
  for (int k = 0; k < d; ++k) v(k) = g(rng);
  return v;
}

// SPD matrix with eigenvalues spread over [lo, hi].
inline Matrix random_spd(int d, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix q(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) q(i, k) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(q);
  const Matrix Q = qr.householderQ();
  Vector ev(d);
  for (int i = 0; i < d; ++i) ev(i) = d == 1 ? lo : lo + (hi - lo) * i / (d - 1.0);
  return Q * ev.asDiagonal() * Q.transpose();
}

// Spectral norm through a full SVD; independent of the library's eigen path.
inline double spectral_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace testing
