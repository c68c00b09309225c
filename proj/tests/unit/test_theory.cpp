#include "helpers.hpp"
#include "netdist/theory.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace netdist;

namespace {

RateModel model(double sigma, double L, double beta, double alpha, double mu) {
  RateModel m;
  m.sigma = sigma;
  m.L = L;
  m.beta = beta;
  m.alpha = alpha;
  m.mu = mu;
  return m;
}

double eigen_radius(const Matrix& G) {
  return Eigen::EigenSolver<Matrix>(G).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("theory") {

TEST_CASE("theta") {
  CHECK(theta1(model(1, 2, 0, 0, 3)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(theta1(model(1, 2, 1, 0, 3)) == doctest::Approx(0.78333333333333333).epsilon(1e-14));
  CHECK(theta2(model(1, 2, 0, 0, 3)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(theta2(model(1, 5, 0.3, 0, 0)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK_THROWS_AS(theta1(model(1, 2, 4, 0, 3)), DomainError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double s = 0.1 + u(rng), L = s * (1 + 50 * u(rng)), mu = 100 * u(rng);
    const double b = u(rng) * 0.99 * (s + mu);
    const auto m = model(s, L, b, 0.5 * u(rng), mu);
    CHECK(theta1(m) > 0);
    CHECK(theta1(m) >= mu / (s + mu) - 1e-15);
    CHECK(theta2(m) >= mu / (s + mu) - 1e-15);
  }
}

TEST_CASE("rho bounds at the recommended mu choices") {
  for (double kappa : {1.0, 4.0, 10.0, 100.0})
    for (double r : {0.0, 0.3, 1.0, 3.0})
      for (double a0 : {0.0, 0.3, 0.6, 0.9}) {
        // the Hessian bounds force beta <= L - sigma
        if (r > kappa - 1.0) continue;
        const ProblemSummary pc{1.0, kappa, r};
        const auto c1 = select_parameters(Regime::cor1, pc, a0, 1);
        const double a = c1.alpha;
        const auto m1 = model(1.0, kappa, r, a, c1.mu);
        CHECK(m1.sigma + m1.mu == doctest::Approx(180 * kappa * (r + 1) / ((1 - a) * (1 - a))));
        CHECK(rho1(m1) <= 1 - std::pow((1 - a) / 20, 2) / (kappa * (r + 1)) + 1e-15);
        CHECK(rho1(m1) < 1);

        const auto c2 = select_parameters(Regime::cor2, pc, a0, 1);
        const auto m2 = model(1.0, kappa, r, c2.alpha, c2.mu);
        CHECK(m2.sigma + m2.mu == doctest::Approx(180 * kappa * kappa / ((1 - a) * (1 - a))));
        CHECK(rho2(m2) <= 1 - std::pow((1 - a) / 20, 2) / (kappa * kappa) + 1e-15);
      }
  // alpha = beta = 0, huge mu: the first term dominates near 1 but stays below
  const auto big = model(1, 2, 0, 0, 1e9);
  CHECK(rho1(big) < 1);
  CHECK(rho1(big) == doctest::Approx(0.5 * (1 + theta1(big))));
}

TEST_CASE("lyapunov matrices") {
  const auto plain = model(1, 4, 0, 0, 3);
  const Matrix G = lyapunov_matrix(plain, Lemma::lemma1).G;
  CHECK(G(0, 0) == doctest::Approx(0.75));
  CHECK(G(0, 1) == 0.0);
  CHECK(G(0, 2) == 0.0);

  const auto m = model(1, 4, 0.5, 0.3, 10);
  const Matrix G1 = lyapunov_matrix(m, Lemma::lemma1).G;
  const double eta = 1.0 / 11.0;
  CHECK(G1(1, 1) == doctest::Approx(0.3 + 0.3 * eta * 4));
  CHECK(G1(0, 2) == doctest::Approx(eta * eta * 4 * 0.5));
  CHECK(G1.minCoeff() >= 0);

  const Matrix G3 = lyapunov_matrix(model(1, 4, 0, 0, 0), Lemma::lemma3, 0.3).G;
  CHECK(G3(0, 0) == doctest::Approx(0.3));
  CHECK(G3(0, 3) == doctest::Approx(1.0 / 16));
  CHECK(G3.rows() == 4);
  CHECK(lyapunov_matrix(model(1, 4, 0, 0, 0), Lemma::lemma3).G(0, 0) == doctest::Approx(0.5));
  CHECK(default_nu(model(1, 4, 0.1, 0, 0), Lemma::lemma4) == doctest::Approx(0.5 / 0.96));
  CHECK(default_nu(model(1, 4, 0.1, 0, 0), Lemma::lemma3) == doctest::Approx(0.5 * 0.8 / 0.7));

  CHECK_THROWS_AS(lyapunov_matrix(model(1, 10, 0, 0.1, 0), Lemma::lemma3), DomainError);
  CHECK_THROWS_AS(lyapunov_matrix(model(1, 4, 5, 0, 1), Lemma::lemma2), DomainError);
  CHECK_THROWS_AS(lyapunov_matrix(model(2, 1, 0, 0, 0), Lemma::lemma1), DomainError);
  CHECK_THROWS_AS(lyapunov_matrix(model(1, 2, 0, 1.0, 0), Lemma::lemma1), DomainError);
  CHECK(parse_lemma("simplified2") == Lemma::simplified2);
  CHECK_THROWS_AS(parse_lemma("lemma9"), ConfigError);
}

TEST_CASE("spectral radius") {
  CHECK(spectral_radius(Eigen::Vector3d(0.5, 0.2, 0.1).asDiagonal().toDenseMatrix()) ==
        doctest::Approx(0.5).epsilon(1e-12));
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(spectral_radius(swap) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(spectral_radius(Matrix::Zero(3, 3)) == 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const int n = 3 + i % 2;
    Matrix G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = u(rng);
    CHECK(spectral_radius(G) == doctest::Approx(eigen_radius(G)).epsilon(1e-9));
  }
  Matrix neg = Matrix::Identity(2, 2);
  neg(0, 1) = -1;
  CHECK_THROWS_AS(spectral_radius(neg), DomainError);

  // cubic roots against the companion matrix
  for (int i = 0; i < 50; ++i) {
    const double a = 4 * u(rng) - 2, b = 4 * u(rng) - 2, c = 4 * u(rng) - 2;
    Matrix C = Matrix::Zero(3, 3);
    C(0, 0) = -a;
    C(0, 1) = -b;
    C(0, 2) = -c;
    C(1, 0) = 1;
    C(2, 1) = 1;
    const auto ev = Eigen::EigenSolver<Matrix>(C).eigenvalues();
    double best = -HUGE_VAL;
    for (int k = 0; k < 3; ++k)
      if (std::abs(ev(k).imag()) < 1e-9) best = std::max(best, ev(k).real());
    CHECK(largest_real_root_cubic(a, b, c) == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("simplified characteristic polynomial") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const auto m = model(1, 1 + 10 * u(rng), u(rng), 0.9 * u(rng), 10 + 100 * u(rng));
    const Matrix G = lyapunov_matrix(m, Lemma::simplified1).G;
    const double lam = 2 * u(rng);
    const double det = (lam * Matrix::Identity(3, 3) - G).determinant();
    CHECK(simplified1_characteristic(m, lam) == doctest::Approx(det).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("parameter selection") {
  const auto t2 = select_parameters(Regime::thm2, ProblemSummary{1.0, 4.0, 0.0}, 0.5);
  CHECK(t2.K == 3);
  CHECK(t2.alpha == doctest::Approx(0.125));
  CHECK(t2.alpha <= 1.0 / 8.0);
  CHECK(t2.mu + 1.0 == doctest::Approx(360.0));

  const auto c1 = select_parameters(Regime::cor1, ProblemSummary{2.0, 10.0, 0.0}, 0.0, 1);
  CHECK(c1.mu == doctest::Approx(180.0 * 10 - 2));

  const auto t4 = select_parameters(Regime::thm4, ProblemSummary{1.0, 10.0, 0.5}, 0.9);
  CHECK(std::pow(0.9, t4.K) <= 1.0 / 20);
  CHECK(std::pow(0.9, t4.K - 1) > 1.0 / 20);
  CHECK(t4.mu + 1.0 == doctest::Approx(360.0 * 10 * 1.5));

  const auto t5 = select_parameters(Regime::thm5, ProblemSummary{1.0, 8.0, 0.0}, 0.7);
  CHECK(t5.svrg_delta == doctest::Approx(1.0 / 320));
  CHECK(t5.svrg_S == 160 * 8);
  CHECK(t5.alpha <= 1.0 / (70 * 8));
  CHECK(t5.warnings.empty());
  const auto warn = select_parameters(Regime::thm5, ProblemSummary{1.0, 8.0, 0.1}, 0.7);
  CHECK_FALSE(warn.warnings.empty());

  // more heterogeneity never asks for less damping
  double prev = 0.0;
  for (double b : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    const double mu = select_parameters(Regime::cor1, ProblemSummary{1.0, 5.0, b}, 0.5).mu;
    CHECK(mu >= prev);
    prev = mu;
  }
  CHECK_THROWS_AS(select_parameters(Regime::cor1, ProblemSummary{1.0, 5.0, 0.0}, 1.0), DomainError);
  CHECK(parse_regime("thm5") == Regime::thm5);
}

TEST_CASE("lyapunov check") {
  const Matrix G = lyapunov_matrix(model(1, 4, 0.2, 0.3, 50), Lemma::lemma1).G;
  CHECK(lyapunov_check({Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)}, G, 0.0).pass);

  std::vector<Vector> exact{Vector{{1.0, 2.0, 3.0}}};
  for (int t = 0; t < 10; ++t) exact.push_back(G * exact.back());
  CHECK(lyapunov_check(exact, G, 0.0).pass);

  auto broken = exact;
  broken[4](1) += 1e-3;
  const auto rep = lyapunov_check(broken, G, 1e-6);
  CHECK_FALSE(rep.pass);
  CHECK(rep.t == 4);
  CHECK(rep.component == 1);
  CHECK(rep.excess == doctest::Approx(1e-3 - 1e-6).epsilon(1e-6));
  CHECK_THROWS_AS(lyapunov_check({Vector::Zero(2), Vector::Zero(2)}, G, 0.0), DimensionError);
}

}  // TEST_SUITE
