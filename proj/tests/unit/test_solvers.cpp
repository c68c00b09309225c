#include "helpers.hpp"
#include "netdist/solvers.hpp"

#include <doctest.h>

using namespace netdist;

namespace {

std::shared_ptr<QuadraticOracle> random_quadratic(int d, std::mt19937_64& rng, double lo = 0.5,
                                                  double hi = 5.0) {
  return std::make_shared<QuadraticOracle>(testing::random_spd(d, lo, hi, rng),
                                           testing::random_vector(d, rng));
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("surrogate") {
  std::mt19937_64 rng(1);
  const auto f = random_quadratic(4, rng);
  const Vector y = testing::random_vector(4, rng), s = testing::random_vector(4, rng);
  const auto surr = make_surrogate(f, y, s, 0.7);
  CHECK((surr.gradient(y) - s).norm() <= 1e-13);
  CHECK(surr.sigma() == doctest::Approx(f->sigma() + 0.7));

  // with exact tracking and mu = 0 the surrogate is f up to a constant
  const auto same = make_surrogate(f, y, f->gradient(y), 0.0);
  const Vector z = testing::random_vector(4, rng);
  CHECK((same.gradient(z) - f->gradient(z)).norm() <= 1e-12);

  // closed form minimizer y - (H + mu I)^-1 s
  const Vector zstar = y - (f->H() + 0.7 * Matrix::Identity(4, 4)).ldlt().solve(s);
  CHECK(surr.gradient(zstar).norm() <= 1e-12);

  // sample gradients average out to the full gradient
  Vector avg = Vector::Zero(4);
  for (int i = 0; i < surr.num_samples(); ++i) avg += surr.sample_gradient(z, i);
  CHECK((avg / surr.num_samples() - surr.gradient(z)).norm() <= 1e-12);

  for (int t = 0; t < 50; ++t) {
    const Vector z1 = testing::random_vector(4, rng), z2 = testing::random_vector(4, rng);
    const double lhs = (surr.gradient(z1) - surr.gradient(z2)).dot(z1 - z2);
    CHECK(lhs >= (f->sigma() + 0.7) * (z1 - z2).squaredNorm() - 1e-9);
  }

  // cached anchor gradient gives the same oracle
  const SurrogateOracle cached(f, y, s, 0.7, f->gradient(y));
  CHECK((cached.gradient(z) - surr.gradient(z)).norm() <= 1e-14);
  CHECK(cached.value(z) == doctest::Approx(surr.value(z)).epsilon(1e-14));
}

TEST_CASE("nesterov") {
  const QuadraticOracle id(Matrix::Identity(5, 5), Vector::LinSpaced(5, 1.0, 5.0));
  const auto r = nesterov_agd(id, Vector::Zero(5));
  CHECK(r.converged);
  CHECK(r.iterations <= 5);
  CHECK((r.solution - Vector::LinSpaced(5, 1.0, 5.0)).norm() <= 1e-10);

  const auto at = nesterov_agd(id, Vector::LinSpaced(5, 1.0, 5.0));
  CHECK(at.iterations == 0);
  CHECK(at.converged);

  std::mt19937_64 rng(2);
  const auto f = random_quadratic(8, rng, 1.0, 100.0);
  SolverOptions opt;
  opt.max_iters = 5;
  const auto capped = nesterov_agd(*f, Vector::Zero(8), opt);
  CHECK(capped.iterations == 5);
  CHECK_FALSE(capped.converged);
  opt.max_iters = 2000;
  const auto full = nesterov_agd(*f, Vector::Zero(8), opt);
  CHECK(full.converged);
  CHECK(f->gradient(full.solution).norm() <= 1e-10);
  CHECK(full.grad_norm <= 1e-10);
}

TEST_CASE("nesterov matches the closed form") {
  std::mt19937_64 rng(3);
  SolverOptions opt;
  opt.max_iters = 5000;
  opt.grad_tol = 1e-12;
  for (int e = 0; e < 30; ++e) {
    const int d = 3 + e % 6;
    const auto f = random_quadratic(d, rng, 0.1, 3.0);
    const Vector y = testing::random_vector(d, rng), s = testing::random_vector(d, rng);
    const double mu = 0.05 * (e + 1);
    const auto surr = make_surrogate(f, y, s, mu);
    const auto r = nesterov_agd(surr, y, opt);
    const Vector exact = quadratic_dane_step(f->H(), mu, y, s);
    CHECK((r.solution - exact).norm() <= 1e-7);
  }

  // the 6x6 instance at the tighter tolerance
  const auto f6 = random_quadratic(6, rng);
  const Vector y = testing::random_vector(6, rng), s = testing::random_vector(6, rng);
  const auto r6 = nesterov_agd(make_surrogate(f6, y, s, 0.3), y, opt);
  CHECK((r6.solution - quadratic_dane_step(f6->H(), 0.3, y, s)).norm() <= 1e-8);
}

TEST_CASE("fista") {
  std::mt19937_64 rng(4);
  const auto f = random_quadratic(6, rng);
  SolverOptions opt;
  opt.max_iters = 5000;
  opt.grad_tol = 1e-12;
  const auto a = fista(*f, Regularizer{0.0}, Vector::Zero(6), opt);
  const auto b = nesterov_agd(*f, Vector::Zero(6), opt);
  CHECK((a.solution - b.solution).norm() <= 1e-8);

  const QuadraticOracle lasso(Matrix::Identity(1, 1), Vector::Constant(1, 2.0), 2.0);
  const auto l = fista(lasso, Regularizer{1.0}, Vector::Zero(1), opt);
  CHECK(l.solution(0) == doctest::Approx(1.0).epsilon(1e-10));
  const auto zero = fista(lasso, Regularizer{3.0}, Vector::Constant(1, 5.0), opt);
  CHECK(std::abs(zero.solution(0)) <= 1e-12);

  // larger l1 weight, smaller l1 norm of the solution
  double prev = HUGE_VAL;
  for (double lam : {0.01, 0.02, 0.04, 0.08, 0.16, 0.32}) {
    const auto r = fista(*f, Regularizer{lam}, Vector::Zero(6), opt);
    const double nrm = r.solution.lpNorm<1>();
    CHECK(nrm <= prev + 1e-10);
    prev = nrm;
  }

  SolverOptions rec;
  rec.max_iters = 200;
  rec.grad_tol = 0.0;
  rec.record_objective = true;
  const auto m = fista(*f, Regularizer{0.1}, testing::random_vector(6, rng), rec);
  REQUIRE(m.objective.size() >= 2);
  for (std::size_t k = 1; k < m.objective.size(); ++k) CHECK(m.objective[k] <= m.objective[k - 1] + 1e-14);

  // custom prox map: projection onto x >= 0
  const ProxMap proj = [](const Vector& v, double) { return Vector(v.cwiseMax(0.0)); };
  const QuadraticOracle q(Matrix::Identity(2, 2), Vector{{1.0, -1.0}});
  const auto c = fista(q, proj, [](const Vector&) { return 0.0; }, Vector::Zero(2), opt);
  CHECK((c.solution - Vector{{1.0, 0.0}}).norm() <= 1e-10);
}

TEST_CASE("quadratic dane step") {
  const Vector y{{1.0, 2.0}}, g{{4.0, -2.0}};
  CHECK((quadratic_dane_step(Matrix::Identity(2, 2), 1.0, y, g) - (y - g / 2)).norm() <= 1e-15);
  CHECK((quadratic_dane_step(Matrix::Identity(2, 2), 1.0, y, Vector::Zero(2)) - y).norm() == 0.0);
  CHECK_THROWS_AS(quadratic_dane_step(Matrix::Zero(2, 2), 0.0, y, g), Error);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS(quadratic_dane_step(indefinite, 0.5, y, g));

  std::mt19937_64 rng(5);
  const Matrix H = testing::random_spd(5, 0.2, 4.0, rng);
  const QuadraticDaneFactor fac(H, 0.4);
  for (int t = 0; t < 5; ++t) {
    const Vector yy = testing::random_vector(5, rng), s = testing::random_vector(5, rng);
    const Vector want = yy - (H + 0.4 * Matrix::Identity(5, 5)).inverse() * s;
    CHECK((fac.step(yy, s) - want).norm() <= 1e-12);
  }
}

}  // TEST_SUITE
