#include "helpers.hpp"
#include "netdist/problem.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace netdist;

namespace {

// Central differences, step h, compared in relative norm.
double fd_gradient_error(const LossOracle& f, const Vector& x, double h = 1e-5) {
  Vector fd(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector p = x, m = x;
    p(k) += h;
    m(k) -= h;
    fd(k) = (f.value(p) - f.value(m)) / (2 * h);
  }
  const Vector g = f.gradient(x);
  return (g - fd).norm() / std::max(1.0, g.norm());
}

Shard random_shard(int m, int d, std::mt19937_64& rng, bool binary = false) {
  Shard s;
  s.A = Matrix(m, d);
  s.b = Vector(m);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) s.A(i, k) = g(rng);
    s.b(i) = binary ? (g(rng) > 0 ? 1.0 : 0.0) : g(rng);
  }
  return s;
}

}  // namespace

TEST_SUITE("problem") {

TEST_CASE("synthetic generator") {
  SyntheticParams p;
  p.m = 400;
  p.d = 5;
  p.n = 3;
  p.varrho = 0.0;
  p.seed = 3;
  const auto a = generate_synthetic(p);
  REQUIRE(a.shards.size() == 3);
  CHECK(a.x0.size() == 5);
  for (const auto& s : a.shards) {
    CHECK(s.A.rows() == 400);
    CHECK(s.A.cols() == 5);
  }
  // isotropic features: sample covariance near I
  const Matrix cov = a.shards[0].A.transpose() * a.shards[0].A / 400.0;
  CHECK((cov - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 0.25);

  const auto b = generate_synthetic(p);
  CHECK((a.shards[2].A - b.shards[2].A).norm() == 0.0);
  CHECK((a.shards[2].b - b.shards[2].b).norm() == 0.0);

  // each agent's stream is independent of n
  SyntheticParams q = p;
  q.n = 5;
  CHECK((generate_synthetic(q).shards[1].A - a.shards[1].A).norm() == 0.0);

  CHECK(varrho_for_condition(10.0, 40) == doctest::Approx(0.6243).epsilon(1e-4));
  CHECK(std::pow(40.0, varrho_for_condition(10.0, 40)) == doctest::Approx(10.0).epsilon(1e-13));
  const SyntheticParams defaults;
  CHECK(defaults.m == 1000);
  CHECK(defaults.d == 40);
  CHECK(defaults.n == 20);

  // decaying covariance: column variances follow i^-varrho
  SyntheticParams big = p;
  big.m = 20000;
  big.n = 1;
  big.varrho = 1.0;
  const auto c = generate_synthetic(big);
  const Matrix cc = c.shards[0].A.transpose() * c.shards[0].A / 20000.0;
  for (int i = 0; i < 5; ++i) CHECK(cc(i, i) == doctest::Approx(1.0 / (i + 1)).epsilon(0.05));

  SyntheticParams same = p;
  same.identical_shards = true;
  const auto id = generate_synthetic(same);
  CHECK((id.shards[0].A - id.shards[2].A).norm() == 0.0);
}

TEST_CASE("quadratic oracle") {
  Shard s;
  s.A = Matrix::Identity(4, 4);
  s.b = Vector::Zero(4);
  const QuadraticOracle f(s);
  const Vector x = Vector::LinSpaced(4, -1.0, 2.0);
  CHECK(f.value(x) == doctest::Approx(x.squaredNorm() / 8.0).epsilon(1e-15));
  CHECK((f.gradient(x) - x / 4.0).norm() <= 1e-15);

  SyntheticParams p;
  p.m = 50;
  p.d = 4;
  p.n = 1;
  p.noise_std = 0.0;
  const auto data = generate_synthetic(p);
  const QuadraticOracle g(data.shards[0]);
  CHECK(g.gradient(data.x0).norm() <= 1e-12);

  std::mt19937_64 rng(1);
  const QuadraticOracle r(random_shard(5, 3, rng));
  for (int t = 0; t < 20; ++t) {
    const Vector z = testing::random_vector(3, rng);
    CHECK(fd_gradient_error(r, z) <= 1e-6);
    const Vector u = testing::random_vector(3, rng);
    CHECK((r.gradient(z + u) - r.gradient(z) - r.H() * u).norm() <= 1e-10);
  }
  // sample gradients average to the full gradient
  const Vector z = testing::random_vector(3, rng);
  Vector avg = Vector::Zero(3);
  for (int i = 0; i < r.num_samples(); ++i) avg += r.sample_gradient(z, i);
  CHECK((avg / r.num_samples() - r.gradient(z)).norm() <= 1e-12);

  Eigen::SelfAdjointEigenSolver<Matrix> es(r.H());
  CHECK(r.sigma() == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
  CHECK(r.smoothness() == doctest::Approx(es.eigenvalues()(2)).epsilon(1e-12));
}

TEST_CASE("logistic oracle") {
  std::mt19937_64 rng(4);
  const Shard sh = random_shard(30, 4, rng, true);
  const LogisticOracle f(sh, 0.1);
  CHECK(LogisticOracle(sh, 0.0).value(Vector::Zero(4)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  for (int t = 0; t < 20; ++t) CHECK(fd_gradient_error(f, testing::random_vector(4, rng)) <= 1e-6);

  Shard one;
  one.A = Matrix::Zero(1, 3);
  one.A(0, 0) = 1.0;
  one.b = Vector::Ones(1);
  const Vector g0 = LogisticOracle(one, 0.0).gradient(Vector::Zero(3));
  CHECK(g0(0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g0.tail(2).norm() == 0.0);

  CHECK(f.sigma() >= 0.1);
  const double ub = 0.1 + symmetric_norm(sh.A.transpose() * sh.A) / (4.0 * 30);
  CHECK(f.smoothness() <= ub + 1e-12);
  // Hessian within [sigma, L]
  for (int t = 0; t < 5; ++t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(f.hessian(testing::random_vector(4, rng)));
    CHECK(es.eigenvalues()(0) >= f.sigma() - 1e-12);
    CHECK(es.eigenvalues()(3) <= f.smoothness() + 1e-12);
  }
  Shard bad = sh;
  bad.b(0) = 2.0;
  CHECK_THROWS_AS(LogisticOracle(bad, 0.1), ValidationError);
}

TEST_CASE("l1 prox") {
  const Vector v = Vector{{3.0, -0.5}};
  CHECK((l1_prox(v, 0.0) - v).norm() == 0.0);
  CHECK((l1_prox(v, 1.0) - Vector{{2.0, 0.0}}).norm() == 0.0);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const Vector a = testing::random_vector(5, rng), b = testing::random_vector(5, rng);
    CHECK((l1_prox(a, 0.3) - l1_prox(b, 0.3)).norm() <= (a - b).norm() + 1e-15);
  }
  const Regularizer g{0.5};
  CHECK(g.value(v) == doctest::Approx(1.75));
  CHECK((g.prox(v, 2.0) - l1_prox(v, 1.0)).norm() == 0.0);
}

TEST_CASE("measure constants") {
  Matrix H1 = 2.0 * Matrix::Identity(3, 3), H2 = 4.0 * Matrix::Identity(3, 3);
  OracleList two{std::make_shared<QuadraticOracle>(H1, Vector::Zero(3)),
                 std::make_shared<QuadraticOracle>(H2, Vector::Zero(3))};
  const auto k = measure_constants(two, ConstantsMode::exact);
  CHECK(k.sigma == doctest::Approx(2.0));
  CHECK(k.L == doctest::Approx(4.0));
  CHECK(k.beta == doctest::Approx(1.0));
  CHECK(k.kappa == doctest::Approx(2.0));
  CHECK((k.Hbar - 3.0 * Matrix::Identity(3, 3)).norm() <= 1e-15);

  SyntheticParams p;
  p.m = 30;
  p.d = 4;
  p.n = 4;
  p.identical_shards = true;
  const auto data = generate_synthetic(p);
  CHECK(measure_constants(make_oracles(data.shards, LossKind::quadratic), ConstantsMode::exact).beta <= 1e-12);

  std::mt19937_64 rng(8);
  for (int e = 0; e < 50; ++e) {
    const int n = 2 + e % 6;
    OracleList os;
    for (int j = 0; j < n; ++j) os.push_back(std::make_shared<QuadraticOracle>(random_shard(12, 4, rng)));
    const auto c = measure_constants(os, ConstantsMode::exact);
    CHECK(c.sigma <= c.L);
    CHECK(c.beta <= (1.0 - 1.0 / n) * (c.L - c.sigma) + 1e-10);
  }
  CHECK_THROWS_AS(measure_constants({}, ConstantsMode::exact), ValidationError);

  const Shard sh = random_shard(20, 3, rng, true);
  OracleList logi{std::make_shared<LogisticOracle>(sh, 0.1), std::make_shared<LogisticOracle>(sh, 0.1)};
  const auto s = measure_constants(logi, ConstantsMode::sampled);
  CHECK(s.beta_estimated);
  CHECK(s.beta <= 1e-14);
  CHECK_THROWS_AS(measure_constants(logi, ConstantsMode::exact), ValidationError);
}

TEST_CASE("average oracle") {
  std::mt19937_64 rng(10);
  const Shard a = random_shard(8, 3, rng), b = random_shard(8, 3, rng);
  OracleList q{std::make_shared<QuadraticOracle>(a), std::make_shared<QuadraticOracle>(b)};
  const auto avg = average_oracle(q);
  const Vector x = testing::random_vector(3, rng);
  CHECK(avg->value(x) == doctest::Approx(0.5 * (q[0]->value(x) + q[1]->value(x))).epsilon(1e-13));
  CHECK((avg->gradient(x) - 0.5 * (q[0]->gradient(x) + q[1]->gradient(x))).norm() <= 1e-13);

  Shard ab = a;
  ab.b = (a.b.array() > 0).cast<double>();
  Shard bb = b;
  bb.b = (b.b.array() > 0).cast<double>();
  OracleList l{std::make_shared<LogisticOracle>(ab, 0.2), std::make_shared<LogisticOracle>(bb, 0.2)};
  const auto lavg = average_oracle(l);
  CHECK(lavg->value(x) == doctest::Approx(0.5 * (l[0]->value(x) + l[1]->value(x))).epsilon(1e-13));
  CHECK(fd_gradient_error(*lavg, x) <= 1e-6);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < lavg->num_samples(); ++i) mean += lavg->sample_gradient(x, i);
  CHECK((mean / lavg->num_samples() - lavg->gradient(x)).norm() <= 1e-12);
}

TEST_CASE("partition") {
  Dataset d;
  d.A = Matrix(12, 2);
  d.b = Vector(12);
  for (int i = 0; i < 12; ++i) {
    d.A(i, 0) = i;
    d.A(i, 1) = -i;
    d.b(i) = 10 + i;
  }
  const auto shards = partition(d, 4);
  std::set<int> seen;
  for (const auto& s : shards) {
    CHECK(s.A.rows() == 3);
    for (std::size_t r = 0; r < s.indices.size(); ++r) {
      CHECK(seen.insert(s.indices[r]).second);
      CHECK(s.b(static_cast<Eigen::Index>(r)) == d.b(s.indices[r]));
    }
  }
  CHECK(seen.size() == 12);
  CHECK_THROWS_AS(partition(d, 5), ConfigError);
}

TEST_CASE("dataset files") {
  const auto dir = std::filesystem::temp_directory_path() / "netdist_problem_io";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.csv") << "1.5,0.1,0.2\n-2,3,4\n";
  const Dataset c = load_dataset(dir / "a.csv", "csv");
  CHECK(c.size() == 2);
  CHECK(c.b(0) == 1.5);
  CHECK(c.A(0, 0) == 0.1);
  CHECK(c.A(0, 1) == 0.2);

  std::ofstream(dir / "a.svm") << "1 2:0.5\n0 1:1 3:-2\n";
  const Dataset s = load_dataset(dir / "a.svm", "libsvm", 3, DataKind::binary);
  CHECK(s.dim() == 3);
  CHECK(s.b(0) == 1.0);
  CHECK((s.A.row(0) - Eigen::RowVector3d(0, 0.5, 0)).norm() == 0.0);
  CHECK((s.A.row(1) - Eigen::RowVector3d(1, 0, -2)).norm() == 0.0);

  std::mt19937_64 rng(12);
  Dataset r;
  const Shard sh = random_shard(7, 3, rng);
  r.A = sh.A;
  r.b = sh.b;
  for (const char* fmt : {"csv", "libsvm"}) {
    const auto path = dir / (std::string("round.") + fmt);
    save_dataset(path, r, fmt);
    const Dataset back = load_dataset(path, fmt, 3);
    CHECK((back.A - r.A).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.b - r.b).cwiseAbs().maxCoeff() <= 1e-12);
  }

  std::ofstream(dir / "bad.csv") << "1,2,3\n4,5\n";
  try {
    load_dataset(dir / "bad.csv", "csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::ofstream(dir / "bad.svm") << "1 1:2\n1 0:3\n";
  CHECK_THROWS_AS(load_dataset(dir / "bad.svm", "libsvm"), ParseError);
  std::ofstream(dir / "lab.csv") << "2,1\n0,1\n";
  CHECK_THROWS_AS(load_dataset(dir / "lab.csv", "csv", 0, DataKind::binary), Error);
  CHECK_THROWS_AS(load_dataset(dir / "none.csv", "csv"), ConfigError);
}

}  // TEST_SUITE
