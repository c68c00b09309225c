#pragma once

// Per-agent loss oracles, synthetic data, partitioning, dataset I/O and
// measurement of the problem constants (sigma, L, kappa, beta).

#include "netdist/common.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>
#include <vector>

namespace netdist {

enum class DataKind { regression, binary };

struct Dataset {
  Matrix A;  // N x d
  Vector b;
  DataKind kind = DataKind::regression;

  int size() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

struct Shard {
  int agent = 0;
  Matrix A;  // m x d
  Vector b;
  std::vector<int> indices;  // rows of the source dataset, empty for synthetic shards
};

struct SyntheticParams {
  int m = 1000;  // samples per agent
  int d = 40;
  int n = 20;
  double varrho = 0.0;  // Sigma_ii = i^(-varrho)
  double noise_std = 1.0;
  std::uint64_t seed = 1;
  bool identical_shards = false;  // every agent receives agent 0's samples
};

struct SyntheticData {
  std::vector<Shard> shards;
  Vector x0;  // ground-truth parameter
};

/// Rows drawn from N(0, Sigma) with Sigma_ii = i^-varrho; b = A x0 + noise.
/// Agent j samples from mt19937_64(seed ^ j), x0 from its own stream.
SyntheticData generate_synthetic(const SyntheticParams& params);

/// varrho giving the feature covariance condition number d^varrho = kappa.
double varrho_for_condition(double kappa, int d);

/// Splits N rows into n contiguous disjoint shards of size N/n.
std::vector<Shard> partition(const Dataset& data, int n);

class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual int dim() const = 0;
  /// Samples backing the loss; a full gradient costs this many sample-gradients.
  virtual int num_samples() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  /// Gradient of the loss on sample i alone, regularization included, so that
  /// the mean over i equals gradient(x).
  virtual Vector sample_gradient(const Vector& x, int i) const = 0;

  virtual bool has_hessian() const { return false; }
  virtual Matrix hessian(const Vector& x) const;
  /// Non-null when the Hessian does not depend on x.
  virtual const Matrix* constant_hessian() const { return nullptr; }

  /// Bounds sigma I <= Hessian <= L I.
  virtual double sigma() const = 0;
  virtual double smoothness() const = 0;
  /// Smoothness of every single-sample loss, the constant stochastic steps need.
  virtual double sample_smoothness() const { return smoothness(); }
};

using OraclePtr = std::shared_ptr<const LossOracle>;
using OracleList = std::vector<OraclePtr>;

/// f(x) = 1/2 x^T H x - c^T x + r. Built from a shard, f = (1/2m)||Ax - b||^2.
class QuadraticOracle final : public LossOracle {
 public:
  explicit QuadraticOracle(const Shard& shard);
  QuadraticOracle(Matrix H, Vector c, double r = 0.0);

  int dim() const override { return static_cast<int>(H_.rows()); }
  int num_samples() const override { return samples_ ? static_cast<int>(A_.rows()) : 1; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector sample_gradient(const Vector& x, int i) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector&) const override { return H_; }
  const Matrix* constant_hessian() const override { return &H_; }
  double sigma() const override { return sigma_; }
  double smoothness() const override { return L_; }
  double sample_smoothness() const override { return sample_L_; }

  const Matrix& H() const { return H_; }
  const Vector& c() const { return c_; }
  double offset() const { return r_; }

 private:
  void init_constants();

  Matrix H_;
  Vector c_;
  double r_ = 0.0;
  bool samples_ = false;
  Matrix A_;
  Vector b_;
  double sigma_ = 0.0, L_ = 0.0, sample_L_ = 0.0;
};

/// (1/m) sum_i [log(1 + exp(a_i^T x)) - b_i a_i^T x] + (lambda/2)||x||^2, b_i in {0, 1}.
class LogisticOracle final : public LossOracle {
 public:
  LogisticOracle(const Shard& shard, double lambda);

  int dim() const override { return static_cast<int>(A_.cols()); }
  int num_samples() const override { return static_cast<int>(A_.rows()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector sample_gradient(const Vector& x, int i) const override;
  bool has_hessian() const override { return true; }
  Matrix hessian(const Vector& x) const override;
  double sigma() const override { return lambda_; }
  double smoothness() const override { return L_; }
  double sample_smoothness() const override { return sample_L_; }

 private:
  Matrix A_;
  Vector b_;
  double lambda_;
  double L_;
  double sample_L_;
};

/// The global loss f = (1/n) sum_j f_j. Quadratic inputs collapse into a
/// single QuadraticOracle with averaged H, c.
OraclePtr average_oracle(const OracleList& oracles);

enum class LossKind { quadratic, logistic };
LossKind parse_loss_kind(std::string_view name);

OracleList make_oracles(const std::vector<Shard>& shards, LossKind kind, double lambda = 0.0);

/// g(x) = l1 * ||x||_1; l1 = 0 is the zero regularizer.
struct Regularizer {
  double l1 = 0.0;

  bool zero() const { return l1 == 0.0; }
  double value(const Vector& x) const { return l1 * x.lpNorm<1>(); }
  /// prox of tau * g.
  Vector prox(const Vector& v, double tau) const;
};

/// Componentwise soft threshold sign(v) * max(|v| - tau, 0).
Vector l1_prox(const Vector& v, double tau);

struct ProblemConstants {
  double sigma = 0.0;
  double L = 0.0;
  double kappa = 0.0;
  double beta = 0.0;
  double L_sample = 0.0;  // max single-sample smoothness over agents
  bool beta_estimated = false;  // sampled at probe points rather than exact
  Matrix Hbar;                  // global Hessian, exact mode only
};

enum class ConstantsMode { exact, sampled };

/// exact: every oracle must have a constant Hessian; sigma/L are the extreme
/// eigenvalues over all H_j and beta = max_j ||H_j - Hbar||.
/// sampled: sigma/L from the oracles' bounds, beta maximized over `probes`.
ProblemConstants measure_constants(const OracleList& oracles, ConstantsMode mode,
                                   const std::vector<Vector>& probes = {});

Dataset load_dataset(const std::filesystem::path& path, std::string_view format, int dim = 0,
                     DataKind kind = DataKind::regression);
void save_dataset(const std::filesystem::path& path, const Dataset& data, std::string_view format);

/// Spectral norm of a symmetric matrix.
double symmetric_norm(const Matrix& m);

}  // namespace netdist
