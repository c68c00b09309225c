#pragma once

// Local subproblem machinery: the DANE surrogate, Nesterov AGD, monotone
// FISTA and the closed-form quadratic step.

#include "netdist/problem.hpp"

#include <functional>
#include <vector>

namespace netdist {

/// z -> f_j(z) - <grad f_j(y_j) - s_j, z> + (mu/2)||z - y_j||^2.
class SurrogateOracle final : public LossOracle {
 public:
  SurrogateOracle(OraclePtr base, Vector anchor, Vector tracked, double mu);
  /// Reuses a known grad f_j(anchor).
  SurrogateOracle(OraclePtr base, Vector anchor, Vector tracked, double mu,
                  const Vector& anchor_gradient);

  int dim() const override { return base_->dim(); }
  int num_samples() const override { return base_->num_samples(); }
  double value(const Vector& z) const override;
  Vector gradient(const Vector& z) const override;
  Vector sample_gradient(const Vector& z, int i) const override;
  bool has_hessian() const override { return base_->has_hessian(); }
  Matrix hessian(const Vector& z) const override;
  double sigma() const override { return base_->sigma() + mu_; }
  double smoothness() const override { return base_->smoothness() + mu_; }
  double sample_smoothness() const override { return base_->sample_smoothness() + mu_; }

  const Vector& anchor() const { return anchor_; }
  const Vector& tracked() const { return tracked_; }
  double mu() const { return mu_; }
  const LossOracle& base() const { return *base_; }

 private:
  OraclePtr base_;
  Vector anchor_;
  Vector tracked_;
  Vector shift_;  // grad f_j(y_j) - s_j
  double mu_;
};

SurrogateOracle make_surrogate(OraclePtr base, const Vector& y, const Vector& s, double mu);

struct SolverOptions {
  int max_iters = 100;
  double grad_tol = 1e-10;
  bool record_objective = false;
};

struct SolverReport {
  Vector solution;
  int iterations = 0;
  double grad_norm = 0.0;  // gradient (or gradient-mapping) norm at the solution
  bool converged = false;
  int grad_evals = 0;  // full-gradient evaluations spent
  std::vector<double> objective;  // per iteration, when requested
};

/// Constant-momentum Nesterov scheme for sigma-strongly convex, L-smooth
/// objectives (sigma, L taken from the oracle).
SolverReport nesterov_agd(const LossOracle& f, const Vector& x0, const SolverOptions& opt = {});

using ProxMap = std::function<Vector(const Vector& v, double step)>;

/// Monotone FISTA on f + g, step 1/L. `g_value` evaluates g for the
/// monotonicity test; stops when L ||y - prox(y - grad/L)|| <= grad_tol.
SolverReport fista(const LossOracle& f, const ProxMap& prox,
                   const std::function<double(const Vector&)>& g_value, const Vector& x0,
                   const SolverOptions& opt = {});
SolverReport fista(const LossOracle& f, const Regularizer& g, const Vector& x0,
                   const SolverOptions& opt = {});

/// Cached factorization of H + mu I for repeated quadratic DANE steps.
class QuadraticDaneFactor {
 public:
  QuadraticDaneFactor(const Matrix& H, double mu);

  /// y - (H + mu I)^-1 s.
  Vector step(const Vector& y, const Vector& s) const;
  double mu() const { return mu_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double mu_;
};

Vector quadratic_dane_step(const Matrix& H, double mu, const Vector& y, const Vector& s);

}  // namespace netdist
