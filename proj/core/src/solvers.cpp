#include "netdist/solvers.hpp"

#include <cmath>
#include <sstream>

namespace netdist {

SurrogateOracle::SurrogateOracle(OraclePtr base, Vector anchor, Vector tracked, double mu)
    : base_(std::move(base)), anchor_(std::move(anchor)), tracked_(std::move(tracked)), mu_(mu) {
  if (mu < 0) throw DomainError("surrogate mu must be >= 0");
  if (anchor_.size() != base_->dim() || tracked_.size() != base_->dim())
    throw DimensionError("surrogate anchor/tracked gradient dimension mismatch");
  shift_ = base_->gradient(anchor_) - tracked_;
}

SurrogateOracle::SurrogateOracle(OraclePtr base, Vector anchor, Vector tracked, double mu,
                                 const Vector& anchor_gradient)
    : base_(std::move(base)), anchor_(std::move(anchor)), tracked_(std::move(tracked)), mu_(mu) {
  if (mu < 0) throw DomainError("surrogate mu must be >= 0");
  if (anchor_.size() != base_->dim() || tracked_.size() != base_->dim() ||
      anchor_gradient.size() != base_->dim())
    throw DimensionError("surrogate anchor/tracked gradient dimension mismatch");
  shift_ = anchor_gradient - tracked_;
}

double SurrogateOracle::value(const Vector& z) const {
  return base_->value(z) - shift_.dot(z) + 0.5 * mu_ * (z - anchor_).squaredNorm();
}

Vector SurrogateOracle::gradient(const Vector& z) const {
  return base_->gradient(z) - shift_ + mu_ * (z - anchor_);
}

Vector SurrogateOracle::sample_gradient(const Vector& z, int i) const {
  return base_->sample_gradient(z, i) - shift_ + mu_ * (z - anchor_);
}

Matrix SurrogateOracle::hessian(const Vector& z) const {
  Matrix h = base_->hessian(z);
  h.diagonal().array() += mu_;
  return h;
}

SurrogateOracle make_surrogate(OraclePtr base, const Vector& y, const Vector& s, double mu) {
  return SurrogateOracle(std::move(base), y, s, mu);
}

namespace {

void check_finite(const Vector& v, int iter, const char* who) {
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << who << " diverged at iteration " << iter;
    throw DivergenceError(msg.str());
  }
}

}  // namespace

SolverReport nesterov_agd(const LossOracle& f, const Vector& x0, const SolverOptions& opt) {
  const double L = f.smoothness();
  const double sigma = f.sigma();
  if (!(L > 0)) throw DomainError("nesterov_agd needs L > 0");
  const double q = std::sqrt(L / sigma);
  const double momentum = sigma > 0 ? (q - 1.0) / (q + 1.0) : 0.0;

  SolverReport rep;
  Vector x = x0, y = x0;
  for (int k = 0;; ++k) {
    const Vector g = f.gradient(y);
    ++rep.grad_evals;
    check_finite(g, k, "nesterov_agd");
    const double gn = g.norm();
    if (opt.record_objective) rep.objective.push_back(f.value(y));
    if (gn <= opt.grad_tol) {
      rep.solution = y;
      rep.iterations = k;
      rep.grad_norm = gn;
      rep.converged = true;
      return rep;
    }
    if (k == opt.max_iters) {
      rep.solution = y;
      rep.iterations = k;
      rep.grad_norm = gn;
      return rep;
    }
    Vector x_next = y - g / L;
    // without strong convexity fall back to the k/(k+3) schedule
    const double m = sigma > 0 ? momentum : k / (k + 3.0);
    y = x_next + m * (x_next - x);
    x = std::move(x_next);
  }
}

SolverReport fista(const LossOracle& f, const ProxMap& prox,
                   const std::function<double(const Vector&)>& g_value, const Vector& x0,
                   const SolverOptions& opt) {
  const double L = f.smoothness();
  if (!(L > 0)) throw DomainError("fista needs L > 0");
  SolverReport rep;
  Vector x = x0, y = x0;
  double fx = f.value(x) + g_value(x);
  double t = 1.0;
  for (int k = 0;; ++k) {
    const Vector g = f.gradient(y);
    ++rep.grad_evals;
    const Vector z = prox(y - g / L, 1.0 / L);
    check_finite(z, k, "fista");
    const double gm = L * (y - z).norm();
    if (gm <= opt.grad_tol || k == opt.max_iters) {
      rep.iterations = k;
      rep.grad_norm = gm;
      rep.converged = gm <= opt.grad_tol;
      // z is the prox-gradient image of y; keep the better of z and x
      const double fz = f.value(z) + g_value(z);
      rep.solution = fz <= fx ? z : x;
      if (opt.record_objective) rep.objective.push_back(std::min(fz, fx));
      return rep;
    }
    const double fz = f.value(z) + g_value(z);
    Vector x_next = fz <= fx ? z : x;
    const double fx_next = std::min(fz, fx);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    fx = fx_next;
    t = t_next;
    if (opt.record_objective) rep.objective.push_back(fx);
  }
}

SolverReport fista(const LossOracle& f, const Regularizer& g, const Vector& x0,
                   const SolverOptions& opt) {
  return fista(
      f, [&g](const Vector& v, double step) { return g.prox(v, step); },
      [&g](const Vector& v) { return g.value(v); }, x0, opt);
}

QuadraticDaneFactor::QuadraticDaneFactor(const Matrix& H, double mu) : mu_(mu) {
  if (H.rows() != H.cols()) throw DimensionError("H must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0) + mu;
  const double hi = std::max(std::abs(es.eigenvalues()(es.eigenvalues().size() - 1) + mu), 1.0);
  if (!(lo > 1e-14 * hi))
    throw DomainError("H + mu I is singular (sigma + mu = " + std::to_string(lo) + ")");
  Matrix M = H;
  M.diagonal().array() += mu;
  llt_.compute(M);
  if (llt_.info() != Eigen::Success) throw DomainError("factorization of H + mu I failed");
}

Vector QuadraticDaneFactor::step(const Vector& y, const Vector& s) const {
  return y - llt_.solve(s);
}

Vector quadratic_dane_step(const Matrix& H, double mu, const Vector& y, const Vector& s) {
  return QuadraticDaneFactor(H, mu).step(y, s);
}

}  // namespace netdist
