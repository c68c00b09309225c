#include "netdist/algorithms.hpp"

#include <cmath>
#include <random>

namespace netdist {

std::string_view to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::network_dane: return "network_dane";
    case AlgorithmKind::network_dane_quadratic: return "network_dane_quadratic";
    case AlgorithmKind::prox_network_dane: return "prox_network_dane";
    case AlgorithmKind::network_svrg: return "network_svrg";
    case AlgorithmKind::network_sarah: return "network_sarah";
    case AlgorithmKind::dgd_gt: return "dgd_gt";
    case AlgorithmKind::extra: return "extra";
    case AlgorithmKind::dane_centralized: return "dane_centralized";
  }
  return "?";
}

AlgorithmKind parse_algorithm(std::string_view name) {
  for (auto k : {AlgorithmKind::network_dane, AlgorithmKind::network_dane_quadratic,
                 AlgorithmKind::prox_network_dane, AlgorithmKind::network_svrg,
                 AlgorithmKind::network_sarah, AlgorithmKind::dgd_gt, AlgorithmKind::extra,
                 AlgorithmKind::dane_centralized})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(OutputRule rule) {
  return rule == OutputRule::last_iterate ? "last_iterate" : "random_iterate";
}

OutputRule parse_output_rule(std::string_view name) {
  if (name == "last_iterate" || name == "last") return OutputRule::last_iterate;
  if (name == "random_iterate" || name == "random") return OutputRule::random_iterate;
  throw ConfigError("unknown output rule '" + std::string(name) + "'");
}

DistributedProblem DistributedProblem::make(OracleList oracles, Regularizer reg) {
  if (oracles.empty()) throw ConfigError("problem needs at least one agent");
  DistributedProblem p;
  p.global = average_oracle(oracles);
  p.oracles = std::move(oracles);
  p.reg = reg;
  return p;
}

double DistributedProblem::samples_per_agent() const {
  double total = 0.0;
  for (const auto& o : oracles) total += o->num_samples();
  return total / static_cast<double>(oracles.size());
}

Stack local_gradients(const DistributedProblem& prob, const Stack& v) {
  if (v.rows() != prob.agents()) throw DimensionError("stack rows must equal agent count");
  Stack g(v.rows(), v.cols());
  for (int j = 0; j < prob.agents(); ++j)
    g.row(j) = prob.oracles[static_cast<std::size_t>(j)]->gradient(v.row(j).transpose()).transpose();
  return g;
}

NetworkState init_state(const Stack& x0, const DistributedProblem& prob) {
  if (x0.rows() != prob.agents() || x0.cols() != prob.dim())
    throw DimensionError("initial stack must be n x d");
  NetworkState st;
  st.x = x0;
  st.y = x0;
  st.grad_y = local_gradients(prob, x0);
  st.s = st.grad_y;
  return st;
}

namespace {

double full_gradient_cost(const DistributedProblem& prob, int j) {
  return prob.oracles[static_cast<std::size_t>(j)]->num_samples();
}

void ensure_factors(NetworkState& st, const DistributedProblem& prob, double mu) {
  if (st.factor_mu == mu && static_cast<int>(st.factors.size()) == prob.agents()) return;
  st.factors.clear();
  for (int j = 0; j < prob.agents(); ++j) {
    const Matrix* h = prob.oracles[static_cast<std::size_t>(j)]->constant_hessian();
    if (!h) throw ConfigError("closed-form local steps need quadratic losses");
    try {
      st.factors.emplace_back(*h, mu);
    } catch (const DomainError& e) {
      throw DomainError("agent " + std::to_string(j) + ": " + e.what());
    }
  }
  st.factor_mu = mu;
}

// Mixing of x into y' and the tracking update shared by all Network-* methods.
void mix_and_track(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix) {
  Mixed mixed = mix_rounds(mix.x_matrix, mix.mode, mix.rounds, st.x);
  Stack g_new = local_gradients(prob, mixed.stack);
  st.s = track_update(mix, st.s, g_new, st.grad_y);
  st.y = std::move(mixed.stack);
  st.grad_y = std::move(g_new);
  st.counters.comm_rounds += mixed.rounds;
  st.counters.grad_evals += 2.0 * prob.samples_per_agent();
}

template <class Solve>
void local_solves(NetworkState& st, const DistributedProblem& prob, Solve&& solve) {
  const int n = prob.agents();
  Stack x_new(st.x.rows(), st.x.cols());
  double inner_cost = 0.0;
  for (int j = 0; j < n; ++j) {
    SolverReport rep;
    try {
      rep = solve(j);
    } catch (const DivergenceError& e) {
      throw DivergenceError("agent " + std::to_string(j) + ": " + e.what());
    }
    x_new.row(j) = rep.solution.transpose();
    inner_cost += rep.grad_evals * full_gradient_cost(prob, j);
    st.counters.inner_iters += rep.iterations;
  }
  st.counters.grad_evals += inner_cost / n;
  st.x = std::move(x_new);
}

SurrogateOracle surrogate_for(const NetworkState& st, const DistributedProblem& prob, int j,
                              double mu) {
  return SurrogateOracle(prob.oracles[static_cast<std::size_t>(j)], st.y.row(j).transpose(),
                         st.s.row(j).transpose(), mu, st.grad_y.row(j).transpose());
}

}  // namespace

void network_dane_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                       const AlgorithmConfig& cfg) {
  if (cfg.local == LocalSolver::closed_form) {
    network_dane_quadratic_step(st, prob, mix, cfg);
    return;
  }
  mix_and_track(st, prob, mix);
  local_solves(st, prob, [&](int j) {
    SurrogateOracle sur = surrogate_for(st, prob, j, cfg.mu);
    // warm start from the agent's previous estimate
    return nesterov_agd(sur, st.x.row(j).transpose(), cfg.inner);
  });
  ++st.t;
}

void network_dane_quadratic_step(NetworkState& st, const DistributedProblem& prob,
                                 const MixingScheme& mix, const AlgorithmConfig& cfg) {
  ensure_factors(st, prob, cfg.mu);
  Mixed mixed = mix_rounds(mix.x_matrix, mix.mode, mix.rounds, st.x);
  Stack delta(st.y.rows(), st.y.cols());
  for (int j = 0; j < prob.agents(); ++j) {
    const Matrix& H = *prob.oracles[static_cast<std::size_t>(j)]->constant_hessian();
    delta.row(j) = (H * (mixed.stack.row(j) - st.y.row(j)).transpose()).transpose();
  }
  st.s = mix_rounds(mix.s_matrix, mix.mode, mix.rounds, st.s).stack + delta;
  st.grad_y += delta;
  st.y = std::move(mixed.stack);
  for (int j = 0; j < prob.agents(); ++j)
    st.x.row(j) = st.factors[static_cast<std::size_t>(j)]
                      .step(st.y.row(j).transpose(), st.s.row(j).transpose())
                      .transpose();
  st.counters.comm_rounds += mixed.rounds;
  st.counters.grad_evals += 2.0 * prob.samples_per_agent();
  ++st.t;
}

void prox_network_dane_step(NetworkState& st, const DistributedProblem& prob,
                            const MixingScheme& mix, const AlgorithmConfig& cfg) {
  mix_and_track(st, prob, mix);
  local_solves(st, prob, [&](int j) {
    SurrogateOracle sur = surrogate_for(st, prob, j, cfg.mu);
    return fista(sur, prob.reg, st.x.row(j).transpose(), cfg.inner);
  });
  ++st.t;
}

namespace {

enum class Estimator { svrg, sarah };

void variance_reduced_step(NetworkState& st, const DistributedProblem& prob,
                           const MixingScheme& mix, const AlgorithmConfig& cfg, Estimator est) {
  if (cfg.S < 1) throw ConfigError("inner loop length S must be >= 1");
  if (!(cfg.delta > 0)) throw ConfigError("inner step delta must be > 0");
  mix_and_track(st, prob, mix);
  const int n = prob.agents();
  double sample_cost = 0.0;
  for (int j = 0; j < n; ++j) {
    const LossOracle& f = *prob.oracles[static_cast<std::size_t>(j)];
    // per-(agent, iteration) stream keeps traces independent of agent order
    std::mt19937_64 rng(mix_seed(cfg.seed ^ mix_seed((static_cast<std::uint64_t>(j) << 32) ^
                                                     static_cast<std::uint64_t>(st.t))));
    std::uniform_int_distribution<int> pick(0, f.num_samples() - 1);
    const Vector u0 = st.y.row(j).transpose();
    Vector u = u0;
    Vector v = st.s.row(j).transpose();
    const int chosen =
        cfg.output == OutputRule::random_iterate
            ? std::uniform_int_distribution<int>(1, cfg.S)(rng)
            : cfg.S;
    Vector out;
    for (int s = 1; s <= cfg.S; ++s) {
      Vector u_next = u - cfg.delta * v;
      if (!u_next.allFinite())
        throw DivergenceError("agent " + std::to_string(j) + ": inner loop diverged at step " +
                              std::to_string(s));
      if (s == chosen) {
        // later iterates cannot influence the output
        out = std::move(u_next);
        break;
      }
      const int z = pick(rng);
      if (est == Estimator::svrg)
        v = f.sample_gradient(u_next, z) - f.sample_gradient(u0, z) + st.s.row(j).transpose();
      else
        v = f.sample_gradient(u_next, z) - f.sample_gradient(u, z) + v;
      u = std::move(u_next);
    }
    st.x.row(j) = out.transpose();
    sample_cost += cfg.S;
    st.counters.inner_iters += cfg.S;
  }
  st.counters.grad_evals += sample_cost / n;
  ++st.t;
}

}  // namespace

void network_svrg_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                       const AlgorithmConfig& cfg) {
  variance_reduced_step(st, prob, mix, cfg, Estimator::svrg);
}

void network_sarah_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                        const AlgorithmConfig& cfg) {
  variance_reduced_step(st, prob, mix, cfg, Estimator::sarah);
}

void dgd_gt_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                 double eta) {
  if (!(eta > 0)) throw ConfigError("step size eta must be > 0");
  Stack x_new = netdist::mix(mix.x_matrix, st.x) - eta * st.s;
  Stack g_new = local_gradients(prob, x_new);
  MixingScheme one = mix;
  one.rounds = 1;
  one.mode = MixingMode::plain;
  st.s = track_update(one, st.s, g_new, st.grad_y);
  st.x = x_new;
  st.y = std::move(x_new);
  st.grad_y = std::move(g_new);
  st.counters.comm_rounds += 1;
  st.counters.grad_evals += 2.0 * prob.samples_per_agent();
  ++st.t;
}

void extra_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                double eta) {
  if (!(eta > 0)) throw ConfigError("step size eta must be > 0");
  Stack mixed = netdist::mix(mix.x_matrix, st.x);
  const Stack& g = st.grad_y;  // y == x for EXTRA
  Stack x_new;
  if (!st.has_prev) {
    x_new = mixed - eta * g;
  } else {
    x_new = mixed + st.x - 0.5 * (st.x_prev + st.mixed_prev) - eta * (g - st.grad_prev);
  }
  st.x_prev = st.x;
  st.mixed_prev = std::move(mixed);
  st.grad_prev = g;
  st.has_prev = true;
  st.grad_y = local_gradients(prob, x_new);
  st.s = st.grad_y;
  st.x = x_new;
  st.y = std::move(x_new);
  st.counters.comm_rounds += 1;
  st.counters.grad_evals += 2.0 * prob.samples_per_agent();
  ++st.t;
}

void dane_centralized_step(NetworkState& st, const DistributedProblem& prob,
                           const AlgorithmConfig& cfg) {
  const int n = prob.agents();
  const Vector xbar = column_mean(st.x);
  Stack anchor = Stack::Zero(n, prob.dim());
  anchor.rowwise() = xbar.transpose();
  Stack local = local_gradients(prob, anchor);
  const Vector gbar = column_mean(local);

  Stack sol(n, prob.dim());
  double inner_cost = 0.0;
  for (int j = 0; j < n; ++j) {
    if (cfg.local == LocalSolver::closed_form) {
      ensure_factors(st, prob, cfg.mu);
      sol.row(j) = st.factors[static_cast<std::size_t>(j)].step(xbar, gbar).transpose();
      continue;
    }
    SurrogateOracle sur(prob.oracles[static_cast<std::size_t>(j)], xbar, gbar, cfg.mu,
                        local.row(j).transpose());
    SolverReport rep;
    try {
      rep = nesterov_agd(sur, xbar, cfg.inner);
    } catch (const DivergenceError& e) {
      throw DivergenceError("agent " + std::to_string(j) + ": " + e.what());
    }
    sol.row(j) = rep.solution.transpose();
    inner_cost += rep.grad_evals * full_gradient_cost(prob, j);
    st.counters.inner_iters += rep.iterations;
  }
  const Vector next = column_mean(sol);
  st.x.rowwise() = next.transpose();
  st.y = st.x;
  st.grad_y = local_gradients(prob, st.y);
  st.s.rowwise() = column_mean(st.grad_y).transpose();
  st.counters.comm_rounds += 2;
  st.counters.grad_evals += 2.0 * prob.samples_per_agent() + inner_cost / n;
  ++st.t;
}

bool tracks_gradient(AlgorithmKind kind) {
  return kind != AlgorithmKind::extra && kind != AlgorithmKind::dane_centralized;
}

void step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
          const AlgorithmConfig& cfg) {
  double eta = cfg.eta;
  if (eta <= 0) {
    double L = 0.0;
    for (const auto& o : prob.oracles) L = std::max(L, o->smoothness());
    eta = 1.0 / (2.0 * L);
  }
  switch (cfg.kind) {
    case AlgorithmKind::network_dane: network_dane_step(st, prob, mix, cfg); break;
    case AlgorithmKind::network_dane_quadratic: network_dane_quadratic_step(st, prob, mix, cfg); break;
    case AlgorithmKind::prox_network_dane: prox_network_dane_step(st, prob, mix, cfg); break;
    case AlgorithmKind::network_svrg: network_svrg_step(st, prob, mix, cfg); break;
    case AlgorithmKind::network_sarah: network_sarah_step(st, prob, mix, cfg); break;
    case AlgorithmKind::dgd_gt: dgd_gt_step(st, prob, mix, eta); break;
    case AlgorithmKind::extra: extra_step(st, prob, mix, eta); break;
    case AlgorithmKind::dane_centralized: dane_centralized_step(st, prob, cfg); break;
  }
}

double tracking_discrepancy(const NetworkState& st) {
  const Vector ds = st.s.colwise().sum().transpose() - st.grad_y.colwise().sum().transpose();
  const double scale = st.s.rowwise().norm().sum() + st.grad_y.rowwise().norm().sum();
  return ds.norm() / (scale + 1e-300);
}

double tracking_error(const NetworkState& st) {
  return (st.s.rowwise() - st.grad_y.colwise().mean()).norm();
}

Reference solve_reference(const DistributedProblem& prob) {
  Reference ref;
  const auto* quad = dynamic_cast<const QuadraticOracle*>(prob.global.get());
  Vector start = Vector::Zero(prob.dim());
  if (quad) {
    Eigen::LDLT<Matrix> ldlt(quad->H());
    // least-norm fallback when the averaged Hessian is singular
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        quad->sigma() > 1e-14 * quad->smoothness())
      start = ldlt.solve(quad->c());
    else
      start = quad->H().completeOrthogonalDecomposition().solve(quad->c());
    if (prob.reg.zero()) {
      ref.y = start;
      ref.f = quad->value(ref.y);
      return ref;
    }
  }
  SolverOptions opt;
  opt.max_iters = 1000000;
  opt.grad_tol = 1e-12;
  SolverReport rep = prob.reg.zero() ? nesterov_agd(*prob.global, start, opt)
                                     : fista(*prob.global, prob.reg, start, opt);
  ref.y = rep.solution;
  ref.f = prob.global->value(ref.y) + prob.reg.value(ref.y);
  return ref;
}

ErrorVector error_vector(const NetworkState& st, const DistributedProblem& prob, const Vector& y_star,
                         double L) {
  ErrorVector e;
  const double n = static_cast<double>(st.y.rows());
  const Vector ybar = column_mean(st.y);
  e.conv = std::sqrt(n) * (ybar - y_star).norm();
  e.cons = consensus_error(st.y);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < st.y.rows(); ++j) {
    const Vector g = prob.global->gradient(st.y.row(j).transpose());
    acc += (st.s.row(j).transpose() - g).squaredNorm();
  }
  e.grad = std::sqrt(acc) / L;
  return e;
}

}  // namespace netdist
