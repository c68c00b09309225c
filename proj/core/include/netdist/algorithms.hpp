#pragma once

// Iteration engines over a simulated network: Network-DANE (general,
// quadratic closed form, proximal), Network-SVRG/SARAH and the baselines.

#include "netdist/network.hpp"
#include "netdist/problem.hpp"
#include "netdist/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace netdist {

enum class AlgorithmKind {
  network_dane,
  network_dane_quadratic,
  prox_network_dane,
  network_svrg,
  network_sarah,
  dgd_gt,
  extra,
  dane_centralized,
};

std::string_view to_string(AlgorithmKind kind);
AlgorithmKind parse_algorithm(std::string_view name);

enum class LocalSolver { nesterov, closed_form };
enum class OutputRule { last_iterate, random_iterate };

std::string_view to_string(OutputRule rule);
OutputRule parse_output_rule(std::string_view name);

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::network_dane;
  double mu = 0.0;     // DANE proximal weight
  double eta = 0.0;    // DGD-GT / EXTRA step; 0 selects 1/(2L)
  double delta = 0.0;  // SVRG/SARAH inner step
  int S = 1;           // SVRG/SARAH inner loop length
  OutputRule output = OutputRule::last_iterate;
  LocalSolver local = LocalSolver::nesterov;
  SolverOptions inner;
  std::uint64_t seed = 1;
};

/// Everything the agents see: local oracles, the global average and the
/// (possibly zero) regularizer shared by all agents.
struct DistributedProblem {
  OracleList oracles;
  OraclePtr global;
  Regularizer reg;

  static DistributedProblem make(OracleList oracles, Regularizer reg = {});
  int agents() const { return static_cast<int>(oracles.size()); }
  int dim() const { return oracles.front()->dim(); }
  /// Mean local sample count m (the cost of one full local gradient).
  double samples_per_agent() const;
};

struct Counters {
  long comm_rounds = 0;
  double grad_evals = 0.0;  // per-agent average, unit = one sample-gradient
  long inner_iters = 0;     // summed over agents
};

struct NetworkState {
  Stack x, y, s;
  Stack grad_y;  // row j = grad f_j(y_j)
  int t = 0;
  Counters counters;

  // EXTRA keeps the previous iterate and what was derived from it.
  Stack x_prev, mixed_prev, grad_prev;
  bool has_prev = false;

  // cached (H_j + mu I) factorizations for closed-form local steps
  std::vector<QuadraticDaneFactor> factors;
  double factor_mu = -1.0;
};

/// y = x and s_j = grad f_j(y_j).
NetworkState init_state(const Stack& x0, const DistributedProblem& prob);

/// Stack of local gradients, row j = grad f_j(v_j).
Stack local_gradients(const DistributedProblem& prob, const Stack& v);

void network_dane_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                       const AlgorithmConfig& cfg);
/// Quadratic closed form: s' = mix(s) + H_j (y'_j - y_j), x'_j = y'_j - (H_j + mu I)^-1 s'_j.
void network_dane_quadratic_step(NetworkState& st, const DistributedProblem& prob,
                                 const MixingScheme& mix, const AlgorithmConfig& cfg);
void prox_network_dane_step(NetworkState& st, const DistributedProblem& prob,
                            const MixingScheme& mix, const AlgorithmConfig& cfg);
void network_svrg_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                       const AlgorithmConfig& cfg);
void network_sarah_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                        const AlgorithmConfig& cfg);
/// One communication round; the scheme's K is ignored.
void dgd_gt_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                 double eta);
/// EXTRA with W~ = (I + W) / 2. One communication round.
void extra_step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
                double eta);
/// Master/slave DANE on the average of the rows of st.x.
void dane_centralized_step(NetworkState& st, const DistributedProblem& prob,
                           const AlgorithmConfig& cfg);

/// Dispatch on cfg.kind; eta = 0 resolves to 1/(2 L) with L the local smoothness bound.
void step(NetworkState& st, const DistributedProblem& prob, const MixingScheme& mix,
          const AlgorithmConfig& cfg);

/// True for algorithms that maintain s as a gradient tracker.
bool tracks_gradient(AlgorithmKind kind);

/// ||sum_j s_j - sum_j grad f_j(y_j)|| relative to sum_j (||s_j|| + ||grad f_j(y_j)||).
double tracking_discrepancy(const NetworkState& st);

struct Reference {
  Vector y;
  double f = 0.0;
};

/// Minimizer of (1/n) sum f_j + g: direct solve for smooth quadratics,
/// Nesterov or FISTA to 1e-12 otherwise.
Reference solve_reference(const DistributedProblem& prob);

struct ErrorVector {
  double conv = 0.0;  // sqrt(n) ||mean(y) - y*||
  double cons = 0.0;  // ||y - 1 mean(y)||_F
  double grad = 0.0;  // ||s - grad f(y)|| / L, global gradient at every y_j

  Vector as_vector() const { return Vector{{conv, cons, grad}}; }
};

ErrorVector error_vector(const NetworkState& st, const DistributedProblem& prob, const Vector& y_star,
                         double L);

/// ||s - 1 (1/n) sum_j grad f_j(y_j)||_F.
double tracking_error(const NetworkState& st);

}  // namespace netdist
