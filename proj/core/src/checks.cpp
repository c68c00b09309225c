#include "netdist/harness.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

namespace netdist {

OracleList random_quadratic_ensemble(int n, int d, std::uint64_t seed, double max_varrho) {
  if (n < 1 || d < 1) throw ConfigError("ensemble needs n, d >= 1");
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> unif(0.0, max_varrho);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x0(d);
  for (int k = 0; k < d; ++k) x0(k) = gauss(rng);
  OracleList out;
  const int m = 3 * d;
  for (int j = 0; j < n; ++j) {
    const double varrho = unif(rng);
    Shard sh;
    sh.agent = j;
    sh.A.resize(m, d);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < d; ++k) sh.A(i, k) = gauss(rng) * std::pow(k + 1.0, -0.5 * varrho);
    sh.b = sh.A * x0;
    for (int i = 0; i < m; ++i) sh.b(i) += 0.1 * gauss(rng);
    out.push_back(std::make_shared<QuadraticOracle>(sh));
  }
  return out;
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// NaN when the formula is outside its domain.
template <class F>
double guarded(F&& f) {
  try {
    return f();
  } catch (const DomainError&) {
    return std::nan("");
  }
}

Stack random_stack(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Stack v(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) v(i, k) = gauss(rng);
  return v;
}

struct SuiteContext {
  const Config& cfg;
  std::string section;
  std::uint64_t seed;
};

CheckResult lemma1_suite(const SuiteContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& s = ctx.section;
  const int instances = c.get_int(s, "instances", 20);
  const int n = c.get_int(s, "n", 5);
  const int d = c.get_int(s, "d", 8);
  const int iters = c.get_int(s, "iterations", 100);
  const double slack = c.get_double(s, "slack", 1e-10);
  const double p = c.get_double(s, "p", 0.6);
  CheckResult res{"lemma1", true, ""};
  double worst = -HUGE_VAL;
  for (int inst = 0; inst < instances; ++inst) {
    const std::uint64_t seed = mix_seed(ctx.seed + static_cast<std::uint64_t>(inst));
    DistributedProblem prob = DistributedProblem::make(random_quadratic_ensemble(n, d, seed));
    const auto k = measure_constants(prob.oracles, ConstantsMode::exact);
    const Graph g = build_graph(GraphKind::erdos_renyi, n, GraphParams{p, 0, 0}, seed);
    const MixingMatrix W = metropolis_weights(g);
    const ParameterChoice pc =
        select_parameters(Regime::thm1, ProblemSummary{k.sigma, k.L, k.beta}, W.alpha0(), 1);
    AlgorithmConfig ac;
    ac.kind = AlgorithmKind::network_dane;
    ac.local = LocalSolver::closed_form;
    ac.mu = pc.mu;
    const MixingScheme scheme = MixingScheme::uniform(W, 1);
    const Reference ref = solve_reference(prob);
    std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
    NetworkState st = init_state(random_stack(n, d, rng), prob);
    std::vector<Vector> trace{error_vector(st, prob, ref.y, k.L).as_vector()};
    for (int t = 0; t < iters; ++t) {
      step(st, prob, scheme, ac);
      trace.push_back(error_vector(st, prob, ref.y, k.L).as_vector());
    }
    const RateModel rm{k.sigma, k.L, k.beta, W.alpha0(), pc.mu};
    const auto rep = lyapunov_check(trace, lyapunov_matrix(rm, Lemma::lemma1).G, slack);
    worst = std::max(worst, rep.worst_margin);
    if (!rep.pass && res.pass) {
      res.pass = false;
      res.detail = "instance " + std::to_string(inst) + " violates component " +
                   std::to_string(rep.component) + " at t=" + std::to_string(rep.t) + " by " +
                   short_num(rep.excess);
    }
  }
  if (res.pass)
    res.detail = std::to_string(instances) + " instances, worst margin " + short_num(worst);
  return res;
}

CheckResult tracking_suite(const SuiteContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& s = ctx.section;
  SyntheticParams sp;
  sp.n = c.get_int(s, "n", 20);
  sp.d = c.get_int(s, "d", 40);
  sp.m = c.get_int(s, "m", 200);
  sp.varrho = varrho_for_condition(c.get_double(s, "kappa", 10.0), sp.d);
  sp.seed = ctx.seed;
  const int iters = c.get_int(s, "iterations", 200);
  const double tol = c.get_double(s, "tol", 1e-9);
  const auto data = generate_synthetic(sp);
  DistributedProblem prob = DistributedProblem::make(make_oracles(data.shards, LossKind::quadratic));
  const auto k = measure_constants(prob.oracles, ConstantsMode::exact);
  const Graph g = build_graph(GraphKind::erdos_renyi, sp.n, GraphParams{0.3, 0, 0}, ctx.seed);
  const MixingMatrix W = metropolis_weights(g);
  const MixingScheme scheme = MixingScheme::with_s_matrix(W, 1);
  std::mt19937_64 rng(ctx.seed);
  const Stack x0 = random_stack(sp.n, sp.d, rng);

  CheckResult res{"tracking", true, ""};
  double worst = 0.0;
  for (AlgorithmKind kind : {AlgorithmKind::network_dane, AlgorithmKind::network_svrg,
                             AlgorithmKind::network_sarah, AlgorithmKind::dgd_gt}) {
    AlgorithmConfig ac;
    ac.kind = kind;
    ac.mu = 1e-6;
    ac.delta = 1.0 / (40.0 * k.L);
    ac.S = 50;
    ac.seed = ctx.seed;
    NetworkState st = init_state(x0, prob);
    for (int t = 1; t <= iters; ++t) {
      step(st, prob, scheme, ac);
      const double disc = tracking_discrepancy(st);
      worst = std::max(worst, disc);
      if (!(disc <= tol) && res.pass) {
        res.pass = false;
        res.detail = std::string(to_string(kind)) + " discrepancy " + short_num(disc) + " at t=" +
                     std::to_string(t);
      }
    }
  }
  if (res.pass) res.detail = "worst relative discrepancy " + short_num(worst);
  return res;
}

CheckResult mixing_suite(const SuiteContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& s = ctx.section;
  const int graphs = c.get_int(s, "graphs", 10);
  const int stacks = c.get_int(s, "stacks", 100);
  const int n = c.get_int(s, "n", 20);
  const int d = c.get_int(s, "d", 5);
  const auto Ks = c.get_ints(s, "K", {1, 2, 5});
  const double slack = c.get_double(s, "slack", 1e-10);
  CheckResult res{"mixing", true, ""};
  std::mt19937_64 rng(mix_seed(ctx.seed));
  for (int gi = 0; gi < graphs; ++gi) {
    const Graph g = build_graph(GraphKind::erdos_renyi, n, GraphParams{0.3, 0, 0},
                               mix_seed(ctx.seed + static_cast<std::uint64_t>(gi)));
    const MixingMatrix W = metropolis_weights(g);
    for (int si = 0; si < stacks; ++si) {
      const Stack v = random_stack(n, d, rng);
      const double e0 = consensus_error(v);
      for (int K : Ks)
        for (MixingMode mode : {MixingMode::plain, MixingMode::chebyshev}) {
          const double e = consensus_error(mix_rounds(W, mode, K, v).stack);
          const double bound = effective_rate(W.alpha0(), mode, K) * e0 + slack;
          if (e > bound && res.pass) {
            res.pass = false;
            res.detail = std::string(to_string(mode)) + " K=" + std::to_string(K) + " graph " +
                         std::to_string(gi) + ": " + short_num(e) + " > " + short_num(bound);
          }
        }
    }
  }
  if (res.pass)
    res.detail = std::to_string(graphs * stacks) + " stacks within alpha-rate bounds";
  return res;
}

CheckResult spectral_suite(const SuiteContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& s = ctx.section;
  const int points = c.get_int(s, "points", 100);
  CheckResult res{"spectral", true, ""};
  std::mt19937_64 rng(mix_seed(ctx.seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst1 = -HUGE_VAL, worst2 = -HUGE_VAL;
  for (int i = 0; i < points; ++i) {
    const double sigma = std::pow(10.0, -2.0 + 2.0 * u(rng));
    const double L = sigma * std::pow(10.0, 3.0 * u(rng));
    const double beta = u(rng) * (L - sigma);
    const double alpha = 0.95 * u(rng);
    const double factor = 1.0 + 9.0 * u(rng);
    const ProblemSummary ps{sigma, L, beta};
    const auto p1 = select_parameters(Regime::thm1, ps, alpha, 1);
    const auto p3 = select_parameters(Regime::thm3, ps, alpha, 1);
    const RateModel m1{sigma, L, beta, alpha, factor * (p1.mu + sigma) - sigma};
    const RateModel m3{sigma, L, beta, alpha, factor * (p3.mu + sigma) - sigma};
    const double g1 = spectral_radius(lyapunov_matrix(m1, Lemma::simplified1).G);
    const double g2 = spectral_radius(lyapunov_matrix(m3, Lemma::simplified2).G);
    worst1 = std::max(worst1, g1 - rho1(m1));
    worst2 = std::max(worst2, g2 - rho2(m3));
    if (res.pass && (g1 > rho1(m1) || g2 > rho2(m3))) {
      res.pass = false;
      res.detail = "grid point " + std::to_string(i) + ": rho(G1)=" + num(g1) + " rho1=" +
                   num(rho1(m1)) + " rho(G2)=" + num(g2) + " rho2=" + num(rho2(m3));
    }
  }
  if (res.pass)
    res.detail = std::to_string(points) + " points, max rho(G1)-rho1 " + short_num(worst1) +
                 ", max rho(G2)-rho2 " + short_num(worst2);
  return res;
}

CheckResult beta_suite(const SuiteContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& s = ctx.section;
  const int ensembles = c.get_int(s, "ensembles", 50);
  const int n = c.get_int(s, "n", 10);
  const int d = c.get_int(s, "d", 6);
  CheckResult res{"beta", true, ""};
  double worst = -HUGE_VAL;
  for (int e = 0; e < ensembles; ++e) {
    const auto oracles =
        random_quadratic_ensemble(n, d, mix_seed(ctx.seed + static_cast<std::uint64_t>(e)), 2.0);
    const auto k = measure_constants(oracles, ConstantsMode::exact);
    const double bound = (1.0 - 1.0 / n) * (k.L - k.sigma) + 1e-10;
    worst = std::max(worst, k.beta - bound);
    if (k.beta > bound && res.pass) {
      res.pass = false;
      res.detail = "ensemble " + std::to_string(e) + ": beta " + num(k.beta) + " > " + num(bound);
    }
  }
  if (res.pass) res.detail = std::to_string(ensembles) + " ensembles, max excess " + short_num(worst);
  return res;
}

}  // namespace

std::vector<CheckResult> run_checks(const Config& cfg) {
  const auto suites = cfg.get_string("check", "suites", "");
  std::vector<std::string> names;
  {
    std::stringstream ss(suites);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t[]");
      const auto e = item.find_last_not_of(" \t[]");
      if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
    }
  }
  if (names.empty()) throw ConfigError(cfg.origin() + ": [check] suites is empty or missing");
  const std::uint64_t seed = cfg.get_u64("check", "seed", 1);
  std::vector<CheckResult> out;
  for (const auto& name : names) {
    SuiteContext ctx{cfg, "check." + name, cfg.get_u64("check." + name, "seed", seed)};
    if (name == "lemma1") out.push_back(lemma1_suite(ctx));
    else if (name == "tracking") out.push_back(tracking_suite(ctx));
    else if (name == "mixing") out.push_back(mixing_suite(ctx));
    else if (name == "spectral") out.push_back(spectral_suite(ctx));
    else if (name == "beta") out.push_back(beta_suite(ctx));
    else throw ConfigError("unknown check suite '" + name + "'");
  }
  cfg.reject_unused();
  return out;
}

void write_rates_table(const Config& cfg, std::ostream& out) {
  const std::string s = "rates";
  if (!cfg.has_section(s)) throw ConfigError(cfg.origin() + ": missing [rates] section");
  const double sigma = cfg.get_double(s, "sigma", 1.0);
  const double L = cfg.get_double(s, "L", 10.0);
  const double alpha0 = cfg.get_double(s, "alpha0", 0.5);
  const auto betas = cfg.get_doubles(s, "beta", {0.0});
  const auto Ks = cfg.get_ints(s, "K", {1});
  const auto mus = cfg.get_doubles(s, "mu", {1.0});
  const MixingMode mode = parse_mixing_mode(cfg.get_string(s, "mode", "plain"));
  cfg.reject_unused();
  if (!(sigma > 0 && sigma <= L)) throw ConfigError("[rates]: need 0 < sigma <= L");
  if (!(alpha0 >= 0 && alpha0 < 1)) throw ConfigError("[rates]: need 0 <= alpha0 < 1");
  for (int K : Ks)
    if (K < 1) throw ConfigError("[rates]: K must be >= 1");
  for (double mu : mus)
    if (mu < 0) throw ConfigError("[rates]: mu must be >= 0");

  out << "mu,K,beta,alpha,theta1,theta2,rho1,rho2,rho_G_lemma1,rho_G_lemma2\n";
  for (double mu : mus)
    for (int K : Ks)
      for (double beta : betas) {
        const double alpha = effective_rate(alpha0, mode, K);
        const RateModel m{sigma, L, beta, alpha, mu};
        out << num(mu) << ',' << K << ',' << num(beta) << ',' << num(alpha) << ','
            << num(guarded([&] { return theta1(m); })) << ','
            << num(guarded([&] { return theta2(m); })) << ','
            << num(guarded([&] { return rho1(m); })) << ','
            << num(guarded([&] { return rho2(m); })) << ','
            << num(guarded([&] { return spectral_radius(lyapunov_matrix(m, Lemma::lemma1).G); }))
            << ','
            << num(guarded([&] { return spectral_radius(lyapunov_matrix(m, Lemma::lemma2).G); }))
            << '\n';
      }
}

}  // namespace netdist
