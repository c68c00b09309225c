#include "netdist/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

namespace netdist {

namespace {

const std::set<std::string> kExperimentSections = {"", "problem", "topology", "mixing", "run"};

bool stochastic(AlgorithmKind k) {
  return k == AlgorithmKind::network_svrg || k == AlgorithmKind::network_sarah;
}

bool separate_s_from(const std::string& v, const std::string& where) {
  if (v == "separate" || v == "modified") return true;
  if (v == "same") return false;
  throw ConfigError(where + ": s_matrix must be 'separate' or 'same', got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_experiment(const Config& c) {
  ExperimentConfig e;
  e.run.seed = c.get_u64("run", "seed", 1);
  e.run.iterations = c.get_int("run", "iterations", 100);
  e.run.stop_gap = c.get_double("run", "stop_gap", 0.0);
  e.run.trials = c.get_int("run", "trials", 1);
  e.run.out = c.get_string("run", "out", "");
  e.run.format = c.get_string("run", "format", "csv");
  if (e.run.iterations < 0) throw ConfigError("run.iterations must be >= 0");
  if (e.run.trials < 1) throw ConfigError("run.trials must be >= 1");
  if (e.run.format != "csv" && e.run.format != "json")
    throw ConfigError("run.format must be csv or json");

  auto& p = e.problem;
  p.source = c.get_string("problem", "source", "synthetic");
  p.loss = parse_loss_kind(c.get_string("problem", "loss", "quadratic"));
  p.lambda = c.get_double("problem", "lambda", 0.0);
  p.l1 = c.get_double("problem", "l1", 0.0);
  if (p.l1 < 0) throw ConfigError("problem.l1 must be >= 0");
  if (p.source == "synthetic") {
    auto& s = p.synthetic;
    s.m = c.get_int("problem", "m", 1000);
    s.d = c.get_int("problem", "d", 40);
    s.n = c.get_int("problem", "n", 20);
    s.noise_std = c.get_double("problem", "noise_std", 1.0);
    s.seed = c.get_u64("problem", "seed", e.run.seed);
    s.identical_shards = c.get_bool("problem", "identical_shards", false);
    if (c.has("problem", "kappa")) {
      if (c.has("problem", "varrho")) throw ConfigError("problem: give kappa or varrho, not both");
      p.kappa = c.get_double("problem", "kappa", 1.0);
      s.varrho = varrho_for_condition(*p.kappa, s.d);
    } else {
      s.varrho = c.get_double("problem", "varrho", 0.0);
    }
    p.agents = s.n;
    if (p.loss == LossKind::logistic)
      throw ConfigError("synthetic data is regression data; use loss = quadratic");
  } else if (p.source == "file") {
    std::filesystem::path path = c.require_string("problem", "path");
    if (path.is_relative()) path = c.base_dir() / path;
    if (!std::filesystem::exists(path))
      throw ConfigError("dataset file '" + path.string() + "' does not exist");
    p.path = path;
    p.format = c.get_string("problem", "format", "csv");
    p.agents = c.get_int("problem", "n", 20);
    p.synthetic.d = c.get_int("problem", "d", 0);
  } else {
    throw ConfigError("problem.source must be synthetic or file");
  }

  auto& t = e.topology;
  t.kind = parse_graph_kind(c.get_string("topology", "kind", "erdos_renyi"));
  t.params.p = c.get_double("topology", "p", 0.3);
  t.params.rows = c.get_int("topology", "rows", 0);
  t.params.cols = c.get_int("topology", "cols", 0);
  if (t.kind == GraphKind::custom) {
    std::filesystem::path edges = c.require_string("topology", "edges");
    if (edges.is_relative()) edges = c.base_dir() / edges;
    if (!std::filesystem::exists(edges))
      throw ConfigError("edge list '" + edges.string() + "' does not exist");
    t.edges = edges;
  }

  auto& m = e.mixing;
  m.weights = c.get_string("mixing", "weights", "metropolis");
  if (m.weights != "metropolis" && m.weights != "fdla") {
    std::filesystem::path w = m.weights;
    if (w.is_relative()) w = c.base_dir() / w;
    if (!std::filesystem::exists(w))
      throw ConfigError("mixing matrix file '" + w.string() + "' does not exist");
    m.weights = w.string();
  }
  m.K = c.get_int("mixing", "K", 1);
  if (m.K < 1) throw ConfigError("mixing.K must be >= 1");
  m.mode = parse_mixing_mode(c.get_string("mixing", "mode", "plain"));
  m.separate_s = separate_s_from(c.get_string("mixing", "s_matrix", "separate"), "mixing");
  m.s_min_diag = c.get_double("mixing", "s_min_diag", 0.1);

  for (const auto& section : c.sections_with_prefix("algorithm.")) {
    AlgorithmSpec a;
    a.label = section.substr(std::string("algorithm.").size());
    a.cfg.kind = parse_algorithm(c.get_string(section, "type", a.label));
    a.cfg.mu = c.get_double(section, "mu", 0.0);
    a.cfg.eta = c.get_double(section, "eta", 0.0);
    a.cfg.delta = c.get_double(section, "delta", 0.0);
    a.cfg.S = c.get_int(section, "S", 0);  // 0: 5% of the local samples
    a.cfg.output = parse_output_rule(c.get_string(section, "output_rule", "last_iterate"));
    const std::string ls = c.get_string(section, "local_solver", "nesterov");
    if (ls == "nesterov") a.cfg.local = LocalSolver::nesterov;
    else if (ls == "closed_form") a.cfg.local = LocalSolver::closed_form;
    else throw ConfigError(section + ".local_solver must be nesterov or closed_form");
    a.cfg.inner.max_iters = c.get_int(section, "inner_iters", 100);
    a.cfg.inner.grad_tol = c.get_double(section, "inner_tol", 1e-10);
    a.cfg.seed = e.run.seed;
    if (c.has(section, "K")) a.K = c.get_int(section, "K", 1);
    if (c.has(section, "mode")) a.mode = parse_mixing_mode(c.get_string(section, "mode", "plain"));
    if (c.has(section, "s_matrix"))
      a.separate_s = separate_s_from(c.get_string(section, "s_matrix", "separate"), section);
    a.params = c.get_string(section, "params", "");
    if (!a.params.empty()) parse_regime(a.params);
    if (a.K && *a.K < 1) throw ConfigError(section + ".K must be >= 1");
    if (a.cfg.mu < 0) throw ConfigError(section + ".mu must be >= 0");
    if (a.cfg.eta < 0 || a.cfg.delta < 0) throw ConfigError(section + ": step sizes must be >= 0");
    if (a.cfg.S < 0) throw ConfigError(section + ".S must be >= 1");
    e.algorithms.push_back(std::move(a));
  }
  if (e.algorithms.empty()) throw ConfigError(c.origin() + ": no [algorithm.<name>] sections");

  std::vector<std::string> stray;
  for (const auto& key : c.unused()) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    if (kExperimentSections.count(section) || section == "algorithm" ||
        key.rfind("algorithm.", 0) == 0)
      stray.push_back(key);
  }
  if (!stray.empty()) {
    std::string msg = c.origin() + ": unknown key(s)";
    for (const auto& k : stray) msg += " " + k;
    throw ConfigError(msg);
  }
  for (const auto& [section, kv] : c.entries())
    for (const auto& [key, value] : kv)
      e.echo.emplace_back(section.empty() ? key : section + "." + key, value);
  return e;
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  std::vector<Shard> shards;
  Vector truth;
  if (p.source == "synthetic") {
    SyntheticData data = generate_synthetic(p.synthetic);
    shards = std::move(data.shards);
    truth = std::move(data.x0);
  } else {
    Dataset data = load_dataset(p.path, p.format, p.synthetic.d,
                                p.loss == LossKind::logistic ? DataKind::binary : DataKind::regression);
    shards = partition(data, p.agents);
  }
  const int n = static_cast<int>(shards.size());
  DistributedProblem prob =
      DistributedProblem::make(make_oracles(shards, p.loss, p.lambda), Regularizer{p.l1});

  Graph graph = cfg.topology.kind == GraphKind::custom
                    ? read_edge_list(cfg.topology.edges, n)
                    : build_graph(cfg.topology.kind, n, cfg.topology.params, cfg.run.seed);
  if (graph.size() != n)
    throw ConfigError("graph has " + std::to_string(graph.size()) + " nodes but there are " +
                      std::to_string(n) + " agents");
  MixingMatrix W = cfg.mixing.weights == "metropolis" ? metropolis_weights(graph)
                   : cfg.mixing.weights == "fdla"
                       ? fdla_weights(graph)
                       : MixingMatrix::from_matrix(read_matrix_csv(cfg.mixing.weights), &graph);

  Reference ref = solve_reference(prob);
  ProblemConstants constants;
  if (p.loss == LossKind::quadratic) {
    constants = measure_constants(prob.oracles, ConstantsMode::exact);
  } else {
    constants = measure_constants(prob.oracles, ConstantsMode::sampled,
                                  {Vector::Zero(prob.dim()), ref.y});
  }

  std::mt19937_64 rng(mix_seed(cfg.run.seed) ^ 0x5851F42D4C957F2DULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Stack x0(n, prob.dim());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < prob.dim(); ++k) x0(j, k) = gauss(rng);

  return Experiment{std::move(prob), std::move(graph), std::move(W), std::move(constants),
                    std::move(ref), std::move(x0), std::move(truth)};
}

void MetricsTrace::set(const std::string& key, MetaValue value) {
  for (auto& [k, v] : metadata)
    if (k == key) {
      v = std::move(value);
      return;
    }
  metadata.emplace_back(key, std::move(value));
}

const MetaValue* MetricsTrace::find(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

bool gap_is_absolute(const Experiment& exp) { return std::abs(exp.ref.f) <= 1e-14; }

double optimality_gap(const Experiment& exp, const NetworkState& st) {
  const Vector xbar = column_mean(st.x);
  double gap;
  const auto* quad = dynamic_cast<const QuadraticOracle*>(exp.prob.global.get());
  if (quad && exp.prob.reg.zero()) {
    // F(x) - F(y*) = (1/2) e^T H e exactly; avoids cancellation near the optimum
    const Vector e = xbar - exp.ref.y;
    gap = 0.5 * e.dot(quad->H() * e);
  } else {
    gap = exp.prob.global->value(xbar) + exp.prob.reg.value(xbar) - exp.ref.f;
  }
  return gap_is_absolute(exp) ? gap : gap / exp.ref.f;
}

TraceRow measure(const Experiment& exp, const NetworkState& st) {
  TraceRow r;
  r.t = st.t;
  r.comm_rounds = st.counters.comm_rounds;
  r.grad_evals = st.counters.grad_evals;
  r.rel_gap = optimality_gap(exp, st);
  r.consensus_err = consensus_error(st.x);
  r.tracking_err = tracking_error(st);
  const ErrorVector e = error_vector(st, exp.prob, exp.ref.y, exp.constants.L);
  r.conv_e = e.conv;
  r.cons_e = e.cons;
  r.grad_e = e.grad;
  return r;
}

AlgorithmSpec resolve_parameters(const Experiment& exp, const ExperimentConfig& cfg,
                                 const AlgorithmSpec& spec, std::vector<std::string>* notes) {
  AlgorithmSpec out = spec;
  if (stochastic(spec.cfg.kind)) {
    const auto& c = exp.constants;
    if (out.cfg.delta <= 0) out.cfg.delta = 0.1 / (c.L + c.sigma + 2.0 * out.cfg.mu);
    if (out.cfg.S <= 0)
      out.cfg.S = std::max(1, static_cast<int>(std::ceil(0.05 * exp.prob.samples_per_agent())));
  }
  if (spec.params.empty()) return out;
  const Regime regime = parse_regime(spec.params);
  ProblemSummary ps{exp.constants.sigma, exp.constants.L, exp.constants.beta};
  // the variance-reduced guarantee needs every sample loss L-smooth
  if (regime == Regime::thm5) ps.L = std::max(exp.constants.L_sample, exp.constants.L);
  const int K = spec.K.value_or(cfg.mixing.K);
  ParameterChoice pc = select_parameters(regime, ps, exp.W.alpha0(), K);
  out.K = pc.K;
  if (regime == Regime::thm5) {
    if (spec.cfg.kind == AlgorithmKind::network_svrg) {
      out.cfg.delta = pc.svrg_delta;
      out.cfg.S = pc.svrg_S;
    } else if (spec.cfg.kind == AlgorithmKind::network_sarah) {
      out.cfg.delta = pc.sarah_delta;
      out.cfg.S = pc.sarah_S;
    } else {
      throw ConfigError(spec.label + ": params = thm5 applies to network_svrg/network_sarah only");
    }
    if (!(out.cfg.delta > 0)) throw ConfigError(spec.label + ": thm5 parameters are undefined here");
  } else {
    out.cfg.mu = pc.mu;
  }
  if (notes)
    for (auto& w : pc.warnings) notes->push_back(spec.label + ": " + w);
  return out;
}

MixingScheme scheme_for(const Experiment& exp, const ExperimentConfig& cfg,
                        const AlgorithmSpec& spec) {
  const int K = spec.K.value_or(cfg.mixing.K);
  const MixingMode mode = spec.mode.value_or(cfg.mixing.mode);
  const bool separate = spec.separate_s.value_or(cfg.mixing.separate_s);
  MixingScheme s = MixingScheme::uniform(exp.W, K, mode);
  if (separate) s.s_matrix = s_mixing_matrix(exp.W, cfg.mixing.s_min_diag);
  return s;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::vector<TraceRow> median_rows(const std::vector<std::vector<TraceRow>>& runs) {
  std::size_t len = runs.front().size();
  for (const auto& r : runs) len = std::min(len, r.size());
  std::vector<TraceRow> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto col = [&](double TraceRow::*field) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r[i].*field);
      return median(std::move(v));
    };
    out[i] = runs.front()[i];
    out[i].grad_evals = col(&TraceRow::grad_evals);
    out[i].rel_gap = col(&TraceRow::rel_gap);
    out[i].consensus_err = col(&TraceRow::consensus_err);
    out[i].tracking_err = col(&TraceRow::tracking_err);
    out[i].conv_e = col(&TraceRow::conv_e);
    out[i].cons_e = col(&TraceRow::cons_e);
    out[i].grad_e = col(&TraceRow::grad_e);
  }
  return out;
}

bool finite_state(const NetworkState& st) {
  return st.x.allFinite() && st.y.allFinite() && st.s.allFinite();
}

}  // namespace

MetricsTrace run_algorithm(const Experiment& exp, const ExperimentConfig& cfg,
                           const AlgorithmSpec& raw, const RunOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::string> notes;
  const AlgorithmSpec spec = resolve_parameters(exp, cfg, raw, &notes);
  const MixingScheme scheme = scheme_for(exp, cfg, spec);
  const int trials = stochastic(spec.cfg.kind) ? cfg.run.trials : 1;

  MetricsTrace trace;
  trace.algorithm = spec.label;
  std::vector<std::vector<TraceRow>> runs;
  for (int trial = 0; trial < trials; ++trial) {
    AlgorithmConfig ac = spec.cfg;
    ac.seed = trials == 1 ? cfg.run.seed : mix_seed(cfg.run.seed + static_cast<std::uint64_t>(trial));
    NetworkState st = init_state(exp.x0, exp.prob);
    std::vector<TraceRow> rows;
    rows.push_back(measure(exp, st));
    if (opt.keep_states && trial == 0) trace.states.push_back(st);
    const auto reached = [&](const TraceRow& r) {
      return cfg.run.stop_gap > 0 && r.rel_gap <= cfg.run.stop_gap;
    };
    for (int t = 1; t <= cfg.run.iterations && !reached(rows.back()); ++t) {
      try {
        step(st, exp.prob, scheme, ac);
      } catch (const Error& e) {
        throw Error(spec.label + " iteration " + std::to_string(t) + ": " + e.what());
      }
      if (!finite_state(st))
        throw DivergenceError(spec.label + " iteration " + std::to_string(t) +
                              ": iterates became non-finite");
      rows.push_back(measure(exp, st));
      if (opt.keep_states && trial == 0) trace.states.push_back(st);
    }
    runs.push_back(std::move(rows));
  }
  trace.rows = trials == 1 ? std::move(runs.front()) : median_rows(runs);

  const auto& c = exp.constants;
  trace.set("algorithm", std::string(to_string(spec.cfg.kind)));
  trace.set("label", spec.label);
  trace.set("n", static_cast<long long>(exp.prob.agents()));
  trace.set("d", static_cast<long long>(exp.prob.dim()));
  trace.set("m", exp.prob.samples_per_agent());
  trace.set("alpha0", exp.W.alpha0());
  trace.set("sigma", c.sigma);
  trace.set("L", c.L);
  trace.set("L_sample", c.L_sample);
  trace.set("kappa", c.kappa);
  trace.set("beta", c.beta);
  trace.set("beta_estimated", c.beta_estimated);
  trace.set("f_star", exp.ref.f);
  trace.set("gap_kind", std::string(gap_is_absolute(exp) ? "absolute" : "relative"));
  trace.set("mu", spec.cfg.mu);
  double eta = spec.cfg.eta;
  if (eta <= 0) eta = 1.0 / (2.0 * c.L);
  trace.set("eta", eta);
  trace.set("delta", spec.cfg.delta);
  trace.set("S", static_cast<long long>(spec.cfg.S));
  trace.set("K", static_cast<long long>(scheme.rounds));
  trace.set("mixing_mode", std::string(to_string(scheme.mode)));
  trace.set("s_matrix", std::string(spec.separate_s.value_or(cfg.mixing.separate_s) ? "separate" : "same"));
  trace.set("alpha", scheme.alpha());
  trace.set("params", spec.params.empty() ? std::string("manual") : spec.params);
  trace.set("local_solver", std::string(spec.cfg.local == LocalSolver::nesterov ? "nesterov" : "closed_form"));
  trace.set("inner_iters", static_cast<long long>(spec.cfg.inner.max_iters));
  trace.set("inner_tol", spec.cfg.inner.grad_tol);
  trace.set("output_rule", std::string(to_string(spec.cfg.output)));
  trace.set("seed", static_cast<long long>(cfg.run.seed));
  trace.set("trials", static_cast<long long>(trials));
  trace.set("iterations", static_cast<long long>(cfg.run.iterations));
  trace.set("stop_gap", cfg.run.stop_gap);
  trace.set("grad_eval_unit", std::string("per-agent average of sample gradients; full local gradient = m"));
  for (std::size_t i = 0; i < notes.size(); ++i) trace.set("warning." + std::to_string(i), notes[i]);
  for (const auto& [k, v] : cfg.echo) trace.set("config." + k, v);
  trace.set("wall_time_s",
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return trace;
}

std::vector<MetricsTrace> run_experiment(const ExperimentConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  std::vector<MetricsTrace> out;
  for (const auto& spec : cfg.algorithms) out.push_back(run_algorithm(exp, cfg, spec));
  return out;
}

}  // namespace netdist
