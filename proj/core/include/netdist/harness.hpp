#pragma once

// Experiment orchestration: config -> problem/graph/matrices -> traces, plus
// the rate tables and check suites behind the CLI.

#include "netdist/algorithms.hpp"
#include "netdist/config.hpp"
#include "netdist/network.hpp"
#include "netdist/problem.hpp"
#include "netdist/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace netdist {

struct ProblemSpec {
  std::string source = "synthetic";  // synthetic | file
  SyntheticParams synthetic;
  std::optional<double> kappa;  // target feature condition number, overrides varrho
  std::filesystem::path path;
  std::string format = "csv";
  LossKind loss = LossKind::quadratic;
  double lambda = 0.0;  // l2 weight of the logistic loss
  double l1 = 0.0;      // composite l1 weight
  int agents = 20;      // n for file datasets
};

struct TopologySpec {
  GraphKind kind = GraphKind::erdos_renyi;
  GraphParams params;
  std::filesystem::path edges;  // custom graphs
};

struct MixingSpec {
  std::string weights = "metropolis";  // metropolis | fdla | CSV path
  int K = 1;
  MixingMode mode = MixingMode::plain;
  bool separate_s = true;  // s mixed with the diagonal-boosted matrix
  double s_min_diag = 0.1;
};

struct AlgorithmSpec {
  std::string label;
  AlgorithmConfig cfg;
  std::optional<int> K;
  std::optional<MixingMode> mode;
  std::optional<bool> separate_s;
  std::string params;  // theory regime used to fill mu / K / delta / S, empty = manual
};

struct RunSpec {
  int iterations = 100;
  double stop_gap = 0.0;  // stop once rel_gap <= stop_gap (0 disables)
  int trials = 1;         // medians over seeds for the stochastic methods
  std::uint64_t seed = 1;
  std::filesystem::path out;
  std::string format = "csv";
};

struct ExperimentConfig {
  ProblemSpec problem;
  TopologySpec topology;
  MixingSpec mixing;
  std::vector<AlgorithmSpec> algorithms;
  RunSpec run;
  std::vector<std::pair<std::string, std::string>> echo;  // every config entry, for metadata
};

/// Reads [problem], [topology], [mixing], [run] and every [algorithm.<label>].
/// Unknown keys in those sections are rejected.
ExperimentConfig parse_experiment(const Config& cfg);

struct Experiment {
  DistributedProblem prob;
  Graph graph;
  MixingMatrix W;
  ProblemConstants constants;
  Reference ref;
  Stack x0;
  Vector truth;  // generating parameter for synthetic data, empty otherwise
};

Experiment build_experiment(const ExperimentConfig& cfg);

struct TraceRow {
  int t = 0;
  long comm_rounds = 0;
  double grad_evals = 0.0;
  double rel_gap = 0.0;
  double consensus_err = 0.0;
  double tracking_err = 0.0;
  double conv_e = 0.0;
  double cons_e = 0.0;
  double grad_e = 0.0;
};

using MetaValue = std::variant<bool, long long, double, std::string>;

struct MetricsTrace {
  std::string algorithm;
  std::vector<TraceRow> rows;
  std::vector<std::pair<std::string, MetaValue>> metadata;
  std::vector<NetworkState> states;  // filled only when requested

  void set(const std::string& key, MetaValue value);
  const MetaValue* find(const std::string& key) const;
};

/// Gap of the average iterate: (F(mean x) - f*) / f*, or the absolute gap when |f*| <= 1e-14.
double optimality_gap(const Experiment& exp, const NetworkState& st);
bool gap_is_absolute(const Experiment& exp);

TraceRow measure(const Experiment& exp, const NetworkState& st);

struct RunOptions {
  bool keep_states = false;
};

/// Resolves theory parameters, runs to the budget or stopping gap, records every iteration.
MetricsTrace run_algorithm(const Experiment& exp, const ExperimentConfig& cfg,
                           const AlgorithmSpec& spec, const RunOptions& opt = {});

std::vector<MetricsTrace> run_experiment(const ExperimentConfig& cfg);

/// mu / K / delta / S after applying spec.params.
AlgorithmSpec resolve_parameters(const Experiment& exp, const ExperimentConfig& cfg,
                                 const AlgorithmSpec& spec, std::vector<std::string>* notes = nullptr);

MixingScheme scheme_for(const Experiment& exp, const ExperimentConfig& cfg, const AlgorithmSpec& spec);

// Output. CSV carries the columns only; the JSON form adds the metadata.
extern const std::vector<std::string> kTraceColumns;
void write_csv(std::ostream& out, const MetricsTrace& trace);
void write_json(std::ostream& out, const MetricsTrace& trace);
void emit(const MetricsTrace& trace, const std::filesystem::path& path, const std::string& format);
MetricsTrace read_json(const std::filesystem::path& path);
MetricsTrace parse_json(const std::string& text);

/// One CSV row per (mu, K, beta) grid point of the [rates] section.
void write_rates_table(const Config& cfg, std::ostream& out);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Suites listed in [check] suites = ... ; each one line in the report.
std::vector<CheckResult> run_checks(const Config& cfg);

/// Random quadratic ensemble used by the Lyapunov and spectral suites:
/// agent j draws m = 3d samples with decay varrho_j in [0, max_varrho].
OracleList random_quadratic_ensemble(int n, int d, std::uint64_t seed, double max_varrho = 1.0);

}  // namespace netdist
