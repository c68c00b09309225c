#include "netdist/harness.hpp"

#include <doctest.h>

#include <sstream>

using namespace netdist;

namespace {

const char* kSmall = R"(
[problem]
m = 40
d = 5
n = 6
kappa = 10
seed = 2
[topology]
kind = ring
[run]
iterations = 20
seed = 4
[algorithm.network_dane]
mu = 0.5
[algorithm.network_sarah]
[algorithm.dgd_gt]
eta = 0.02
)";

ExperimentConfig small_config(const std::string& extra = "") {
  return parse_experiment(Config::parse(std::string(kSmall) + extra));
}

std::string csv_of(const MetricsTrace& t) {
  std::ostringstream out;
  write_csv(out, t);
  return out.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing") {
  const auto cfg = small_config();
  CHECK(cfg.problem.synthetic.m == 40);
  CHECK(cfg.problem.kappa.value() == 10.0);
  CHECK(cfg.topology.kind == GraphKind::ring);
  REQUIRE(cfg.algorithms.size() == 3);
  CHECK(cfg.algorithms[0].label == "network_dane");
  CHECK(cfg.algorithms[0].cfg.mu == 0.5);
  CHECK(cfg.algorithms[2].cfg.kind == AlgorithmKind::dgd_gt);

  const auto c = Config::parse("a = 1\n[s]\nlist = [1, 2.5, 3]\nflag = true\n");
  CHECK(c.get_int("", "a", 0) == 1);
  CHECK(c.get_doubles("s", "list", {}) == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(c.get_bool("s", "flag", false));
  CHECK(c.get_string("s", "missing", "x") == "x");

  CHECK_THROWS_AS(small_config("[algorithm.extra]\ntypo = 1\n"), ConfigError);
  CHECK_THROWS_AS(small_config("[algorithm.mine]\nmu = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment(Config::parse("[problem]\nkappa = 10\nvarrho = 1\n[algorithm.extra]\n")),
                  ConfigError);
  CHECK_THROWS_AS(Config::parse("[broken\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("[s]\nnot a pair\n"), ParseError);
  try {
    Config::parse("[s]\nx = 1\n\ngarbage\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  const auto bad = Config::parse("[run]\niterations = ten\n");
  CHECK_THROWS_AS(bad.get_int("run", "iterations", 1), ConfigError);
}

TEST_CASE("trace output") {
  MetricsTrace empty;
  empty.algorithm = "none";
  CHECK(csv_of(empty) == "t,comm_rounds,grad_evals,rel_gap,consensus_err,tracking_err,conv_e,cons_e,grad_e\n");

  auto cfg = small_config();
  const auto exp = build_experiment(cfg);
  auto tr = run_algorithm(exp, cfg, cfg.algorithms[0]);
  CHECK(tr.rows.size() == 21);
  CHECK(tr.rows.front().t == 0);
  CHECK(tr.rows.back().t == 20);
  CHECK(tr.rows.back().comm_rounds == 20);
  tr.rows[3].tracking_err = std::nan("");
  tr.rows[4].tracking_err = HUGE_VAL;
  std::ostringstream js;
  write_json(js, tr);
  const auto back = parse_json(js.str());
  CHECK(back.algorithm == tr.algorithm);
  REQUIRE(back.rows.size() == tr.rows.size());
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    CHECK(back.rows[i].t == tr.rows[i].t);
    CHECK(back.rows[i].rel_gap == tr.rows[i].rel_gap);
    CHECK(back.rows[i].grad_evals == tr.rows[i].grad_evals);
    CHECK(back.rows[i].conv_e == tr.rows[i].conv_e);
  }
  CHECK(std::isnan(back.rows[3].tracking_err));
  CHECK(std::isinf(back.rows[4].tracking_err));
  CHECK(back.metadata.size() == tr.metadata.size());
  REQUIRE(back.find("mu"));
  CHECK(std::get<double>(*back.find("mu")) == 0.5);
  CHECK(std::get<std::string>(*back.find("config.problem.kappa")) == "10");

  const auto dir = std::filesystem::temp_directory_path() / "netdist_harness" / "nested";
  std::filesystem::remove_all(dir);
  emit(tr, dir / "t.json", "json");
  CHECK(read_json(dir / "t.json").rows.size() == 21);
  CHECK_THROWS_AS(emit(tr, dir / "t.xml", "xml"), ConfigError);
  CHECK_THROWS_AS(parse_json("{not json"), ParseError);
}

TEST_CASE("determinism") {
  const auto cfg = small_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(csv_of(a[i]) == csv_of(b[i]));

  auto other = small_config("");
  other.run.seed = 5;
  const auto c = run_experiment(other);
  CHECK(csv_of(c[1]) != csv_of(a[1]));
}

TEST_CASE("start at the optimum") {
  auto cfg = small_config();
  cfg.run.stop_gap = 1e-12;
  auto exp = build_experiment(cfg);
  exp.x0 = exp.ref.y.transpose().replicate(exp.prob.agents(), 1);
  const auto tr = run_algorithm(exp, cfg, cfg.algorithms[0]);
  CHECK(tr.rows.size() == 1);
  CHECK(tr.rows[0].rel_gap <= 1e-12);
  CHECK(optimality_gap(exp, init_state(exp.x0, exp.prob)) <= 1e-12);
}

TEST_CASE("stop gap and trials") {
  auto cfg = small_config();
  cfg.run.iterations = 500;
  cfg.run.stop_gap = 1e-6;
  const auto exp = build_experiment(cfg);
  const auto tr = run_algorithm(exp, cfg, cfg.algorithms[0]);
  CHECK(tr.rows.back().rel_gap <= 1e-6);
  CHECK(tr.rows[tr.rows.size() - 2].rel_gap > 1e-6);

  cfg.run.stop_gap = 0;
  cfg.run.iterations = 5;
  cfg.run.trials = 3;
  const auto med = run_algorithm(exp, cfg, cfg.algorithms[1]);
  CHECK(med.rows.size() == 6);
  CHECK(std::get<long long>(*med.find("trials")) == 3);
  // deterministic methods ignore the trial count
  CHECK(std::get<long long>(*run_algorithm(exp, cfg, cfg.algorithms[0]).find("trials")) == 1);
}

TEST_CASE("experiment constants") {
  const auto cfg = small_config();
  const auto exp = build_experiment(cfg);
  CHECK(exp.prob.agents() == 6);
  CHECK(exp.graph.connected());
  CHECK(exp.constants.sigma > 0);
  CHECK(exp.constants.L >= exp.constants.sigma);
  CHECK_FALSE(exp.constants.beta_estimated);
  CHECK(exp.prob.global->gradient(exp.ref.y).norm() <= 1e-10);
  CHECK(exp.x0.rows() == 6);
  CHECK(exp.x0.cols() == 5);
}

TEST_CASE("dane beats dgd-gt early on the kappa 10 instance") {
  const auto cfg = parse_experiment(Config::parse(R"(
[problem]
m = 200
d = 40
n = 20
kappa = 10
[topology]
kind = erdos_renyi
p = 0.3
[run]
iterations = 20
[algorithm.network_dane]
mu = 1e-6
[algorithm.dgd_gt]
eta = 0.1
)"));
  const auto traces = run_experiment(cfg);
  CHECK(traces[0].rows[20].rel_gap < traces[1].rows[20].rel_gap);
}

TEST_CASE("rates table") {
  const auto cfg = Config::parse(R"(
[rates]
sigma = 1
L = 10
alpha0 = 0.8
beta = [0, 0.5]
K = [1, 5, 20]
mu = [100, 1e4]
)");
  std::ostringstream out;
  write_rates_table(cfg, out);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("mu,K,beta,alpha", 0) == 0);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 12);
}

TEST_CASE("check suites") {
  const auto cfg = Config::parse(R"(
[check]
suites = mixing, tracking
seed = 2
[check.mixing]
graphs = 2
stacks = 5
)");
  const auto res = run_checks(cfg);
  REQUIRE(res.size() == 2);
  for (const auto& r : res) CHECK_MESSAGE(r.pass, r.name << ": " << r.detail);
  CHECK_THROWS_AS(run_checks(Config::parse("[check]\nsuites = nope\n")), ConfigError);
  CHECK_THROWS_AS(run_checks(Config::parse("[check]\nsuites = mixing\nstray = 1\n")), ConfigError);
}

}  // TEST_SUITE
