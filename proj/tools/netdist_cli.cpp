// netdist run|rates|check <config> [--seed N] [--out PATH] [--format csv|json]
//
// Exit codes: 0 ok, 1 config or usage error, 2 runtime error, 3 failed check.

#include "netdist/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace netdist;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<int> trials;
};

Config load_with(const std::string& path, const Overrides& o, const std::string& seed_section) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path + "' not found");
  Config cfg = Config::load(path);
  if (o.seed) cfg.set(seed_section, "seed", std::to_string(*o.seed));
  if (!o.out.empty()) cfg.set("run", "out", o.out);
  if (!o.format.empty()) cfg.set("run", "format", o.format);
  if (o.trials) cfg.set("run", "trials", std::to_string(*o.trials));
  return cfg;
}

int do_run(const std::string& path, const Overrides& o) {
  const Config cfg = load_with(path, o, "run");
  const ExperimentConfig ec = parse_experiment(cfg);
  const Experiment exp = build_experiment(ec);
  for (const auto& spec : ec.algorithms) {
    const MetricsTrace trace = run_algorithm(exp, ec, spec);
    for (const auto& [k, v] : trace.metadata)
      if (k.rfind("warning.", 0) == 0) std::cerr << "warning: " << std::get<std::string>(v) << '\n';
    if (ec.run.out.empty()) {
      std::cout << "# " << spec.label << '\n';
      if (ec.run.format == "json") write_json(std::cout, trace);
      else write_csv(std::cout, trace);
      continue;
    }
    const auto base = ec.run.out / spec.label;
    emit(trace, base.string() + "." + ec.run.format, ec.run.format);
    if (ec.run.format == "csv") emit(trace, base.string() + ".meta.json", "json");
    const auto& last = trace.rows.back();
    std::cerr << spec.label << ": " << trace.rows.size() << " rows, final gap " << last.rel_gap
              << " -> " << base.string() << '.' << ec.run.format << '\n';
  }
  return 0;
}

int do_rates(const std::string& path, const Overrides& o) {
  const Config cfg = load_with(path, Overrides{}, "rates");
  if (o.out.empty()) {
    write_rates_table(cfg, std::cout);
    return 0;
  }
  std::ofstream out(o.out);
  if (!out) throw Error("cannot write '" + o.out + "'");
  write_rates_table(cfg, out);
  return 0;
}

int do_check(const std::string& path, const Overrides& o) {
  Config cfg = load_with(path, Overrides{}, "check");
  if (o.seed) cfg.set("check", "seed", std::to_string(*o.seed));
  const auto results = run_checks(cfg);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.pass;
  }
  std::cout << (ok ? "all checks passed" : "some checks failed") << '\n';
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-DANE experiments, rate tables and invariant checks"};
  app.require_subcommand(1);
  Overrides o;
  std::string config;
  std::uint64_t seed = 0;
  int trials = 0;

  auto* run = app.add_subcommand("run", "run the experiments of a config file");
  auto* rates = app.add_subcommand("rates", "print theoretical rates for a parameter grid (CSV)");
  auto* check = app.add_subcommand("check", "run invariant and Lyapunov check suites");
  for (auto* sub : {run, rates, check}) sub->add_option("config", config, "config file")->required();
  for (auto* sub : {run, check}) sub->add_option("--seed", seed, "override the seed");
  run->add_option("--out", o.out, "output directory (stdout when empty)");
  rates->add_option("--out", o.out, "output file (stdout when empty)");
  run->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--trials", trials, "trials for the stochastic methods")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (run->count("--seed") || check->count("--seed")) o.seed = seed;
  if (run->count("--trials")) o.trials = trials;

  try {
    if (*run) return do_run(config, o);
    if (*rates) return do_rates(config, o);
    return do_check(config, o);
  } catch (const netdist::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const netdist::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
