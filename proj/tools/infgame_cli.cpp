// infgame: command-line front end for the influence investment game solver.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "infgame/infgame.hpp"
#include "infgame/io.hpp"

namespace fs = std::filesystem;
using namespace infgame;
using io::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;
constexpr int kExitInternal = 10;

struct SolverFlags {
  std::string solver_config;
  std::optional<double> eps;
  std::optional<int> max_iters;
  std::optional<std::string> eta_mode;
  std::optional<std::string> u_mode;
  std::optional<double> delta_u;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--solver-config", solver_config, "Solver config JSON (SolverConfig fields)");
    cmd->add_option("--eps", eps, "Fixed-point tolerance on eta");
    cmd->add_option("--max-iters", max_iters, "Iteration cap");
    cmd->add_option("--eta-mode", eta_mode,
                    "closed_form | quadrature | sampled | right_rectangle");
    cmd->add_option("--u-mode", u_mode, "exact_inverse | taylor | block_iterative");
    cmd->add_option("--delta-u", delta_u, "Sampling interval for --eta-mode sampled");
  }

  SolverConfig build(unsigned threads) const {
    SolverConfig cfg;
    if (!solver_config.empty()) cfg = io::solver_config_from_json(io::read_json(solver_config));
    if (eps) cfg.eps = *eps;
    if (max_iters) cfg.max_iters = *max_iters;
    if (eta_mode) cfg.eta_mode = parse_eta_mode(*eta_mode);
    if (u_mode) cfg.u_mode = parse_u_mode(*u_mode);
    if (delta_u) cfg.delta_u = *delta_u;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

struct GameFiles {
  std::string market;
  std::string agents;
  std::string network;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--market", market, "Market JSON")->required();
    cmd->add_option("--agents", agents, "Agents JSON")->required();
    cmd->add_option("--network", network, "Network JSON or CSV")->required();
  }
};

struct Game {
  MarketParams market;
  std::vector<AgentParams> agents;
  InfluenceNetwork network;
};

Game load_game(const GameFiles& f) {
  return {io::market_from_json(io::read_json(f.market)), io::agents_from_json(io::read_json(f.agents)),
          io::load_network(f.network)};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_strategies(const std::string& dir, const std::string& prefix,
                      const std::vector<StrategyCoeffs>& coeffs, const MarketParams& market,
                      Index points) {
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    io::write_text(join(dir, prefix + "_agent" + std::to_string(j + 1) + ".csv"),
                   io::strategy_csv(coeffs[j], market, points));
  }
}

/// Expands keys of a run-config JSON object into command-line tokens for
/// options the user did not pass explicitly. Keys must name options of the
/// chosen subcommand.
std::vector<std::string> config_tokens(const json& cfg, CLI::App* cmd,
                                       const std::vector<std::string>& user_args) {
  if (!cfg.is_object()) throw ConfigError("run config must be a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    for (auto& ch : name) {
      if (ch == '_') ch = '-';
    }
    const std::string flag = "--" + name;
    if (name == "config" || cmd->get_option_no_throw(flag) == nullptr) {
      throw ConfigError("unknown key '" + key + "' in run config for '" + cmd->get_name() + "'");
    }
    bool given = false;
    for (const auto& a : user_args) given = given || a == flag || a.rfind(flag + "=", 0) == 0;
    if (given) continue;
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number()) return io::fmt(v.get<double>());
      throw ConfigError("run config key '" + key + "' has an unsupported value");
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        out.push_back(flag);
        out.push_back(scalar(v));
      }
    } else {
      out.push_back(flag);
      out.push_back(scalar(value));
    }
  }
  return out;
}

ThetaRange parse_theta_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("theta range must be lo:hi, got '" + s + "'");
  try {
    ThetaRange t{s, std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    t.label = s.substr(0, colon) + ".." + s.substr(colon + 1);
    return t;
  } catch (const std::exception&) {
    throw ConfigError("bad theta range '" + s + "'");
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Nash strategies for investment games with mutual influence", "infgame"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "infgame 1.0.0");
  app.option_defaults()->always_capture_default();

  std::string run_config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", run_config, "Run config JSON; keys are option names");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  };

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate GBM market parameters from prices");
  std::string prices, estimate_out;
  double rate = sample_markets::kDepositRate, horizon = 5.0, dt_obs = 1.0 / 252.0;
  estimate->add_option("--prices", prices, "Price CSV: date,asset1,...")->required();
  estimate->add_option("--rate", rate, "Riskless rate r");
  estimate->add_option("--horizon", horizon, "Investment horizon T in years");
  estimate->add_option("--dt-obs", dt_obs, "Observation interval in years");
  estimate->add_option("--out", estimate_out, "Market JSON output (default stdout)");
  add_common(estimate);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve for the Nash equilibrium strategies");
  GameFiles solve_files;
  SolverFlags solve_flags;
  std::string solve_dir = ".";
  Index points = 101;
  bool dump_on_fail = false;
  solve_files.add_to(solve_cmd);
  solve_flags.add_to(solve_cmd);
  solve_cmd->add_option("--out-dir", solve_dir, "Output directory");
  solve_cmd->add_option("--points", points, "Time points in strategy CSVs");
  solve_cmd->add_flag("--dump-on-fail", dump_on_fail, "Write the last iterate if not converged");
  add_common(solve_cmd);

  // asymptotic
  auto* asym = app.add_subcommand("asymptotic", "Infinite-influence limit and wealth comparison");
  GameFiles asym_files;
  SolverFlags asym_flags;
  std::string asym_out;
  asym_files.add_to(asym);
  asym_flags.add_to(asym);
  asym->add_option("--out", asym_out, "Report JSON output (default stdout)");
  add_common(asym);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo terminal wealth under a strategy set");
  GameFiles sim_files;
  SolverFlags sim_flags;
  std::string which = "equilibrium", sim_out, samples_out;
  std::int64_t paths = 100000;
  double dt = 0.0;
  sim_files.add_to(sim);
  sim_flags.add_to(sim);
  sim->add_option("--strategy", which, "equilibrium | rational | asymptotic")
      ->check(CLI::IsMember({"equilibrium", "rational", "asymptotic"}));
  sim->add_option("--paths", paths, "Sample paths");
  sim->add_option("--dt", dt, "Time step (default 1e-3 T)");
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--out", sim_out, "Moments CSV output (default stdout)");
  sim->add_option("--samples", samples_out, "Also write raw terminal wealth samples");
  add_common(sim);

  // bench
  auto* bench = app.add_subcommand("bench", "Accuracy and timing of the solver variants");
  std::string bench_market, bench_out, bench_md;
  std::vector<Index> n_values;
  std::vector<std::string> theta_ranges, variants;
  std::vector<double> delta_us;
  int repeats = 5;
  bool quick = false, large = false;
  bench->add_option("--market", bench_market, "Market JSON (default: built-in 5-asset market)");
  bench->add_option("--n", n_values, "Agent counts (default 10 50 100)");
  bench->add_option("--theta-range", theta_ranges, "theta interval lo:hi, repeatable");
  bench->add_option("--delta-u", delta_us, "Sampling intervals for sampled eta");
  bench->add_option("--variant", variants, "Base | Base+Uhat | Base+etahat | Fast-conf | Fast");
  bench->add_option("--repeats", repeats, "Timed runs per cell (median reported)");
  bench->add_option("--seed", seed, "Random seed");
  bench->add_flag("--quick", quick, "n in {10, 50}, one repeat");
  bench->add_flag("--large", large, "Add the n = 500 cell");
  bench->add_option("--out", bench_out, "CSV output (default stdout)");
  bench->add_option("--markdown", bench_md, "Also write a Markdown table");
  add_common(bench);

  // report
  auto* report = app.add_subcommand("report", "Three-agent scenario: strategies and wealth data");
  std::string report_dir = "report";
  std::int64_t report_paths = 20000;
  report->add_option("--out-dir", report_dir, "Output directory");
  report->add_option("--paths", report_paths, "Monte Carlo paths for the wealth check (0 = skip)");
  report->add_option("--seed", seed, "Random seed");
  add_common(report);

  // A run config supplies values for options not given on the command line.
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path.empty() && !args.empty()) {
    if (CLI::App* sub = app.get_subcommand_no_throw(args[0])) {
      auto extra = config_tokens(io::read_json(config_path), sub, args);
      args.insert(args.end(), extra.begin(), extra.end());
    }
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  CLI::App* cmd = app.get_subcommands().front();

  if (cmd == estimate) {
    auto panel = io::parse_price_csv(io::read_text(prices), dt_obs);
    const auto est = estimate_gbm(panel);
    const auto market =
        MarketParams::from_covariance(rate, excess_returns(est.mu, rate), est.Sigma, horizon);
    const auto text = io::market_to_json(market, &est.mu).dump(2) + "\n";
    if (estimate_out.empty()) {
      std::cout << text;
    } else {
      io::write_text(estimate_out, text);
      std::cout << "estimated " << market.m() << " assets from " << panel.prices.rows()
                << " observations, kappa = " << market.kappa() << '\n';
    }
    return 0;
  }

  if (cmd == solve_cmd) {
    const Game g = load_game(solve_files);
    const SolverConfig cfg = solve_flags.build(threads);
    ensure_dir(solve_dir);
    GameSolution sol;
    try {
      sol = solve(g.market, g.agents, g.network, cfg);
    } catch (const ConvergenceError& e) {
      print_warnings(e.last_iterate().warnings);
      if (dump_on_fail) {
        io::write_text(join(solve_dir, "solution.partial.json"),
                       io::solution_to_json(e.last_iterate()).dump(2) + "\n");
      }
      throw;
    }
    print_warnings(sol.warnings);
    io::write_text(join(solve_dir, "solution.json"), io::solution_to_json(sol).dump(2) + "\n");
    write_strategies(solve_dir, "strategy", sol.coeffs, g.market, points);
    std::cout << "converged in " << sol.iters << " iterations (delta eta " << sol.residual
              << ")\n";
    for (std::size_t j = 0; j < sol.coeffs.size(); ++j) {
      std::cout << "agent " << (j + 1) << ": c = [" << sol.coeffs[j].c.transpose() << "]\n";
    }
    return 0;
  }

  if (cmd == asym) {
    const Game g = load_game(asym_files);
    SolverConfig cfg = asym_flags.build(threads);
    cfg.keep_U = true;
    if (cfg.u_mode == UMode::block_iterative) cfg.u_mode = UMode::exact_inverse;
    const auto limit = asymptotic_limit(g.market, g.agents, g.network);
    print_warnings(limit.warnings);
    const GameSolution sol = solve(g.market, g.agents, g.network, cfg);
    print_warnings(sol.warnings);
    const auto text = io::asymptotic_report(limit, g.agents, g.market, &sol).dump(2) + "\n";
    if (asym_out.empty()) {
      std::cout << text;
    } else {
      io::write_text(asym_out, text);
    }
    std::cerr << "alpha_tilde = " << limit.alpha_tilde << '\n';
    return 0;
  }

  if (cmd == sim) {
    const Game g = load_game(sim_files);
    std::vector<StrategyCoeffs> strategies;
    if (which == "rational") {
      for (const auto& a : g.agents) strategies.push_back(rational_strategy(a.alpha, g.market));
    } else if (which == "asymptotic") {
      const auto limit = asymptotic_limit(g.market, g.agents, g.network);
      strategies.assign(g.agents.size(), limit.coeffs);
    } else {
      const auto sol = solve(g.market, g.agents, g.network, sim_flags.build(threads));
      print_warnings(sol.warnings);
      strategies = sol.coeffs;
    }
    SimConfig sc;
    sc.paths = paths;
    sc.dt = dt;
    sc.seed = seed;
    sc.threads = threads;
    sc.keep_samples = !samples_out.empty();
    const auto res = simulate(strategies, g.agents, g.market, sc);
    const auto text = io::moments_csv(res);
    if (sim_out.empty()) {
      std::cout << text;
    } else {
      io::write_text(sim_out, text);
    }
    if (!samples_out.empty()) io::write_text(samples_out, io::samples_csv(res));
    return 0;
  }

  if (cmd == bench) {
    const MarketParams market = bench_market.empty()
                                    ? sample_markets::five_asset()
                                    : io::market_from_json(io::read_json(bench_market));
    BenchSpec spec;
    spec.seed = seed;
    spec.repeats = repeats;
    if (quick) {
      spec.n_values = {10, 50};
      spec.repeats = 1;
    }
    if (!n_values.empty()) spec.n_values = n_values;
    if (large) spec.n_values.push_back(500);
    if (!theta_ranges.empty()) {
      spec.theta_ranges.clear();
      for (const auto& t : theta_ranges) spec.theta_ranges.push_back(parse_theta_range(t));
    }
    if (!delta_us.empty()) spec.delta_u_values = delta_us;
    spec.variants = variants;
    const auto rows = run_benchmark(spec, market);
    const auto csv = bench_csv(rows);
    if (bench_out.empty()) {
      std::cout << csv;
    } else {
      io::write_text(bench_out, csv);
    }
    if (!bench_md.empty()) io::write_text(bench_md, bench_markdown(rows));
    for (const auto& r : rows) {
      if (!r.error.empty()) std::cerr << "cell n=" << r.n << ' ' << r.variant << ": " << r.error << '\n';
    }
    return 0;
  }

  if (cmd == report) {
    ensure_dir(report_dir);
    const auto market = sample_markets::two_asset();
    const auto agents = scenarios::three_agents();
    const auto network = scenarios::ring_of_three();
    const std::vector<double> thetas{0.0, 1e-5, 1e-4};
    SolverConfig cfg;
    cfg.threads = threads;
    const auto sweep = scenario_sweep(thetas, market, agents, network, cfg);
    print_warnings(sweep.limit.warnings);

    std::vector<StrategyCoeffs> rational;
    for (const auto& a : agents) rational.push_back(rational_strategy(a.alpha, market));
    write_strategies(report_dir, "rational", rational, market, 101);
    write_strategies(report_dir, "asymptotic",
                     std::vector<StrategyCoeffs>(agents.size(), sweep.limit.coeffs), market, 101);
    const char* tags[] = {"theta0", "theta1e-5", "theta1e-4"};
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      write_strategies(report_dir, std::string("equilibrium_") + tags[k],
                       sweep.solutions[k].coeffs, market, 101);
    }

    std::ostringstream wealth;
    wealth << "agent,strategy,mean,var\n";
    for (std::size_t j = 0; j < agents.size(); ++j) {
      const auto cmp = compare_terminal_wealth(agents[j], sweep.limit.alpha_tilde, market);
      wealth << (j + 1) << ",rational," << io::fmt(cmp.rational.mean) << ','
             << io::fmt(cmp.rational.variance) << '\n';
      wealth << (j + 1) << ",asymptotic," << io::fmt(cmp.asymptotic.mean) << ','
             << io::fmt(cmp.asymptotic.variance) << '\n';
      for (std::size_t k = 0; k < thetas.size(); ++k) {
        const auto d = terminal_wealth_dist(sweep.solutions[k].coeffs[j], agents[j].x0, market);
        wealth << (j + 1) << ",equilibrium_" << tags[k] << ',' << io::fmt(d.mean) << ','
               << io::fmt(d.variance) << '\n';
      }
    }
    io::write_text(join(report_dir, "wealth.csv"), wealth.str());

    SolverConfig exact = cfg;
    exact.eta_mode = EtaMode::closed_form;
    auto with_theta = agents;
    for (auto& a : with_theta) a.theta = 1e-4;
    const auto sol = solve(market, with_theta, network, exact);
    io::write_text(join(report_dir, "asymptotic.json"),
                   io::asymptotic_report(sweep.limit, with_theta, market, &sol).dump(2) + "\n");

    if (report_paths > 0) {
      std::vector<StrategyCoeffs> both = rational;
      std::vector<AgentParams> twice = agents;
      for (const auto& a : agents) {
        both.push_back(sweep.limit.coeffs);
        twice.push_back(a);
      }
      SimConfig sc;
      sc.paths = report_paths;
      sc.seed = seed;
      sc.threads = threads;
      io::write_text(join(report_dir, "wealth_mc.csv"),
                     io::moments_csv(simulate(both, twice, market, sc)));
    }

    std::cout << "alpha_tilde = " << sweep.limit.alpha_tilde << '\n';
    for (std::size_t j = 0; j < agents.size(); ++j) {
      std::cout << "agent " << (j + 1) << " (alpha " << agents[j].alpha << "): rational ["
                << rational[j].c.transpose() << "]";
      for (std::size_t k = 0; k < thetas.size(); ++k) {
        std::cout << ", " << tags[k] << " [" << sweep.solutions[k].coeffs[j].c.transpose() << "]";
      }
      std::cout << '\n';
    }
    std::cout << "asymptotic [" << sweep.limit.coeffs.c.transpose() << "]\n";
    std::cout << "wrote " << report_dir << '\n';
    return 0;
  }
  return kExitInternal;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const OracleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
