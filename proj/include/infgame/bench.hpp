#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "infgame/asymptotics.hpp"
#include "infgame/solver.hpp"

namespace infgame {

/// RE = (1/n) sum_j |P_j - Phat_j|^2 / |P_j|^2 in L2[0, T]. With the shared
/// time profile the weight (1 - e^{-2rT}) / (2r) cancels, leaving
/// |c_j - chat_j|^2 / |c_j|^2.
inline double relative_error(std::span<const StrategyCoeffs> exact,
                             std::span<const StrategyCoeffs> approx) {
  if (exact.size() != approx.size() || exact.empty()) {
    throw DimensionError("strategy lists differ in length");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < exact.size(); ++j) {
    if (exact[j].m() != approx[j].m()) throw DimensionError("strategy dimensions differ");
    const double denom = exact[j].c.squaredNorm();
    if (!(denom > 0.0)) throw DomainError("relative error undefined for a zero strategy");
    total += (exact[j].c - approx[j].c).squaredNorm() / denom;
  }
  return total / static_cast<double>(exact.size());
}

inline double relative_error(std::span<const StrategyCoeffs> exact,
                             std::span<const StrategyCoeffs> approx, const MarketParams& market) {
  for (const auto& s : exact) detail::require_dim(s, market);
  return relative_error(exact, approx);
}

struct ThetaRange {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
};

/// Sweep description. Several theta ranges are allowed so one run covers
/// every table row.
struct BenchSpec {
  std::vector<Index> n_values{10, 50, 100};
  std::vector<ThetaRange> theta_ranges{{"1e-10..2e-10", 1e-10, 2e-10},
                                       {"1e-8..2e-8", 1e-8, 2e-8},
                                       {"1e-5..1e-4", 1e-5, 1e-4}};
  double alpha_lo = 0.1, alpha_hi = 0.5;
  double x_lo = 1.0, x_hi = 5.0;
  std::vector<double> delta_u_values{1e-3, 1e-1};
  std::uint64_t seed = 0;
  int repeats = 5;
  /// Subset of variant labels to run; empty runs all.
  std::vector<std::string> variants;

  void validate() const {
    if (n_values.empty() || theta_ranges.empty()) throw ConfigError("empty benchmark sweep");
    for (Index n : n_values) {
      if (n < 1) throw ConfigError("agent counts must be positive");
    }
    for (const auto& t : theta_ranges) {
      if (!(t.lo >= 0.0) || !(t.hi >= t.lo)) throw ConfigError("bad theta range " + t.label);
    }
    if (!(alpha_lo > 0.0) || !(alpha_hi >= alpha_lo)) throw ConfigError("bad alpha range");
    if (!(x_hi >= x_lo)) throw ConfigError("bad initial wealth range");
    for (double du : delta_u_values) {
      if (!(du > 0.0)) throw ConfigError("delta_u values must be positive");
    }
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
  }
};

struct BenchRow {
  Index n = 0;
  std::string variant;
  std::string theta_range;
  double delta_u = std::numeric_limits<double>::quiet_NaN();  ///< NaN when unused
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  double time_s = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  std::string error;  ///< non-empty when the cell failed
};

/// Seeded random instance: W uniform-normalized, alpha, x0 and theta uniform.
struct BenchInstance {
  std::vector<AgentParams> agents;
  InfluenceNetwork network;
};

inline BenchInstance make_bench_instance(Index n, const ThetaRange& theta, const BenchSpec& spec,
                                         std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<AgentParams> agents(static_cast<std::size_t>(n));
  for (auto& a : agents) {
    a.alpha = spec.alpha_lo + (spec.alpha_hi - spec.alpha_lo) * unit(gen);
    a.x0 = spec.x_lo + (spec.x_hi - spec.x_lo) * unit(gen);
    a.theta = theta.lo + (theta.hi - theta.lo) * unit(gen);
  }
  return {std::move(agents), InfluenceNetwork::random(n, gen())};
}

struct BenchVariant {
  std::string label;
  SolverConfig config;
  bool uses_delta_u = false;
};

/// Base: exact U, adaptive quadrature eta. Base+Uhat: Taylor U.
/// Base+etahat: sampled eta. Fast-conf: Taylor U and sampled eta.
/// Fast: block-iterative equilibrium map and right-rectangle eta.
inline std::vector<BenchVariant> bench_variants() {
  std::vector<BenchVariant> v;
  SolverConfig base = SolverConfig::base();
  base.keep_U = false;
  v.push_back({"Base", base, false});
  SolverConfig uhat = base;
  uhat.u_mode = UMode::taylor;
  uhat.taylor_warn_threshold = std::numeric_limits<double>::infinity();
  v.push_back({"Base+Uhat", uhat, false});
  SolverConfig etahat = base;
  etahat.eta_mode = EtaMode::sampled;
  v.push_back({"Base+etahat", etahat, true});
  SolverConfig conf = uhat;
  conf.eta_mode = EtaMode::sampled;
  v.push_back({"Fast-conf", conf, true});
  v.push_back({"Fast", SolverConfig::fast(), false});
  return v;
}

namespace detail {

template <class F>
double median_seconds(int repeats, F&& run) {
  std::vector<double> times;
  for (int k = 0; k < repeats; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

}  // namespace detail

/// One row per (n, theta range, variant, delta_u). RE is measured against the
/// Base solution of the same instance; errors are recorded in the row.
inline std::vector<BenchRow> run_benchmark(const BenchSpec& spec, const MarketParams& market) {
  spec.validate();
  auto variants = bench_variants();
  if (!spec.variants.empty()) {
    std::vector<BenchVariant> kept;
    for (const auto& v : variants) {
      if (std::find(spec.variants.begin(), spec.variants.end(), v.label) != spec.variants.end()) {
        kept.push_back(v);
      }
    }
    for (const auto& want : spec.variants) {
      if (std::none_of(variants.begin(), variants.end(),
                       [&](const BenchVariant& v) { return v.label == want; })) {
        throw ConfigError("unknown benchmark variant '" + want + "'");
      }
    }
    variants = std::move(kept);
  }

  std::vector<BenchRow> rows;
  std::uint64_t cell = 0;
  for (Index n : spec.n_values) {
    for (const auto& theta : spec.theta_ranges) {
      const auto inst = make_bench_instance(n, theta, spec, spec.seed + 7919 * (++cell));
      std::vector<StrategyCoeffs> reference;
      std::string reference_error;
      try {
        reference = solve(market, inst.agents, inst.network, bench_variants().front().config).coeffs;
      } catch (const Error& e) {
        reference_error = e.what();
      }

      for (const auto& v : variants) {
        std::vector<double> dus{std::numeric_limits<double>::quiet_NaN()};
        if (v.uses_delta_u) dus = spec.delta_u_values;
        for (double du : dus) {
          BenchRow row;
          row.n = n;
          row.variant = v.label;
          row.theta_range = theta.label;
          row.delta_u = du;
          SolverConfig cfg = v.config;
          if (v.uses_delta_u) cfg.delta_u = du;
          try {
            GameSolution sol;
            row.time_s = detail::median_seconds(spec.repeats, [&] {
              sol = solve(market, inst.agents, inst.network, cfg);
            });
            row.iters = sol.iters;
            if (!reference_error.empty()) {
              row.error = "reference failed: " + reference_error;
            } else {
              row.relative_error = relative_error(reference, sol.coeffs);
            }
          } catch (const Error& e) {
            row.error = e.what();
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

inline std::string bench_csv(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out << "n,variant,theta_range,delta_u,re,time_s\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.variant << ',' << r.theta_range << ',' << format_number(r.delta_u)
        << ',';
    if (r.error.empty()) {
      out << format_number(r.relative_error) << ',' << format_number(r.time_s);
    } else {
      out << "error,";
    }
    out << '\n';
  }
  return out.str();
}

inline std::string bench_markdown(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out << "| n | variant | theta | delta u | RE | time (s) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.n << " | " << r.variant << " | " << r.theta_range << " | "
        << (std::isnan(r.delta_u) ? "-" : format_number(r.delta_u)) << " | ";
    if (r.error.empty()) {
      out << format_number(r.relative_error) << " | " << format_number(r.time_s) << " |\n";
    } else {
      out << "error: " << r.error << " | |\n";
    }
  }
  return out.str();
}

/// Solutions at each theta (applied to every agent) plus the infinite-influence limit.
struct SweepResult {
  std::vector<double> thetas;
  std::vector<GameSolution> solutions;
  AsymptoticResult limit;
};

inline SweepResult scenario_sweep(std::span<const double> thetas, const MarketParams& market,
                                  std::span<const AgentParams> agents,
                                  const InfluenceNetwork& network,
                                  const SolverConfig& config = {}) {
  SweepResult out;
  out.limit = asymptotic_limit(market, agents, network);
  std::vector<AgentParams> local(agents.begin(), agents.end());
  for (double theta : thetas) {
    for (auto& a : local) a.theta = theta;
    out.thetas.push_back(theta);
    out.solutions.push_back(solve(market, local, network, config));
  }
  return out;
}

}  // namespace infgame
