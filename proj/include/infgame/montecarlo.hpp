#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "infgame/market.hpp"
#include "infgame/parallel.hpp"
#include "infgame/strategy.hpp"

namespace infgame {

struct MomentEstimate {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double stderr_mean = 0.0;
  double stderr_var = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double stderr_skewness = 0.0;
  double stderr_kurtosis = 0.0;
};

/// Sample moments, accumulated in index order. The variance standard error
/// uses the fourth central moment: Var(s^2) ~ (m4 - s^4 (N - 3) / (N - 1)) / N.
inline MomentEstimate estimate_moments(std::span<const double> x) {
  const std::size_t N = x.size();
  if (N < 2) throw DataError("need at least 2 samples to estimate moments");
  const double dn = static_cast<double>(N);
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;

  MomentEstimate e;
  e.mean = mean;
  e.variance = m2 * dn / (dn - 1.0);
  e.stderr_mean = std::sqrt(e.variance / dn);
  const double s4 = e.variance * e.variance;
  e.stderr_var = std::sqrt(std::max(0.0, (m4 - s4 * (dn - 3.0) / (dn - 1.0)) / dn));
  if (m2 > 0.0) {
    e.skewness = m3 / std::pow(m2, 1.5);
    e.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  e.stderr_skewness = std::sqrt(6.0 / dn);
  e.stderr_kurtosis = std::sqrt(24.0 / dn);
  return e;
}

struct SimConfig {
  std::int64_t paths = 100000;
  double dt = 0.0;  ///< step in years; 0 means 1e-3 * T
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool keep_samples = false;

  /// Steps per path for horizon T; throws ConfigError on an invalid setup.
  std::int64_t steps(double T) const {
    if (paths < 1) throw ConfigError("paths must be >= 1");
    const double h = dt > 0.0 ? dt : 1e-3 * T;
    if (dt < 0.0 || !(h <= T + 1e-12)) throw ConfigError("dt must lie in (0, T]");
    const double count = std::round(T / h);
    if (count < 1.0 || std::abs(count * h - T) > 1e-9) {
      throw ConfigError("dt does not divide the horizon T");
    }
    return static_cast<std::int64_t>(count);
  }
};

struct SimResult {
  std::vector<MomentEstimate> moments;  ///< per agent
  Matrix samples;                       ///< paths x agents, only with keep_samples
  std::int64_t paths = 0;
  std::int64_t steps = 0;
  double dt = 0.0;
};

/// Independent generator for one path. The stream depends only on
/// (seed, path), never on which worker runs it.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

/// Euler-Maruyama for dX_j = r X_j dt + P_j(t)'(nu dt + sigma dB) with one
/// Brownian motion B shared by all agents.
inline SimResult simulate(std::span<const StrategyCoeffs> strategies,
                          std::span<const AgentParams> agents, const MarketParams& market,
                          const SimConfig& config) {
  if (strategies.size() != agents.size() || strategies.empty()) {
    throw DimensionError("need one strategy per agent");
  }
  const Index n = static_cast<Index>(agents.size());
  const Index m = market.m();
  for (const auto& s : strategies) detail::require_dim(s, market);
  for (const auto& a : agents) a.validate();

  const double T = market.T();
  const std::int64_t K = config.steps(T);
  const double h = T / static_cast<double>(K);
  const double sqrt_h = std::sqrt(h);
  const double r = market.r();

  // Per agent: drift loading c'nu and noise loading sigma'c.
  Vector drift(n);
  Matrix loading(m, n);
  Vector x0(n);
  for (Index j = 0; j < n; ++j) {
    const auto& c = strategies[static_cast<std::size_t>(j)].c;
    drift(j) = c.dot(market.nu());
    loading.col(j) = market.sigma().transpose() * c;
    x0(j) = agents[static_cast<std::size_t>(j)].x0;
  }
  Vector profile(K);
  for (std::int64_t k = 0; k < K; ++k) {
    profile(k) = std::exp(r * (static_cast<double>(k) * h - T));
  }

  const auto P = static_cast<std::size_t>(config.paths);
  Matrix terminal(config.paths, n);
  parallel_for(P, config.threads, [&](std::size_t lo, std::size_t hi) {
    Vector x(n), z(m), shock(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t path = lo; path < hi; ++path) {
      auto gen = path_engine(config.seed, path);
      normal.reset();
      x = x0;
      for (std::int64_t k = 0; k < K; ++k) {
        for (Index a = 0; a < m; ++a) z(a) = normal(gen) * sqrt_h;
        shock.noalias() = loading.transpose() * z;
        x += r * h * x + profile(k) * (drift * h + shock);
      }
      terminal.row(static_cast<Index>(path)) = x.transpose();
    }
  });

  SimResult out;
  out.paths = config.paths;
  out.steps = K;
  out.dt = h;
  std::vector<double> column(P);
  for (Index j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < P; ++p) column[p] = terminal(static_cast<Index>(p), j);
    if (P >= 2) {
      out.moments.push_back(estimate_moments(column));
    } else {
      MomentEstimate e;
      e.mean = column[0];
      out.moments.push_back(e);
    }
  }
  if (config.keep_samples) out.samples = std::move(terminal);
  return out;
}

/// Exact log-normal GBM price path: steps + 1 rows of prices starting at 1.
inline PricePanel simulate_gbm_prices(const Vector& mu, const Matrix& Sigma, double dt_obs,
                                      Index steps, std::uint64_t seed) {
  detail::require_square(Sigma, "Sigma");
  if (mu.size() != Sigma.rows()) throw DimensionError("mu and Sigma dimensions differ");
  if (steps < 2 || !(dt_obs > 0.0)) throw ConfigError("need >= 2 steps and positive dt");
  const Matrix L = detail::factor_spd(Sigma).matrixL();
  const Index m = mu.size();
  const Vector drift = (mu - 0.5 * Sigma.diagonal()) * dt_obs;
  auto gen = path_engine(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PricePanel panel;
  panel.dt_obs = dt_obs;
  panel.prices.resize(steps + 1, m);
  Vector logp = Vector::Zero(m);
  Vector z(m);
  panel.prices.row(0).setOnes();
  for (Index k = 1; k <= steps; ++k) {
    for (Index a = 0; a < m; ++a) z(a) = normal(gen);
    logp += drift + std::sqrt(dt_obs) * (L * z);
    panel.prices.row(k) = logp.array().exp().transpose();
  }
  for (Index a = 0; a < m; ++a) panel.assets.push_back("asset" + std::to_string(a + 1));
  return panel;
}

}  // namespace infgame
