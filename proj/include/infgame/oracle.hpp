#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/strategy.hpp"

namespace infgame {

struct OracleConfig {
  Index grid_size = 21;   ///< time points on [0, T]
  /// Stop once a full sweep moves no value by more than tol * scale. Brent on
  /// an objective of order 1 resolves a value to about 1e-6, so tighter
  /// settings stall.
  double tol = 1e-5;
  int max_sweeps = 400;
  int brent_bits = std::numeric_limits<double>::digits / 2;
};

struct OracleResult {
  std::vector<StrategyCoeffs> coeffs;
  std::vector<SampledStrategy> sampled;
  /// Worst RMS misfit of the sampled best responses against the
  /// c * exp(r(t - T)) profile, relative to |c|.
  double fit_residual = 0.0;
  int sweeps = 0;
};

/// Least-squares coefficients of P(t_k) ~ c * exp(r (t_k - T)).
inline StrategyCoeffs fit_profile(const SampledStrategy& s, const MarketParams& market,
                                  double* relative_residual = nullptr) {
  Vector g(s.points());
  for (Index k = 0; k < s.points(); ++k) g(k) = std::exp(market.r() * (s.time(k) - s.T));
  StrategyCoeffs out{(s.values.transpose() * g) / g.squaredNorm()};
  if (relative_residual) {
    const Matrix misfit = s.values - g * out.c.transpose();
    const double rms = std::sqrt(misfit.squaredNorm() / static_cast<double>(s.points()));
    const double scale = out.c.norm();
    *relative_residual = scale > 0.0 ? rms / scale : rms;
  }
  return out;
}

/// Discretized best-response iteration, independent of the closed-form
/// solver. Every strategy is a free vector of values on a uniform grid.
/// Agents take turns (Gauss-Seidel); agent j maximizes objective_functional
/// by cyclic coordinate search with Brent's method, holding its followee
/// average Q_j fixed at the current strategies. Starts from zero strategies.
inline OracleResult oracle_best_response(const MarketParams& market,
                                         std::span<const AgentParams> agents,
                                         const InfluenceNetwork& network,
                                         const OracleConfig& config = {}) {
  if (agents.empty() || static_cast<Index>(agents.size()) != network.n()) {
    throw DimensionError("agent count differs from network size");
  }
  for (const auto& a : agents) a.validate();
  if (config.grid_size < 3) throw ConfigError("oracle grid needs at least 3 points");
  if (!(config.tol > 0.0) || config.max_sweeps < 1) throw ConfigError("invalid oracle tolerances");

  const Index n = network.n();
  const Index m = market.m();
  const Index K = config.grid_size;
  const auto un = static_cast<std::size_t>(n);

  double scale = 0.0;
  for (const auto& a : agents) {
    scale = std::max(scale, rational_strategy(a.alpha, market).c.cwiseAbs().maxCoeff());
  }
  if (scale == 0.0) scale = 1.0;

  std::vector<SampledStrategy> P(un, SampledStrategy{Matrix::Zero(K, m), market.T()});
  auto followee = [&](Index j) {
    SampledStrategy q{Matrix::Zero(K, m), market.T()};
    for (Index i = 0; i < n; ++i) {
      if (network(j, i) != 0.0) q.values += network(j, i) * P[static_cast<std::size_t>(i)].values;
    }
    return q;
  };

  OracleResult result;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Index j = 0; j < n; ++j) {
      const auto& agent = agents[static_cast<std::size_t>(j)];
      auto& p = P[static_cast<std::size_t>(j)];
      const SampledStrategy q = followee(j);
      for (Index k = 0; k < K; ++k) {
        for (Index a = 0; a < m; ++a) {
          const double x0 = p.values(k, a);
          auto f = [&](double x) {
            p.values(k, a) = x;
            return -objective_functional(p, q, agent, market);
          };
          double radius = std::max(std::abs(x0), scale);
          double best = x0;
          for (int expand = 0; expand < 30; ++expand) {
            const double lo = x0 - radius;
            const double hi = x0 + radius;
            best = boost::math::tools::brent_find_minima(f, lo, hi, config.brent_bits).first;
            if (best - lo > 1e-3 * radius && hi - best > 1e-3 * radius) break;
            radius *= 4.0;
          }
          p.values(k, a) = best;
          moved = std::max(moved, std::abs(best - x0));
        }
      }
    }
    result.sweeps = sweep;
    if (moved <= config.tol * scale) {
      result.sampled = P;
      result.coeffs.resize(un);
      for (std::size_t j = 0; j < un; ++j) {
        double resid = 0.0;
        result.coeffs[j] = fit_profile(P[j], market, &resid);
        result.fit_residual = std::max(result.fit_residual, resid);
      }
      return result;
    }
  }
  throw OracleError("best-response oracle did not settle within " +
                    std::to_string(config.max_sweeps) + " sweeps");
}

}  // namespace infgame
