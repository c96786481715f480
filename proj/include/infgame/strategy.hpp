#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/quadrature.hpp"

namespace infgame {

/// A strategy of the form P(t) = c * exp(r (t - T)) on [0, T]. Rational,
/// equilibrium and asymptotic strategies all share this time profile, so the
/// coefficient vector c (wealth units) describes them completely.
struct StrategyCoeffs {
  Vector c;

  Index m() const { return c.size(); }
};

/// Normal terminal wealth distribution.
struct WealthDist {
  double mean = 0.0;
  double variance = 0.0;
};

/// Per-agent parameters: risk aversion alpha > 0, influence coefficient
/// theta >= 0, initial wealth x0.
struct AgentParams {
  double alpha = 1.0;
  double theta = 0.0;
  double x0 = 0.0;

  void validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(theta) || !std::isfinite(x0)) {
      throw DomainError("agent parameters must be finite");
    }
    if (!(alpha > 0.0)) throw DomainError("risk aversion alpha must be positive");
    if (theta < 0.0) throw DomainError("influence coefficient theta must be non-negative");
  }
};

namespace detail {

inline void require_dim(const StrategyCoeffs& s, const MarketParams& market) {
  if (s.c.size() != market.m()) throw DimensionError("strategy dimension differs from market");
}

}  // namespace detail

/// Merton strategy alpha^{-1} Sigma^{-1} nu.
inline StrategyCoeffs rational_strategy(double alpha, const MarketParams& market) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("risk aversion alpha must be positive");
  }
  return {market.merton_direction() / alpha};
}

inline Vector evaluate(const StrategyCoeffs& s, double t, const MarketParams& market) {
  detail::require_dim(s, market);
  const double T = market.T();
  const double slack = 1e-12 * std::max(1.0, T);
  if (!(t >= -slack && t <= T + slack)) {
    throw DomainError("time " + std::to_string(t) + " outside [0, T]");
  }
  if (t >= T) return s.c;
  return s.c * std::exp(market.r() * (t - T));
}

/// q_j = sum_i w_ji c_i.
inline StrategyCoeffs average_followee(const InfluenceNetwork& network,
                                       std::span<const StrategyCoeffs> strategies, Index j) {
  if (static_cast<Index>(strategies.size()) != network.n()) {
    throw DimensionError("need one strategy per agent");
  }
  if (j < 0 || j >= network.n()) throw DimensionError("agent index out of range");
  Vector q = Vector::Zero(strategies.front().c.size());
  for (Index i = 0; i < network.n(); ++i) {
    const auto& c = strategies[static_cast<std::size_t>(i)].c;
    if (c.size() != q.size()) throw DimensionError("strategies have mixed dimensions");
    if (network(j, i) != 0.0) q += network(j, i) * c;
  }
  return {q};
}

/// D(P, Q) = 1/2 int_0^T e^{2r(T-t)} |P - Q|^2 dt = (T/2) |c_p - c_q|^2.
inline double average_deviation(const StrategyCoeffs& p, const StrategyCoeffs& q,
                                const MarketParams& market) {
  if (p.c.size() != q.c.size()) throw DimensionError("strategy dimensions differ");
  return 0.5 * market.T() * (p.c - q.c).squaredNorm();
}

inline double exponential_utility(double alpha, double x) {
  if (!(alpha > 0.0)) throw DomainError("risk aversion alpha must be positive");
  return -std::exp(-alpha * x) / alpha;
}

/// Terminal wealth under a constant-profile strategy: mean x0 e^{rT} + T c'nu,
/// variance T c' Sigma c.
inline WealthDist terminal_wealth_dist(const StrategyCoeffs& s, double x0,
                                       const MarketParams& market) {
  detail::require_dim(s, market);
  const double T = market.T();
  WealthDist d;
  d.mean = x0 * std::exp(market.r() * T) + T * s.c.dot(market.nu());
  d.variance = T * s.c.dot(market.Sigma() * s.c);
  return d;
}

/// A strategy sampled on the uniform grid t_k = k * T / (K - 1), k = 0..K-1.
/// Row k of `values` holds P(t_k).
struct SampledStrategy {
  Matrix values;
  double T = 0.0;

  Index points() const { return values.rows(); }
  Index m() const { return values.cols(); }
  double step() const { return T / static_cast<double>(values.rows() - 1); }
  double time(Index k) const { return static_cast<double>(k) * step(); }
};

inline SampledStrategy sample(const StrategyCoeffs& s, const MarketParams& market,
                              Index points = 1001) {
  if (points < 2) throw DimensionError("need at least two grid points");
  detail::require_dim(s, market);
  SampledStrategy out{Matrix(points, s.m()), market.T()};
  for (Index k = 0; k < points; ++k) {
    out.values.row(k) = evaluate(s, out.time(k), market).transpose();
  }
  return out;
}

namespace detail {

inline void require_same_grid(const SampledStrategy& a, const SampledStrategy& b,
                              const MarketParams& market) {
  if (a.points() != b.points() || a.m() != b.m() || a.T != b.T) {
    throw DimensionError("sampled strategies are on different grids");
  }
  if (a.m() != market.m()) throw DimensionError("sampled strategy dimension differs from market");
  if (a.points() < 2) throw DimensionError("need at least two grid points");
}

}  // namespace detail

/// Quadrature form of the average deviation for arbitrary sampled strategies.
inline double average_deviation(const SampledStrategy& p, const SampledStrategy& q,
                                const MarketParams& market) {
  detail::require_same_grid(p, q, market);
  std::vector<double> f(static_cast<std::size_t>(p.points()));
  for (Index k = 0; k < p.points(); ++k) {
    const double w = std::exp(2.0 * market.r() * (market.T() - p.time(k)));
    f[static_cast<std::size_t>(k)] = w * (p.values.row(k) - q.values.row(k)).squaredNorm();
  }
  return 0.5 * quadrature::integrate_samples(f, p.step());
}

/// J = E phi(X(T)) - theta D(P, Q), with the lognormal identity
/// E phi = -alpha^{-1} exp(-alpha E X + alpha^2 D X / 2) and all time
/// integrals taken by grid quadrature.
inline double objective_functional(const SampledStrategy& p, const SampledStrategy& q,
                                   const AgentParams& agent, const MarketParams& market) {
  detail::require_same_grid(p, q, market);
  const auto K = static_cast<std::size_t>(p.points());
  std::vector<double> drift(K), risk(K), dev(K);
  const double r = market.r();
  const double T = market.T();
  for (Index k = 0; k < p.points(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double g = std::exp(r * (T - p.time(k)));
    const Vector pk = p.values.row(k).transpose();
    drift[i] = g * market.nu().dot(pk);
    risk[i] = g * g * pk.dot(market.Sigma() * pk);
    dev[i] = g * g * (p.values.row(k) - q.values.row(k)).squaredNorm();
  }
  const double h = p.step();
  const double mean = agent.x0 * std::exp(r * T) + quadrature::integrate_samples(drift, h);
  const double variance = quadrature::integrate_samples(risk, h);
  const double deviation = 0.5 * quadrature::integrate_samples(dev, h);
  const double a = agent.alpha;
  return -std::exp(-a * mean + 0.5 * a * a * variance) / a - agent.theta * deviation;
}

/// Stack per-agent coefficients into one vector of length n*m.
inline Vector stack(std::span<const StrategyCoeffs> s) {
  if (s.empty()) return {};
  const Index m = s.front().m();
  Vector out(static_cast<Index>(s.size()) * m);
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j].m() != m) throw DimensionError("strategies have mixed dimensions");
    out.segment(static_cast<Index>(j) * m, m) = s[j].c;
  }
  return out;
}

inline std::vector<StrategyCoeffs> unstack(const Vector& p, Index m) {
  if (m <= 0 || p.size() % m != 0) throw DimensionError("stacked vector length not a multiple of m");
  std::vector<StrategyCoeffs> out(static_cast<std::size_t>(p.size() / m));
  for (std::size_t j = 0; j < out.size(); ++j) out[j].c = p.segment(static_cast<Index>(j) * m, m);
  return out;
}

}  // namespace infgame
