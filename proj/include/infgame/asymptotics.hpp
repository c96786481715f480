#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/solver.hpp"
#include "infgame/strategy.hpp"

namespace infgame {

/// alpha~ = sum(eta * alpha) / sum(eta).
inline double asymptotic_alpha(const Vector& etas, const Vector& alphas) {
  if (etas.size() != alphas.size() || etas.size() == 0) {
    throw DimensionError("eta and alpha vectors must have the same non-zero length");
  }
  if (!(etas.minCoeff() > 0.0) || !etas.allFinite()) throw DomainError("eta must be positive");
  if (!(alphas.minCoeff() > 0.0) || !alphas.allFinite()) {
    throw DomainError("alpha must be positive");
  }
  return etas.dot(alphas) / etas.sum();
}

inline StrategyCoeffs asymptotic_strategy(double alpha_tilde, const MarketParams& market) {
  if (!(alpha_tilde > 0.0) || !std::isfinite(alpha_tilde)) {
    throw DomainError("asymptotic risk aversion must be positive");
  }
  return {market.merton_direction() / alpha_tilde};
}

/// Infinite-influence limit of U: block (j, i) = eta_i alpha_i / sum(eta alpha) * I_m
/// for every row j, so every agent ends up on the same weighted average.
inline Matrix limit_U(const Vector& etas, const Vector& alphas, Index m) {
  if (m < 1) throw DimensionError("asset count must be positive");
  asymptotic_alpha(etas, alphas);
  const Index n = etas.size();
  const Vector weight = etas.cwiseProduct(alphas) / etas.dot(alphas);
  Matrix U(n * m, n * m);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      U.block(j * m, i * m, m, m) = weight(i) * Matrix::Identity(m, m);
    }
  }
  return U;
}

/// V_j = (1/alpha_j - 1/alpha~)^{-1} (sum_i U_ji / alpha_i - I / alpha~), the
/// weight of agent j's rational strategy in P*_j = V_j Pbar_j + (I - V_j) P~.
inline Matrix weight_V(std::span<const Matrix> U_row, const Vector& alphas, double alpha_tilde,
                       Index j) {
  const Index n = alphas.size();
  if (static_cast<Index>(U_row.size()) != n || n == 0) {
    throw DimensionError("need one U block per agent");
  }
  if (j < 0 || j >= n) throw DimensionError("agent index out of range");
  if (!(alpha_tilde > 0.0) || !(alphas.minCoeff() > 0.0)) {
    throw DomainError("risk aversions must be positive");
  }
  const double gap = 1.0 / alphas(j) - 1.0 / alpha_tilde;
  if (std::abs(gap) < 1e-12) {
    throw DegenerateError("agent " + std::to_string(j) +
                          " has alpha equal to the asymptotic risk aversion");
  }
  const Index m = U_row.front().rows();
  Matrix acc = -Matrix::Identity(m, m) / alpha_tilde;
  for (Index i = 0; i < n; ++i) {
    const auto& block = U_row[static_cast<std::size_t>(i)];
    if (block.rows() != m || block.cols() != m) throw DimensionError("U blocks must be m x m");
    acc += block / alphas(i);
  }
  return acc / gap;
}

/// Convenience overload taking block row j of a solved game.
inline Matrix weight_V(const GameSolution& solution, const Vector& alphas, double alpha_tilde,
                       Index j) {
  std::vector<Matrix> row;
  row.reserve(static_cast<std::size_t>(solution.n()));
  for (Index i = 0; i < solution.n(); ++i) row.push_back(solution.U_block(j, i));
  return weight_V(row, alphas, alpha_tilde, j);
}

struct WealthComparison {
  WealthDist rational;
  WealthDist asymptotic;
};

/// Terminal wealth under the agent's own rational strategy and under the
/// asymptotic strategy: mean x e^{rT} + kappa T / a, variance kappa T / a^2.
inline WealthComparison compare_terminal_wealth(const AgentParams& agent, double alpha_tilde,
                                                const MarketParams& market) {
  agent.validate();
  if (!(alpha_tilde > 0.0)) throw DomainError("asymptotic risk aversion must be positive");
  const double base = agent.x0 * std::exp(market.r() * market.T());
  const double kT = market.kappa() * market.T();
  WealthComparison out;
  out.rational = {base + kT / agent.alpha, kT / (agent.alpha * agent.alpha)};
  out.asymptotic = {base + kT / alpha_tilde, kT / (alpha_tilde * alpha_tilde)};
  return out;
}

struct AsymptoticResult {
  double alpha_tilde = 0.0;
  StrategyCoeffs coeffs;
  Matrix U_limit;
  Vector eta;  ///< integral constants at the common strategy
  int iters = 0;
  /// False when W is not homogeneous; the limit is still computed.
  bool within_hypothesis = true;
  std::vector<std::string> warnings;
};

/// Self-consistent limit: alpha~ -> c~ = Sigma^{-1} nu / alpha~ -> eta_j(c~) -> alpha~,
/// started from mean(alpha).
inline AsymptoticResult asymptotic_limit(const MarketParams& market,
                                         std::span<const AgentParams> agents,
                                         const InfluenceNetwork& network, double tol = 1e-12,
                                         int max_iters = 1000) {
  if (agents.empty() || static_cast<Index>(agents.size()) != network.n()) {
    throw DimensionError("agent count differs from network size");
  }
  const Index n = network.n();
  Vector alphas(n);
  for (Index j = 0; j < n; ++j) {
    agents[static_cast<std::size_t>(j)].validate();
    alphas(j) = agents[static_cast<std::size_t>(j)].alpha;
  }

  AsymptoticResult out;
  if (!network.is_homogeneous()) {
    out.within_hypothesis = false;
    out.warnings.push_back("network is not homogeneous; limit is outside the stated hypothesis");
  }

  double alpha = alphas.mean();
  Vector eta(n);
  for (int k = 1; k <= max_iters; ++k) {
    const StrategyCoeffs c = asymptotic_strategy(alpha, market);
    for (Index j = 0; j < n; ++j) {
      eta(j) = eta_update(c, agents[static_cast<std::size_t>(j)], market, EtaMode::closed_form);
    }
    const double next = asymptotic_alpha(eta, alphas);
    const double change = std::abs(next - alpha);
    alpha = next;
    out.iters = k;
    if (change < tol) {
      out.alpha_tilde = alpha;
      out.coeffs = asymptotic_strategy(alpha, market);
      for (Index j = 0; j < n; ++j) {
        eta(j) = eta_update(out.coeffs, agents[static_cast<std::size_t>(j)], market,
                            EtaMode::closed_form);
      }
      out.eta = eta;
      out.U_limit = limit_U(eta, alphas, market.m());
      return out;
    }
  }
  throw ConvergenceError("asymptotic risk aversion did not converge", GameSolution{});
}

}  // namespace infgame
