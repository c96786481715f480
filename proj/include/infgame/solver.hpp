#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/parallel.hpp"
#include "infgame/quadrature.hpp"
#include "infgame/strategy.hpp"

namespace infgame {

/// How the integral constants eta_j are evaluated from a strategy.
enum class EtaMode {
  closed_form,      ///< exact, using the shared time profile
  quadrature,       ///< adaptive Gauss-Kronrod on the time integrals
  sampled,          ///< Riemann sum over {du, 2du, ..., T}
  right_rectangle,  ///< one right-endpoint rectangle, exact for this profile
};

/// How the influence-weight matrix U (or its action) is obtained.
enum class UMode {
  exact_inverse,    ///< U = [I - S(W x I)]^{-1} Z by dense LU
  taylor,           ///< first-order expansion [I + S(W x I)] Z
  block_iterative,  ///< [I - S(W x I)] p = Z pbar by block Jacobi sweeps; U not formed
};

inline std::string_view to_string(EtaMode mode) {
  switch (mode) {
    case EtaMode::closed_form: return "closed_form";
    case EtaMode::quadrature: return "quadrature";
    case EtaMode::sampled: return "sampled";
    case EtaMode::right_rectangle: return "right_rectangle";
  }
  return "unknown";
}

inline std::string_view to_string(UMode mode) {
  switch (mode) {
    case UMode::exact_inverse: return "exact_inverse";
    case UMode::taylor: return "taylor";
    case UMode::block_iterative: return "block_iterative";
  }
  return "unknown";
}

inline EtaMode parse_eta_mode(std::string_view s) {
  for (auto mode : {EtaMode::closed_form, EtaMode::quadrature, EtaMode::sampled,
                    EtaMode::right_rectangle}) {
    if (s == to_string(mode)) return mode;
  }
  throw ConfigError("unknown eta mode '" + std::string(s) + "'");
}

inline UMode parse_u_mode(std::string_view s) {
  for (auto mode : {UMode::exact_inverse, UMode::taylor, UMode::block_iterative}) {
    if (s == to_string(mode)) return mode;
  }
  throw ConfigError("unknown U mode '" + std::string(s) + "'");
}

struct SolverConfig {
  double eps = 1e-12;  ///< stop once max_j |eta_j^(k+1) - eta_j^(k)| < eps
  int max_iters = 500;
  EtaMode eta_mode = EtaMode::right_rectangle;
  UMode u_mode = UMode::exact_inverse;
  double delta_u = 1e-3;  ///< sampling interval for EtaMode::sampled
  /// eta <- (1 - w) eta + w eta_new. 1 is the undamped iteration.
  double relaxation = 1.0;
  double taylor_warn_threshold = 1e-6;
  double quad_abs_tol = 1.49e-8;
  unsigned threads = 1;
  /// Form and keep the mn x mn matrix U in the solution (ignored for
  /// block_iterative, which never forms it).
  bool keep_U = true;

  void validate() const {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (eta_mode == EtaMode::sampled && !(delta_u > 0.0)) {
      throw ConfigError("delta_u must be positive");
    }
    if (!(relaxation > 0.0 && relaxation <= 1.0)) {
      throw ConfigError("relaxation must lie in (0, 1]");
    }
    if (!(quad_abs_tol > 0.0)) throw ConfigError("quadrature tolerance must be positive");
  }

  /// Exact U by dense inverse and eta by adaptive quadrature.
  static SolverConfig base() {
    SolverConfig c;
    c.u_mode = UMode::exact_inverse;
    c.eta_mode = EtaMode::quadrature;
    return c;
  }

  /// Block-iterative equilibrium map with right-rectangle eta.
  static SolverConfig fast() {
    SolverConfig c;
    c.u_mode = UMode::block_iterative;
    c.eta_mode = EtaMode::right_rectangle;
    c.keep_U = false;
    return c;
  }
};

/// Result of the fixed-point iteration. `Z` and `U` are built from the eta
/// of the last iteration; `eta` is re-evaluated at the returned strategies.
struct GameSolution {
  Vector eta;
  std::vector<Matrix> Z;
  Matrix U;  ///< empty unless assembled
  std::vector<StrategyCoeffs> coeffs;
  int iters = 0;
  bool converged = false;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> trace;  ///< delta-eta per iteration
  std::vector<std::string> warnings;
  EtaMode eta_mode = EtaMode::right_rectangle;
  UMode u_mode = UMode::exact_inverse;

  Index n() const { return static_cast<Index>(coeffs.size()); }
  Index m() const { return coeffs.empty() ? 0 : coeffs.front().m(); }
  bool has_U() const { return U.size() > 0; }

  /// Block U_ji.
  Matrix U_block(Index j, Index i) const {
    if (!has_U()) throw SolverError("influence-weight matrix was not assembled");
    const Index mm = m();
    return U.block(j * mm, i * mm, mm, mm);
  }
};

/// Thrown when the iteration cap is hit; carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, GameSolution last)
      : Error(what), last_(std::move(last)) {}
  const GameSolution& last_iterate() const { return last_; }

 private:
  GameSolution last_;
};

/// Investment opinion Z = (I + theta/(alpha eta) Sigma^{-1})^{-1}, obtained from
/// the equivalent SPD system (Sigma + k I) Z = Sigma with k = theta/(alpha eta).
inline Matrix investment_opinion(double alpha, double eta, double theta, const Matrix& Sigma) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive and finite");
  if (!(theta >= 0.0)) throw DomainError("theta must be non-negative");
  detail::require_square(Sigma, "Sigma");
  detail::require_symmetric(Sigma, "Sigma");
  detail::factor_spd(Sigma);
  const Index m = Sigma.rows();
  if (theta == 0.0) return Matrix::Identity(m, m);
  const double k = theta / (alpha * eta);
  Matrix shifted = Sigma;
  shifted.diagonal().array() += k;
  Eigen::LLT<Matrix> llt(shifted);
  Matrix Z = llt.solve(Sigma);
  return 0.5 * (Z + Z.transpose());
}

namespace detail {

inline void require_blocks(std::span<const Matrix> Z, const InfluenceNetwork& network) {
  if (static_cast<Index>(Z.size()) != network.n() || Z.empty()) {
    throw DimensionError("need one opinion block per agent");
  }
  const Index m = Z.front().rows();
  for (const auto& z : Z) {
    if (z.rows() != m || z.cols() != m) throw DimensionError("opinion blocks must be m x m");
  }
}

/// I - S (W x I_m), block (j, i) = delta_ji I - w_ji S_j.
inline Matrix influence_system(std::span<const Matrix> Z, const InfluenceNetwork& network) {
  const Index n = network.n();
  const Index m = Z.front().rows();
  Matrix A = Matrix::Identity(n * m, n * m);
  for (Index j = 0; j < n; ++j) {
    const Matrix S = Matrix::Identity(m, m) - Z[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) {
      const double w = network(j, i);
      if (w != 0.0) A.block(j * m, i * m, m, m) -= w * S;
    }
  }
  return A;
}

inline double s_norm_bound(std::span<const Matrix> Z) {
  double q = 0.0;
  for (const auto& z : Z) {
    const Matrix S = Matrix::Identity(z.rows(), z.cols()) - z;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    q = std::max(q, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  return q;
}

inline Eigen::PartialPivLU<Matrix> factor_influence_system(std::span<const Matrix> Z,
                                                           const InfluenceNetwork& network) {
  Eigen::PartialPivLU<Matrix> lu(influence_system(Z, network));
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    std::ostringstream msg;
    msg << "I - S(W x I) is singular to working precision (rcond " << rc
        << ", spectral radius bound max_j |S_j| = " << s_norm_bound(Z) << ")";
    throw SolverError(msg.str());
  }
  return lu;
}

inline Matrix block_diagonal(std::span<const Matrix> Z) {
  const Index m = Z.front().rows();
  const Index n = static_cast<Index>(Z.size());
  Matrix out = Matrix::Zero(n * m, n * m);
  for (Index j = 0; j < n; ++j) out.block(j * m, j * m, m, m) = Z[static_cast<std::size_t>(j)];
  return out;
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace detail

/// Influence-weight matrix. exact_inverse (and block_iterative, which has no
/// assembled form of its own) gives [I - S(W x I)]^{-1} Z; taylor gives
/// [I + S(W x I)] Z. The Kronecker product is applied block-wise.
inline Matrix assemble_U(std::span<const Matrix> Z, const InfluenceNetwork& network, UMode mode) {
  detail::require_blocks(Z, network);
  const Index n = network.n();
  const Index m = Z.front().rows();
  if (mode == UMode::taylor) {
    Matrix U = Matrix::Zero(n * m, n * m);
    for (Index j = 0; j < n; ++j) {
      const auto& Zj = Z[static_cast<std::size_t>(j)];
      const Matrix S = Matrix::Identity(m, m) - Zj;
      U.block(j * m, j * m, m, m) += Zj;
      for (Index i = 0; i < n; ++i) {
        const double w = network(j, i);
        if (w != 0.0) U.block(j * m, i * m, m, m) += w * (S * Z[static_cast<std::size_t>(i)]);
      }
    }
    return U;
  }
  auto lu = detail::factor_influence_system(Z, network);
  return lu.solve(detail::block_diagonal(Z));
}

/// Solves [I - S(W x I)] p = b by Jacobi sweeps p <- b + S (W x I) p, using
/// (W x I) p == W P for the n x m row-stacked matrix P. Falls back to a dense
/// LU solve when the contraction bound is too close to 1 or the sweeps stall.
struct BlockIterativeStats {
  int sweeps = 0;
  bool dense_fallback = false;
};

inline Vector solve_block_iterative(std::span<const Matrix> Z, const InfluenceNetwork& network,
                                    const Vector& b, Vector p, BlockIterativeStats* stats = nullptr,
                                    int max_sweeps = 5000) {
  detail::require_blocks(Z, network);
  const Index n = network.n();
  const Index m = Z.front().rows();
  if (b.size() != n * m) throw DimensionError("right-hand side has wrong length");
  if (p.size() != n * m) p = b;

  BlockIterativeStats local;
  const double q = detail::s_norm_bound(Z);
  auto dense = [&] {
    local.dense_fallback = true;
    if (stats) *stats = local;
    return Vector(detail::factor_influence_system(Z, network).solve(b));
  };
  if (q >= 0.99) return dense();

  std::vector<Matrix> S(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    S[static_cast<std::size_t>(j)] = Matrix::Identity(m, m) - Z[static_cast<std::size_t>(j)];
  }
  Vector next(n * m);
  detail::RowMajorMatrix Y(n, m);
  const double factor = q / (1.0 - q);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    Eigen::Map<const detail::RowMajorMatrix> P(p.data(), n, m);
    Y.noalias() = network.W() * P;
    for (Index j = 0; j < n; ++j) {
      next.segment(j * m, m).noalias() =
          b.segment(j * m, m) + S[static_cast<std::size_t>(j)] * Y.row(j).transpose();
    }
    const double change = (next - p).cwiseAbs().maxCoeff();
    p.swap(next);
    local.sweeps = sweep;
    const double scale = p.cwiseAbs().maxCoeff();
    if (change == 0.0 || change * factor <= 4.0 * std::numeric_limits<double>::epsilon() * scale) {
      if (stats) *stats = local;
      return p;
    }
  }
  return dense();
}

/// Integral constant eta for one agent's strategy.
inline double eta_update(const StrategyCoeffs& s, const AgentParams& agent,
                         const MarketParams& market, EtaMode mode, double delta_u = 1e-3,
                         double quad_abs_tol = 1.49e-8) {
  detail::require_dim(s, market);
  const double r = market.r();
  const double T = market.T();
  const double a = agent.alpha;
  const double zeta_exponent = -a * agent.x0 * std::exp(r * T);
  double drift = 0.0;  // int_0^T e^{r(T-t)} nu'P dt
  double risk = 0.0;   // int_0^T e^{2r(T-t)} P'Sigma P dt

  switch (mode) {
    case EtaMode::closed_form:
      drift = T * market.nu().dot(s.c);
      risk = T * s.c.dot(market.Sigma() * s.c);
      break;
    case EtaMode::quadrature: {
      auto f_drift = [&](double t) {
        return std::exp(r * (T - t)) * market.nu().dot(evaluate(s, t, market));
      };
      auto f_risk = [&](double t) {
        const Vector p = evaluate(s, t, market);
        return std::exp(2.0 * r * (T - t)) * p.dot(market.Sigma() * p);
      };
      drift = quadrature::integrate_adaptive(f_drift, 0.0, T, quad_abs_tol);
      risk = quadrature::integrate_adaptive(f_risk, 0.0, T, quad_abs_tol);
      break;
    }
    case EtaMode::sampled: {
      if (!(delta_u > 0.0)) throw ConfigError("delta_u must be positive");
      const double count = std::round(T / delta_u);
      if (count < 1.0 || std::abs(count * delta_u - T) > 1e-9) {
        throw ConfigError("delta_u does not divide the horizon T");
      }
      const auto K = static_cast<long>(count);
      for (long k = 1; k <= K; ++k) {
        const double u = (k == K) ? T : static_cast<double>(k) * delta_u;
        const Vector p = evaluate(s, u, market);
        const double g = std::exp(r * (T - u));
        drift += g * market.nu().dot(p) * delta_u;
        risk += g * g * p.dot(market.Sigma() * p) * delta_u;
      }
      break;
    }
    case EtaMode::right_rectangle: {
      const Vector pT = evaluate(s, T, market);
      drift = T * market.nu().dot(pT);
      risk = T * pT.dot(market.Sigma() * pT);
      break;
    }
  }
  return std::exp(zeta_exponent - a * drift + 0.5 * a * a * risk);
}

namespace detail {

inline void require_game(const MarketParams& market, std::span<const AgentParams> agents,
                         const InfluenceNetwork& network) {
  if (agents.empty()) throw DimensionError("need at least one agent");
  if (static_cast<Index>(agents.size()) != network.n()) {
    throw DimensionError("agent count differs from network size");
  }
  for (const auto& a : agents) a.validate();
  (void)market;
}

}  // namespace detail

/// Fixed-point iteration on the integral constants:
///   Z_j from eta_j, U (or its action) from Z and W, c_j = sum_i U_ji cbar_i,
///   eta_j re-evaluated at c_j, until max_j |delta eta_j| < eps.
/// The iteration starts at the eta of the rational strategies.
inline GameSolution solve(const MarketParams& market, std::span<const AgentParams> agents,
                          const InfluenceNetwork& network, const SolverConfig& config = {}) {
  detail::require_game(market, agents, network);
  config.validate();
  const Index n = network.n();
  const Index m = market.m();
  const auto un = static_cast<std::size_t>(n);
  const double r = market.r();
  const double T = market.T();

  GameSolution sol;
  sol.eta_mode = config.eta_mode;
  sol.u_mode = config.u_mode;

  double max_theta = 0.0;
  for (const auto& a : agents) max_theta = std::max(max_theta, a.theta);
  if (config.u_mode == UMode::taylor && max_theta > config.taylor_warn_threshold) {
    std::ostringstream msg;
    msg << "taylor U approximation used with max theta " << max_theta << " above threshold "
        << config.taylor_warn_threshold;
    sol.warnings.push_back(msg.str());
  }

  std::vector<StrategyCoeffs> rational(un);
  Vector eta(n);
  for (std::size_t j = 0; j < un; ++j) {
    rational[j] = rational_strategy(agents[j].alpha, market);
    eta(static_cast<Index>(j)) =
        std::exp(-agents[j].alpha * agents[j].x0 * std::exp(r * T) - 0.5 * market.kappa() * T);
  }
  const Vector pbar = stack(rational);
  const bool keep_U = config.keep_U && config.u_mode != UMode::block_iterative;
  const unsigned threads = n >= 64 ? config.threads : 1;

  auto build_opinions = [&](const Vector& e) {
    std::vector<Matrix> Z(un);
    parallel_for(un, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        Z[j] = investment_opinion(agents[j].alpha, e(static_cast<Index>(j)), agents[j].theta,
                                  market.Sigma());
      }
    });
    return Z;
  };

  // Zero excess return: every strategy is identically zero.
  if (market.nu().isZero(0.0)) {
    sol.Z = build_opinions(eta);
    if (keep_U) sol.U = assemble_U(sol.Z, network, config.u_mode);
    sol.coeffs.assign(un, StrategyCoeffs{Vector::Zero(m)});
    for (std::size_t j = 0; j < un; ++j) {
      eta(static_cast<Index>(j)) = eta_update(sol.coeffs[j], agents[j], market, config.eta_mode,
                                              config.delta_u, config.quad_abs_tol);
    }
    sol.eta = eta;
    sol.iters = 1;
    sol.converged = true;
    sol.residual = 0.0;
    sol.trace.push_back(0.0);
    return sol;
  }

  Vector p = pbar;
  Vector next_eta(n);
  for (int k = 0; k < config.max_iters; ++k) {
    std::vector<Matrix> Z = build_opinions(eta);
    Vector zp(n * m);
    for (Index j = 0; j < n; ++j) {
      zp.segment(j * m, m) = Z[static_cast<std::size_t>(j)] * pbar.segment(j * m, m);
    }

    Matrix U;
    switch (config.u_mode) {
      case UMode::exact_inverse:
        if (keep_U) {
          U = assemble_U(Z, network, UMode::exact_inverse);
          p = U * pbar;
        } else {
          p = detail::factor_influence_system(Z, network).solve(zp);
        }
        break;
      case UMode::taylor:
        if (keep_U) {
          U = assemble_U(Z, network, UMode::taylor);
          p = U * pbar;
        } else {
          Eigen::Map<const detail::RowMajorMatrix> ZP(zp.data(), n, m);
          const detail::RowMajorMatrix Y = network.W() * ZP;
          for (Index j = 0; j < n; ++j) {
            p.segment(j * m, m) = zp.segment(j * m, m) +
                                  (Matrix::Identity(m, m) - Z[static_cast<std::size_t>(j)]) *
                                      Y.row(j).transpose();
          }
        }
        break;
      case UMode::block_iterative:
        p = solve_block_iterative(Z, network, zp, p);
        break;
    }

    sol.coeffs = unstack(p, m);
    parallel_for(un, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        next_eta(static_cast<Index>(j)) = eta_update(sol.coeffs[j], agents[j], market,
                                                     config.eta_mode, config.delta_u,
                                                     config.quad_abs_tol);
      }
    });
    if (config.relaxation != 1.0) {
      next_eta = (1.0 - config.relaxation) * eta + config.relaxation * next_eta;
    }
    if (!next_eta.allFinite() || !(next_eta.minCoeff() > 0.0)) {
      throw SolverError("integral constants left (0, inf); check wealth and market scales");
    }
    const double delta = (next_eta - eta).cwiseAbs().maxCoeff();
    sol.trace.push_back(delta);
    sol.iters = k + 1;
    sol.residual = delta;
    sol.Z = std::move(Z);
    sol.U = std::move(U);
    eta = next_eta;
    sol.eta = eta;
    if (delta < config.eps) {
      sol.converged = true;
      return sol;
    }
  }
  std::ostringstream msg;
  msg << "fixed point did not converge in " << config.max_iters << " iterations (last delta eta "
      << sol.residual << ")";
  throw ConvergenceError(msg.str(), std::move(sol));
}

/// Per-agent max-norm of the first-order condition in coefficient form,
///   eta_j (nu - alpha_j Sigma c_j) - theta_j (c_j - q_j),
/// with eta_j recomputed in closed form from c_j. Zero at an exact equilibrium.
inline Vector first_order_residual(const GameSolution& solution, const MarketParams& market,
                                   std::span<const AgentParams> agents,
                                   const InfluenceNetwork& network) {
  detail::require_game(market, agents, network);
  if (solution.n() != network.n()) throw DimensionError("solution size differs from network");
  Vector out(network.n());
  for (Index j = 0; j < network.n(); ++j) {
    const auto& agent = agents[static_cast<std::size_t>(j)];
    const auto& c = solution.coeffs[static_cast<std::size_t>(j)].c;
    const double eta = eta_update({c}, agent, market, EtaMode::closed_form);
    const Vector q = average_followee(network, solution.coeffs, j).c;
    const Vector g =
        eta * (market.nu() - agent.alpha * (market.Sigma() * c)) - agent.theta * (c - q);
    out(j) = g.cwiseAbs().maxCoeff();
  }
  return out;
}

}  // namespace infgame
