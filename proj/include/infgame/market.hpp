#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "infgame/errors.hpp"

namespace infgame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace detail {

inline void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError(std::string(what) + " must be a non-empty square matrix");
  }
}

// Symmetric check scaled to the magnitude of the entries.
inline void require_symmetric(const Matrix& a, const char* what) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() >= 1e-12 * scale) {
    throw DomainError(std::string(what) + " is not symmetric");
  }
}

inline Eigen::LLT<Matrix> factor_spd(const Matrix& sigma_cov) {
  Eigen::LLT<Matrix> llt(sigma_cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError("covariance matrix is not positive definite");
  }
  // LLT accepts some numerically semi-definite inputs; reject a vanishing pivot.
  const auto diag = llt.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0.0) || !diag.allFinite()) {
    throw DomainError("covariance matrix is not positive definite");
  }
  return llt;
}

}  // namespace detail

/// kappa = nu' Sigma^{-1} nu, computed as |L^{-1} nu|^2 from the Cholesky
/// factor so the result is non-negative by construction.
inline double compute_kappa(const Matrix& Sigma, const Vector& nu) {
  detail::require_square(Sigma, "Sigma");
  if (nu.size() != Sigma.rows()) {
    throw DimensionError("nu and Sigma dimensions differ");
  }
  if (!Sigma.allFinite() || !nu.allFinite()) {
    throw DomainError("non-finite market input");
  }
  detail::require_symmetric(Sigma, "Sigma");
  const auto llt = detail::factor_spd(Sigma);
  const Vector y = llt.matrixL().solve(nu);
  return y.squaredNorm();
}

/// nu = mu - r * 1
inline Vector excess_returns(const Vector& mu, double r) {
  return mu.array() - r;
}

/// Market model: riskless rate r, excess returns nu, volatility factor sigma,
/// covariance Sigma = sigma sigma' and horizon T. Immutable once built.
class MarketParams {
 public:
  static MarketParams from_covariance(double r, Vector nu, Matrix Sigma, double T) {
    detail::require_square(Sigma, "Sigma");
    detail::require_symmetric(Sigma, "Sigma");
    Matrix sym = 0.5 * (Sigma + Sigma.transpose());
    auto llt = detail::factor_spd(sym);
    Matrix sigma = llt.matrixL();
    return MarketParams(r, std::move(nu), std::move(sigma), std::move(sym), T, std::move(llt));
  }

  static MarketParams from_volatility(double r, Vector nu, Matrix sigma, double T) {
    detail::require_square(sigma, "sigma");
    Matrix cov = sigma * sigma.transpose();
    cov = 0.5 * (cov + cov.transpose());
    auto llt = detail::factor_spd(cov);
    return MarketParams(r, std::move(nu), std::move(sigma), std::move(cov), T, std::move(llt));
  }

  double r() const { return r_; }
  double T() const { return T_; }
  Index m() const { return nu_.size(); }
  const Vector& nu() const { return nu_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& Sigma() const { return Sigma_; }
  double kappa() const { return kappa_; }

  /// Sigma^{-1} nu, the common direction of every rational strategy.
  const Vector& merton_direction() const { return direction_; }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  const Eigen::LLT<Matrix>& cholesky() const { return llt_; }

  /// Smallest eigenvalue of Sigma.
  double min_eigenvalue() const { return min_eig_; }

  MarketParams with_horizon(double T) const {
    return MarketParams(r_, nu_, sigma_, Sigma_, T, llt_);
  }

 private:
  MarketParams(double r, Vector nu, Matrix sigma, Matrix Sigma, double T, Eigen::LLT<Matrix> llt)
      : r_(r), T_(T), nu_(std::move(nu)), sigma_(std::move(sigma)), Sigma_(std::move(Sigma)),
        llt_(std::move(llt)) {
    if (nu_.size() != Sigma_.rows() || sigma_.rows() != Sigma_.rows()) {
      throw DimensionError("market dimensions are inconsistent");
    }
    if (!std::isfinite(r_) || !nu_.allFinite() || !sigma_.allFinite()) {
      throw DomainError("market parameters must be finite");
    }
    if (!(T_ > 0.0) || !std::isfinite(T_)) {
      throw DomainError("horizon T must be positive");
    }
    direction_ = llt_.solve(nu_);
    const Vector y = llt_.matrixL().solve(nu_);
    kappa_ = y.squaredNorm();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Sigma_, Eigen::EigenvaluesOnly);
    min_eig_ = eig.eigenvalues().minCoeff();
  }

  double r_;
  double T_;
  Vector nu_;
  Matrix sigma_;
  Matrix Sigma_;
  Eigen::LLT<Matrix> llt_;
  Vector direction_;
  double kappa_ = 0.0;
  double min_eig_ = 0.0;
};

/// Daily closing prices, rows = observations, cols = assets.
struct PricePanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix prices;
  double dt_obs = 1.0 / 252.0;
};

struct GbmEstimate {
  Vector mu;
  Matrix Sigma;
};

/// Annualized GBM drift and covariance from a price panel. Log-returns give
/// Sigma = cov(l) / dt and mu = mean(l) / dt + diag(Sigma) / 2.
inline GbmEstimate estimate_gbm(const PricePanel& panel) {
  const Matrix& p = panel.prices;
  if (p.rows() < 3) {
    throw DataError("price panel needs at least 3 rows to estimate a covariance");
  }
  if (p.cols() < 1) {
    throw DataError("price panel has no assets");
  }
  if (!(panel.dt_obs > 0.0)) {
    throw DataError("observation interval must be positive");
  }
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index a = 0; a < p.cols(); ++a) {
      if (!(p(i, a) > 0.0) || !std::isfinite(p(i, a))) {
        throw DataError("non-positive price at row " + std::to_string(i) + ", asset " +
                        std::to_string(a));
      }
    }
  }
  const Index n = p.rows() - 1;
  const Matrix logp = p.array().log().matrix();
  const Matrix ret = logp.bottomRows(n) - logp.topRows(n);
  const Vector mean = ret.colwise().mean().transpose();
  const Matrix centered = ret.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  GbmEstimate est;
  est.Sigma = cov / panel.dt_obs;
  est.mu = mean / panel.dt_obs + 0.5 * est.Sigma.diagonal();
  return est;
}

/// Estimates from 2019-2023 daily closes of two and five A-share stocks, with
/// the 2023 one-year deposit rate of 1.45%.
namespace sample_markets {

inline constexpr double kDepositRate = 0.0145;

inline Vector two_asset_mu() { return (Vector(2) << 0.0176, 0.0231).finished(); }

inline Matrix two_asset_covariance() {
  return (Matrix(2, 2) << 0.1304, 0.0498, 0.0498, 0.1839).finished();
}

inline Vector five_asset_mu() {
  return (Vector(5) << 0.0448, 0.0423, 0.0421, 0.0360, 0.0233).finished();
}

inline Matrix five_asset_covariance() {
  Matrix s(5, 5);
  s << 0.1536, 0.0788, 0.0075, 0.0284, 0.0460,  //
      0.0788, 0.1796, 0.0061, 0.0347, 0.0560,    //
      0.0075, 0.0061, 0.0407, 0.0035, 0.0070,    //
      0.0284, 0.0347, 0.0035, 0.1814, 0.0260,    //
      0.0460, 0.0560, 0.0070, 0.0260, 0.1281;
  return s;
}

inline MarketParams two_asset(double T = 5.0) {
  return MarketParams::from_covariance(kDepositRate, excess_returns(two_asset_mu(), kDepositRate),
                                       two_asset_covariance(), T);
}

inline MarketParams five_asset(double T = 5.0) {
  return MarketParams::from_covariance(kDepositRate, excess_returns(five_asset_mu(), kDepositRate),
                                       five_asset_covariance(), T);
}

}  // namespace sample_markets

}  // namespace infgame
