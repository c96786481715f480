#include <catch_amalgamated.hpp>

#include <cmath>

#include "infgame/infgame.hpp"

using namespace infgame;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// kappa by the explicit 2x2 cofactor inverse.
double kappa_2x2(const Matrix& S, const Vector& v) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double i00 = S(1, 1) / det, i11 = S(0, 0) / det, i01 = -S(0, 1) / det;
  return v(0) * v(0) * i00 + 2.0 * v(0) * v(1) * i01 + v(1) * v(1) * i11;
}

}  // namespace

TEST_CASE("kappa trivial cases", "[market]") {
  const Matrix S = sample_markets::five_asset_covariance();
  CHECK(compute_kappa(S, Vector::Zero(5)) == 0.0);
  const Vector nu = (Vector(3) << 0.3, -0.2, 0.7).finished();
  CHECK_THAT(compute_kappa(Matrix::Identity(3, 3), nu), WithinRel(nu.squaredNorm(), 1e-15));
}

TEST_CASE("kappa of the two-asset sample market", "[market]") {
  const Matrix S = sample_markets::two_asset_covariance();
  const Vector nu = excess_returns(sample_markets::two_asset_mu(), sample_markets::kDepositRate);
  const double expected = kappa_2x2(S, nu);
  CHECK_THAT(compute_kappa(S, nu), WithinRel(expected, 1e-13));
  CHECK_THAT(expected, WithinRel(4.07e-4, 5e-3));
  CHECK_THAT(sample_markets::two_asset().kappa(), WithinRel(expected, 1e-13));
}

TEST_CASE("kappa is even in nu and positive for nonzero nu", "[market]") {
  const Matrix S = sample_markets::five_asset_covariance();
  const Vector nu = excess_returns(sample_markets::five_asset_mu(), 0.0145);
  CHECK(compute_kappa(S, nu) == compute_kappa(S, -nu));
  CHECK(compute_kappa(S, nu) > 0.0);
}

TEST_CASE("kappa rejects bad covariance", "[market]") {
  Matrix S(2, 2);
  S << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(compute_kappa(S, Vector::Ones(2)), DomainError);
  CHECK_THROWS_AS(compute_kappa(Matrix::Identity(2, 2), Vector::Ones(3)), DimensionError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(compute_kappa(asym, Vector::Ones(2)), DomainError);
}

TEST_CASE("excess returns", "[market]") {
  const Vector mu = sample_markets::two_asset_mu();
  const Vector nu = excess_returns(mu, 0.0145);
  CHECK_THAT(nu(0), WithinAbs(0.0031, 1e-15));
  CHECK_THAT(nu(1), WithinAbs(0.0086, 1e-15));
  CHECK(excess_returns(mu, 0.0) == mu);
  CHECK(excess_returns(Vector::Constant(3, 0.02), 0.02).isZero(0.0));
}

TEST_CASE("market construction", "[market]") {
  const auto m = sample_markets::two_asset();
  CHECK(m.m() == 2);
  CHECK(m.T() == 5.0);
  CHECK((m.sigma() * m.sigma().transpose() - m.Sigma()).cwiseAbs().maxCoeff() < 1e-15);
  const auto v = MarketParams::from_volatility(0.01, Vector::Ones(2), 0.3 * Matrix::Identity(2, 2), 1.0);
  CHECK_THAT(v.Sigma()(0, 0), WithinRel(0.09, 1e-15));
  CHECK_THROWS_AS(MarketParams::from_covariance(0.01, Vector::Ones(2), Matrix::Identity(2, 2), 0.0),
                  DomainError);
  CHECK_THROWS_AS(MarketParams::from_covariance(0.01, Vector::Ones(3), Matrix::Identity(2, 2), 1.0),
                  DimensionError);
  CHECK(m.with_horizon(50.0).T() == 50.0);
}

TEST_CASE("GBM estimate of a constant series is zero", "[market]") {
  PricePanel p;
  p.prices = Matrix::Constant(10, 2, 3.5);
  const auto est = estimate_gbm(p);
  CHECK(est.mu.isZero(0.0));
  CHECK(est.Sigma.isZero(0.0));
}

TEST_CASE("GBM estimate rejects bad panels", "[market]") {
  PricePanel p;
  p.prices = Matrix::Constant(2, 2, 1.0);
  CHECK_THROWS_AS(estimate_gbm(p), DataError);
  p.prices = Matrix::Constant(5, 2, 1.0);
  p.prices(3, 1) = 0.0;
  CHECK_THROWS_AS(estimate_gbm(p), DataError);
  p.prices(3, 1) = -1.0;
  CHECK_THROWS_AS(estimate_gbm(p), DataError);
}

TEST_CASE("GBM estimate is invariant to price scale", "[market]") {
  auto panel = simulate_gbm_prices(sample_markets::two_asset_mu(),
                                   sample_markets::two_asset_covariance(), 1.0 / 252.0, 500, 7);
  const auto a = estimate_gbm(panel);
  panel.prices.col(1) *= 37.0;
  const auto b = estimate_gbm(panel);
  CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.Sigma - b.Sigma).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("GBM estimate recovers generator parameters", "[market]") {
  const Vector mu = (Vector(2) << 0.08, 0.03).finished();
  Matrix S(2, 2);
  S << 0.04, 0.012, 0.012, 0.09;
  const double dt = 1.0 / 252.0;
  const Index N = 1000000;
  const auto est = estimate_gbm(simulate_gbm_prices(mu, S, dt, N, 2024));
  const double horizon = static_cast<double>(N) * dt;
  for (Index a = 0; a < 2; ++a) {
    const double se_mu = std::sqrt(S(a, a) / horizon);
    CHECK(std::abs(est.mu(a) - mu(a)) < 3.0 * se_mu);
    for (Index b = 0; b < 2; ++b) {
      const double se = std::sqrt((S(a, a) * S(b, b) + S(a, b) * S(a, b)) / static_cast<double>(N));
      CHECK(std::abs(est.Sigma(a, b) - S(a, b)) < 3.0 * se);
    }
  }
}
