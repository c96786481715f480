#include <catch_amalgamated.hpp>

#include "infgame/infgame.hpp"

using namespace infgame;

namespace {

double worst_relative(const std::vector<StrategyCoeffs>& a, const std::vector<StrategyCoeffs>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    worst = std::max(worst, (a[j].c - b[j].c).norm() / a[j].c.norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("oracle recovers Merton for one agent", "[oracle]") {
  const auto market =
      MarketParams::from_covariance(0.02, Vector::Constant(1, 0.05), Matrix::Constant(1, 1, 0.04), 2.0);
  const std::vector<AgentParams> one{{0.5, 0.0, 1.0}};
  const auto res = oracle_best_response(market, one, InfluenceNetwork::homogeneous(1));
  CHECK(std::abs(res.coeffs[0].c(0) - 2.5) < 1e-4);
  CHECK(res.fit_residual < 1e-4);
}

TEST_CASE("oracle matches the solver for two scalar agents", "[oracle]") {
  const auto market =
      MarketParams::from_covariance(0.0145, Vector::Constant(1, 0.006), Matrix::Constant(1, 1, 0.13), 5.0);
  const auto W = InfluenceNetwork::random(2, 3, true);
  for (double theta : {1e-4, 1e-2}) {
    const std::vector<AgentParams> agents{{0.15, theta, 1.0}, {0.45, theta, 2.0}};
    SolverConfig cfg;
    cfg.eta_mode = EtaMode::closed_form;
    const auto sol = solve(market, agents, W, cfg);
    const auto orc = oracle_best_response(market, agents, W);
    CHECK(worst_relative(sol.coeffs, orc.coeffs) < 1e-4);
  }
}

TEST_CASE("oracle respects symmetry", "[oracle]") {
  const auto market = sample_markets::two_asset();
  const std::vector<AgentParams> agents(3, AgentParams{0.2, 1e-2, 1.0});
  const auto res = oracle_best_response(market, agents, scenarios::ring_of_three());
  CHECK((res.coeffs[0].c - res.coeffs[1].c).norm() < 1e-5);
  CHECK((res.coeffs[1].c - res.coeffs[2].c).norm() < 1e-5);
  CHECK((res.coeffs[0].c - rational_strategy(0.2, market).c).norm() < 1e-5);
}

TEST_CASE("oracle profile fit", "[oracle]") {
  const auto market = sample_markets::two_asset();
  const StrategyCoeffs c{(Vector(2) << 0.1, -0.4).finished()};
  double resid = 1.0;
  const auto fit = fit_profile(sample(c, market, 11), market, &resid);
  CHECK((fit.c - c.c).norm() < 1e-15);
  CHECK(resid < 1e-15);
  auto bent = sample(c, market, 11);
  bent.values(5, 0) += 0.01;
  fit_profile(bent, market, &resid);
  CHECK(resid > 1e-3);
}

TEST_CASE("oracle rejects bad settings", "[oracle]") {
  const auto market = sample_markets::two_asset();
  OracleConfig cfg;
  cfg.grid_size = 2;
  CHECK_THROWS_AS(oracle_best_response(market, scenarios::three_agents(), scenarios::ring_of_three(), cfg),
                  ConfigError);
  cfg = {};
  cfg.max_sweeps = 1;
  CHECK_THROWS_AS(
      oracle_best_response(market, scenarios::three_agents(1e-3), scenarios::ring_of_three(), cfg),
      OracleError);
}
