#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "infgame/infgame.hpp"

using namespace infgame;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("moment estimates by hand", "[montecarlo]") {
  const std::vector<double> two{0.0, 2.0};
  const auto e = estimate_moments(two);
  CHECK(e.mean == 1.0);
  CHECK(e.variance == 2.0);
  const std::vector<double> flat(10, 3.0);
  CHECK(estimate_moments(flat).variance == 0.0);
  CHECK_THROWS_AS(estimate_moments(std::vector<double>{1.0}), DataError);
}

TEST_CASE("moment estimates of standard normal draws", "[montecarlo]") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> z;
  std::vector<double> x(1000000);
  for (auto& v : x) v = z(gen);
  const auto e = estimate_moments(x);
  CHECK(std::abs(e.mean) < 4.0 / 1000.0);
  CHECK(std::abs(e.variance - 1.0) < 4.0 * e.stderr_var);
  CHECK_THAT(e.stderr_var, WithinRel(std::sqrt(2.0 / 1e6), 0.02));
  CHECK(std::abs(e.skewness) < 4.0 * e.stderr_skewness);
  CHECK(std::abs(e.excess_kurtosis) < 4.0 * e.stderr_kurtosis);
}

TEST_CASE("riskless simulation", "[montecarlo]") {
  const auto market = sample_markets::two_asset();
  const std::vector<StrategyCoeffs> zero{{Vector::Zero(2)}};
  const std::vector<AgentParams> agent{{0.2, 0.0, 1.0}};
  SimConfig cfg;
  cfg.paths = 50;
  cfg.dt = 1e-3;
  const auto res = simulate(zero, agent, market, cfg);
  CHECK_THAT(res.moments[0].mean, WithinRel(std::exp(market.r() * market.T()), 1e-6));
  CHECK(res.moments[0].variance == 0.0);
}

TEST_CASE("zero volatility gives deterministic wealth", "[montecarlo]") {
  const auto base = sample_markets::two_asset();
  const auto market = MarketParams::from_volatility(base.r(), base.nu(), 1e-12 * Matrix::Identity(2, 2), 5.0);
  const std::vector<StrategyCoeffs> s{{(Vector(2) << 0.3, 0.5).finished()}};
  const std::vector<AgentParams> agent{{0.2, 0.0, 2.0}};
  SimConfig cfg;
  cfg.paths = 20;
  const auto res = simulate(s, agent, market, cfg);
  const auto d = terminal_wealth_dist(s[0], 2.0, market);
  CHECK(res.moments[0].variance < 1e-20);
  CHECK_THAT(res.moments[0].mean, WithinRel(d.mean, 1e-4));
}

TEST_CASE("simulated rational wealth matches the normal law", "[montecarlo]") {
  const auto market = sample_markets::two_asset();
  const std::vector<AgentParams> agent{{0.2, 0.0, 1.0}};
  const std::vector<StrategyCoeffs> s{rational_strategy(0.2, market)};
  SimConfig cfg;
  cfg.paths = 20000;
  cfg.seed = 3;
  const auto res = simulate(s, agent, market, cfg);
  const auto d = terminal_wealth_dist(s[0], 1.0, market);
  const auto& e = res.moments[0];
  CHECK(std::abs(e.mean - d.mean) < 4.0 * e.stderr_mean);
  CHECK(std::abs(e.variance - d.variance) < 4.0 * e.stderr_var);
  CHECK(std::abs(e.skewness) < 4.0 * e.stderr_skewness);
  CHECK(std::abs(e.excess_kurtosis) < 4.0 * e.stderr_kurtosis);
}

TEST_CASE("simulation is reproducible and thread independent", "[montecarlo]") {
  const auto market = sample_markets::two_asset();
  const auto agents = scenarios::three_agents();
  std::vector<StrategyCoeffs> s;
  for (const auto& a : agents) s.push_back(rational_strategy(a.alpha, market));
  SimConfig cfg;
  cfg.paths = 2000;
  cfg.seed = 99;
  cfg.keep_samples = true;
  const auto a = simulate(s, agents, market, cfg);
  cfg.threads = 3;
  const auto b = simulate(s, agents, market, cfg);
  CHECK(a.samples == b.samples);
  cfg.seed = 100;
  CHECK(simulate(s, agents, market, cfg).samples != a.samples);
}

TEST_CASE("agents with identical inputs share paths", "[montecarlo]") {
  const auto market = sample_markets::two_asset();
  const std::vector<AgentParams> agents{{0.2, 0.0, 1.0}, {0.2, 0.0, 1.0}};
  const std::vector<StrategyCoeffs> s(2, rational_strategy(0.2, market));
  SimConfig cfg;
  cfg.paths = 100;
  cfg.keep_samples = true;
  const auto res = simulate(s, agents, market, cfg);
  CHECK(res.samples.col(0) == res.samples.col(1));
}

TEST_CASE("simulation config validation", "[montecarlo]") {
  SimConfig cfg;
  cfg.paths = 0;
  CHECK_THROWS_AS(cfg.steps(5.0), ConfigError);
  cfg.paths = 10;
  cfg.dt = 0.3;
  CHECK_THROWS_AS(cfg.steps(5.0), ConfigError);
  cfg.dt = 6.0;
  CHECK_THROWS_AS(cfg.steps(5.0), ConfigError);
  cfg.dt = 0.0;
  CHECK(cfg.steps(5.0) == 1000);
  cfg.dt = 0.5;
  CHECK(cfg.steps(5.0) == 10);
}
