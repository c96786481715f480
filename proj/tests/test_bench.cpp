#include <catch_amalgamated.hpp>

#include <cmath>

#include "infgame/infgame.hpp"

using namespace infgame;
using Catch::Matchers::WithinRel;

TEST_CASE("relative error basics", "[bench]") {
  const std::vector<StrategyCoeffs> c{{Vector::Constant(2, 1.0)}, {(Vector(2) << 0.2, -3.0).finished()}};
  CHECK(relative_error(c, c) == 0.0);
  std::vector<StrategyCoeffs> twice = c;
  for (auto& s : twice) s.c *= 2.0;
  CHECK_THAT(relative_error(c, twice), WithinRel(1.0, 1e-15));
  const std::vector<StrategyCoeffs> zero{{Vector::Zero(2)}, {Vector::Zero(2)}};
  CHECK_THROWS_AS(relative_error(zero, c), DomainError);
}

TEST_CASE("coefficient relative error equals the L2 form", "[bench]") {
  const auto market = sample_markets::five_asset();
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  std::vector<StrategyCoeffs> a(4), b(4);
  for (std::size_t j = 0; j < 4; ++j) {
    a[j].c = Vector::NullaryExpr(5, [&] { return z(gen); });
    b[j].c = a[j].c + 0.1 * Vector::NullaryExpr(5, [&] { return z(gen); });
  }
  double l2 = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    auto norm2 = [&](const StrategyCoeffs& s) {
      return quadrature::integrate_adaptive(
          [&](double t) { return evaluate(s, t, market).squaredNorm(); }, 0.0, market.T(), 1e-14,
          1e-14);
    };
    l2 += norm2({a[j].c - b[j].c}) / norm2(a[j]);
  }
  l2 /= 4.0;
  CHECK_THAT(relative_error(a, b, market), WithinRel(l2, 1e-10));
  CHECK_THROWS_AS(relative_error(a, b, sample_markets::two_asset()), DimensionError);
}

TEST_CASE("benchmark sweep", "[bench]") {
  BenchSpec spec;
  spec.n_values = {10};
  spec.theta_ranges = {{"1e-10..2e-10", 1e-10, 2e-10}, {"1e-8..2e-8", 1e-8, 2e-8}};
  spec.delta_u_values = {1e-3, 1e-1};
  spec.repeats = 1;
  const auto market = sample_markets::five_asset();
  const auto rows = run_benchmark(spec, market);
  CHECK(rows.size() == 2 * 7);
  double uhat_small = -1, uhat_large = -1;
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    CHECK(r.relative_error >= 0.0);
    CHECK(r.time_s > 0.0);
    if (r.variant == "Base") CHECK(r.relative_error == 0.0);
    if (r.variant == "Base+Uhat") (r.theta_range == "1e-10..2e-10" ? uhat_small : uhat_large) = r.relative_error;
  }
  CHECK(uhat_small <= uhat_large);

  const auto again = run_benchmark(spec, market);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].relative_error == again[i].relative_error);

  const auto csv = bench_csv(rows);
  CHECK(csv.rfind("n,variant,theta_range,delta_u,re,time_s\n", 0) == 0);
  CHECK(bench_markdown(rows).find("| n | variant") == 0);
}

TEST_CASE("benchmark spec validation", "[bench]") {
  BenchSpec spec;
  spec.variants = {"Nope"};
  CHECK_THROWS_AS(run_benchmark(spec, sample_markets::five_asset()), ConfigError);
  spec = {};
  spec.n_values.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.theta_ranges = {{"bad", 2.0, 1.0}};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("scenario sweep", "[bench]") {
  const auto market = sample_markets::two_asset();
  const std::vector<double> thetas{0.0, 1e-5, 1e-4};
  const auto sweep = scenario_sweep(thetas, market, scenarios::three_agents(), scenarios::ring_of_three());
  REQUIRE(sweep.solutions.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto r = rational_strategy(scenarios::three_agents()[j].alpha, market);
    CHECK((sweep.solutions[0].coeffs[j].c - r.c).norm() < 1e-15);
  }
  CHECK(sweep.limit.alpha_tilde > 0.19);
}

TEST_CASE("leader network pulls everyone to agent 1", "[bench]") {
  const auto market = sample_markets::two_asset();
  const std::vector<double> thetas{1.0, 100.0};
  const auto sweep = scenario_sweep(thetas, market, scenarios::three_agents(), scenarios::follow_first());
  const Vector leader = rational_strategy(0.1, market).c;
  for (const auto& c : sweep.solutions.back().coeffs) CHECK((c.c - leader).norm() / leader.norm() < 1e-3);
}
