// Three investors who watch each other: how far does each one drift from
// their own Merton portfolio as the influence coefficient grows?

#include <iomanip>
#include <iostream>

#include "infgame/infgame.hpp"

int main() {
  using namespace infgame;
  const auto market = sample_markets::two_asset();
  const auto network = scenarios::ring_of_three();
  const auto limit = asymptotic_limit(market, scenarios::three_agents(), network);

  std::cout << std::setprecision(5);
  std::cout << "asymptotic risk aversion " << limit.alpha_tilde << ", common strategy ["
            << limit.coeffs.c.transpose() << "]\n\n";

  for (double theta : {0.0, 1e-5, 1e-4, 1e-2, 1.0}) {
    const auto agents = scenarios::three_agents(theta);
    const auto sol = solve(market, agents, network);
    std::cout << "theta = " << theta << " (" << sol.iters << " iterations)\n";
    for (std::size_t j = 0; j < agents.size(); ++j) {
      const auto rational = rational_strategy(agents[j].alpha, market);
      const double gap = (sol.coeffs[j].c - limit.coeffs.c).norm() / limit.coeffs.c.norm();
      std::cout << "  agent " << j + 1 << ": c = [" << sol.coeffs[j].c.transpose()
                << "]  rational [" << rational.c.transpose() << "]  gap to limit " << gap << '\n';
    }
  }
}
