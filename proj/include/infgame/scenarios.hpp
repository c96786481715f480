#pragma once

#include <vector>

#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/strategy.hpp"

namespace infgame::scenarios {

/// Three agents with risk aversion 0.1, 0.2, 0.4 and unit initial wealth.
inline std::vector<AgentParams> three_agents(double theta = 0.0) {
  return {{0.1, theta, 1.0}, {0.2, theta, 1.0}, {0.4, theta, 1.0}};
}

/// Each agent splits its attention evenly between the other two.
inline InfluenceNetwork ring_of_three() {
  Matrix W(3, 3);
  W << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
  return InfluenceNetwork::validate(W);
}

/// Everyone, including agent 1, follows agent 1.
inline InfluenceNetwork follow_first(Index n = 3) { return InfluenceNetwork::leader(n, 0); }

}  // namespace infgame::scenarios
