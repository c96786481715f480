#pragma once

#include "infgame/errors.hpp"
#include "infgame/market.hpp"
#include "infgame/network.hpp"
#include "infgame/quadrature.hpp"
#include "infgame/strategy.hpp"
#include "infgame/parallel.hpp"
#include "infgame/solver.hpp"
#include "infgame/oracle.hpp"
#include "infgame/asymptotics.hpp"
#include "infgame/montecarlo.hpp"
#include "infgame/bench.hpp"
#include "infgame/scenarios.hpp"
