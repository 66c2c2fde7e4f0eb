#pragma once

// Umbrella header. The remote-backend client (remote.hpp) is excluded so
// library users do not pay for the HTTP dependency unless they ask for it.

#include "aoi_sim/aoi.hpp"
#include "aoi_sim/channel.hpp"
#include "aoi_sim/config.hpp"
#include "aoi_sim/harness.hpp"
#include "aoi_sim/image.hpp"
#include "aoi_sim/metrics.hpp"
#include "aoi_sim/nn.hpp"
#include "aoi_sim/policy.hpp"
#include "aoi_sim/rng.hpp"
#include "aoi_sim/scene.hpp"
#include "aoi_sim/simulator.hpp"
#include "aoi_sim/sources.hpp"
