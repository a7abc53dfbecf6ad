// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include "platoonsim/campaign.hpp"
#include "platoonsim/channel.hpp"
#include "platoonsim/config.hpp"
#include "platoonsim/engine.hpp"
#include "platoonsim/ift_routing.hpp"
#include "platoonsim/metrics.hpp"
#include "platoonsim/mobility.hpp"
#include "platoonsim/radio.hpp"
#include "platoonsim/rng.hpp"
#include "platoonsim/scheduler.hpp"
#include "platoonsim/types.hpp"
