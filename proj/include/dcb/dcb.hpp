#pragma once

// Umbrella header for the channel bonding study library.

#include "dcb/channels.hpp"
#include "dcb/ctmn.hpp"
#include "dcb/errors.hpp"
#include "dcb/phy.hpp"
#include "dcb/rng.hpp"
#include "dcb/scenario.hpp"
#include "dcb/sim.hpp"
#include "dcb/sweep.hpp"
