#pragma once

// Umbrella header: the full simulation + control stack.

#include "trq/allocation.hpp"
#include "trq/config.hpp"
#include "trq/csv.hpp"
#include "trq/dynamics.hpp"
#include "trq/eso.hpp"
#include "trq/faults.hpp"
#include "trq/metrics.hpp"
#include "trq/model.hpp"
#include "trq/nmpc.hpp"
#include "trq/ocp.hpp"
#include "trq/scenario.hpp"
#include "trq/trajectory.hpp"
#include "trq/types.hpp"
#include "trq/version.hpp"
