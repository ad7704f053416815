#pragma once

#define DRIFTGAUGE_VERSION "0.1.0"

#include "driftgauge/agents.hpp"
#include "driftgauge/diagnostics.hpp"
#include "driftgauge/error.hpp"
#include "driftgauge/estimator.hpp"
#include "driftgauge/filter.hpp"
#include "driftgauge/normal.hpp"
#include "driftgauge/probe.hpp"
#include "driftgauge/rng.hpp"
#include "driftgauge/serialize.hpp"
#include "driftgauge/trajectory.hpp"
