#pragma once

// Umbrella header: quantum evolution on weighted graphs via the dimerized
// edge decomposition, verified against a direct spectral propagator.

#include "dimflow/charts.hpp"
#include "dimflow/common.hpp"
#include "dimflow/decomposition.hpp"
#include "dimflow/efficiency.hpp"
#include "dimflow/graph.hpp"
#include "dimflow/io.hpp"
#include "dimflow/modes.hpp"
#include "dimflow/spectral.hpp"
#include "dimflow/verify.hpp"
