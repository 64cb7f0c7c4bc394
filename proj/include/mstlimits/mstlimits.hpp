#pragma once

#include "mstlimits/error.hpp"
#include "mstlimits/random.hpp"
#include "mstlimits/parallel.hpp"
#include "mstlimits/special.hpp"
#include "mstlimits/spectral.hpp"
#include "mstlimits/stats.hpp"
#include "mstlimits/treesim.hpp"
#include "mstlimits/fixpoint.hpp"
#include "mstlimits/cascade.hpp"
#include "mstlimits/moments.hpp"
#include "mstlimits/analysis.hpp"
#include "mstlimits/io.hpp"
