#pragma once

// Umbrella header for the shufflesum library: differentially private
// summation over an imperfect shuffler, with exact and Monte Carlo
// verification of the security bounds.

#include "shufflesum/analysis.hpp"
#include "shufflesum/errors.hpp"
#include "shufflesum/field.hpp"
#include "shufflesum/graph.hpp"
#include "shufflesum/noise.hpp"
#include "shufflesum/parallel.hpp"
#include "shufflesum/permutation.hpp"
#include "shufflesum/protocol.hpp"
#include "shufflesum/rng.hpp"
#include "shufflesum/shuffler.hpp"
#include "shufflesum/stats.hpp"
#include "shufflesum/version.hpp"
