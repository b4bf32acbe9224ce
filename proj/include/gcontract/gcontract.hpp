#pragma once

// Umbrella header.
#include "gcontract/analysis.hpp"
#include "gcontract/continuum.hpp"
#include "gcontract/finite.hpp"
#include "gcontract/graphon.hpp"
#include "gcontract/grid.hpp"
#include "gcontract/montecarlo.hpp"
#include "gcontract/parallel.hpp"
#include "gcontract/population.hpp"
#include "gcontract/profile.hpp"
#include "gcontract/random.hpp"
#include "gcontract/statistics.hpp"
