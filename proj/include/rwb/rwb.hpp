#pragma once

#include "rwb/decompose.hpp"
#include "rwb/experiments.hpp"
#include "rwb/green.hpp"
#include "rwb/hitting.hpp"
#include "rwb/lattice.hpp"
#include "rwb/range.hpp"
#include "rwb/rng.hpp"
#include "rwb/site_map.hpp"
#include "rwb/stats.hpp"
#include "rwb/walk.hpp"
