#pragma once

#include "somd/atomic_norms.hpp"
#include "somd/core.hpp"
#include "somd/loss_spaces.hpp"
#include "somd/lowrank_geometry.hpp"
#include "somd/omd.hpp"
#include "somd/random.hpp"
#include "somd/regularizers.hpp"
#include "somd/simplex_solvers.hpp"
