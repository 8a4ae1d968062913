#pragma once

#include "difftomo/error.hpp"
#include "difftomo/evaluation.hpp"
#include "difftomo/format.hpp"
#include "difftomo/measurement.hpp"
#include "difftomo/rng.hpp"
#include "difftomo/sparse_solver.hpp"
#include "difftomo/tomo_matrix.hpp"
#include "difftomo/topology.hpp"
