#pragma once

// Umbrella header for the solver library.

#include "lswe/diagnostics.hpp"
#include "lswe/errors.hpp"
#include "lswe/grid.hpp"
#include "lswe/homogeneous.hpp"
#include "lswe/kernels.hpp"
#include "lswe/params.hpp"
#include "lswe/profile.hpp"
#include "lswe/solver.hpp"
