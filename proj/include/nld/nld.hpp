#pragma once

// Numerical laboratory for nonlocal dispersal equations
//   du/dt = J*u - u + u^{1+p}        (growth)
//   du/dt = J*u - u + u^{1+p}(1-u)   (growth with saturation)
// on periodic boxes, with kernel classification via the small-frequency
// expansion hat J(xi) = 1 - A |xi|^beta + o(|xi|^beta) and the induced
// critical exponent p_F = beta/N.

#include "nld/config.hpp"
#include "nld/diagnostics.hpp"
#include "nld/grid.hpp"
#include "nld/io.hpp"
#include "nld/kernels.hpp"
#include "nld/quadrature.hpp"
#include "nld/semigroup.hpp"
#include "nld/solver.hpp"
#include "nld/sweep.hpp"
#include "nld/verify.hpp"
