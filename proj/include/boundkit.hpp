#pragma once

#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/potential.hpp"
#include "boundkit/dopri5.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/eigensolve.hpp"
#include "boundkit/decompose.hpp"
#include "boundkit/inequalities.hpp"
#include "boundkit/sparse.hpp"
#include "boundkit/scattering.hpp"
#include "boundkit/io.hpp"
