#pragma once

#include "opgeom/expr.hpp"
#include "opgeom/smallmat.hpp"
#include "opgeom/fields.hpp"
#include "opgeom/geometry.hpp"
#include "opgeom/operator_core.hpp"
#include "opgeom/gauge.hpp"
#include "opgeom/dirac.hpp"
#include "opgeom/harness.hpp"
