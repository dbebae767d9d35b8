#pragma once

#include "moprox/convexprog/polyhedron.hpp"
#include "moprox/convexprog/qp.hpp"
#include "moprox/convexprog/solution.hpp"
