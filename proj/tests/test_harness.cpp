// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "doctest.h"

#include "lorentz/harness.hpp"
