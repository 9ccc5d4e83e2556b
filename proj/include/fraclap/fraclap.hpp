#pragma once

// Fractional p-Laplacians on finite metric measure spaces via weighted
// extension domains: build the domain, solve the Dirichlet/Neumann
// problems by convex minimization, and read the nonlocal operator off
// the boundary flux.

#include "fraclap/boundary_data.hpp"
#include "fraclap/cheeger.hpp"
#include "fraclap/error.hpp"
#include "fraclap/extension.hpp"
#include "fraclap/io.hpp"
#include "fraclap/nonlocal.hpp"
#include "fraclap/params.hpp"
#include "fraclap/rng.hpp"
#include "fraclap/solve.hpp"
#include "fraclap/space.hpp"
#include "fraclap/verify.hpp"
