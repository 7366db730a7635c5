#pragma once

// Umbrella header.
#include "hmv/allocator.hpp"
#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/fitness.hpp"
#include "hmv/io.hpp"
#include "hmv/portfolio.hpp"
#include "hmv/rng.hpp"
#include "hmv/schur.hpp"
#include "hmv/seriation.hpp"
#include "hmv/shrinkage.hpp"
#include "hmv/sim.hpp"
#include "hmv/svg.hpp"
