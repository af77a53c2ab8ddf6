#pragma once

#include "citelab/aging.hpp"
#include "citelab/error.hpp"
#include "citelab/fit.hpp"
#include "citelab/io.hpp"
#include "citelab/model.hpp"
#include "citelab/ode.hpp"
#include "citelab/rng.hpp"
#include "citelab/sim.hpp"
#include "citelab/stats.hpp"
