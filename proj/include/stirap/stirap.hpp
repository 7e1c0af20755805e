#pragma once

#include "stirap/config.hpp"
#include "stirap/csv.hpp"
#include "stirap/dynamics.hpp"
#include "stirap/expm.hpp"
#include "stirap/hilbert.hpp"
#include "stirap/observables.hpp"
#include "stirap/propagator.hpp"
#include "stirap/sweep.hpp"
#include "stirap/version.hpp"
