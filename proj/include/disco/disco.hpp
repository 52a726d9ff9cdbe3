#pragma once

// Umbrella header for the distributional synthetic controls library.

#include "disco/aggregation.hpp"
#include "disco/config.hpp"
#include "disco/csv.hpp"
#include "disco/distributions.hpp"
#include "disco/error.hpp"
#include "disco/estimator.hpp"
#include "disco/inference.hpp"
#include "disco/output.hpp"
#include "disco/panel.hpp"
#include "disco/solvers.hpp"
