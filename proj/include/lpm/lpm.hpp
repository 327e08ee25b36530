#pragma once

// Umbrella header for the linear position measurement library.

#include "lpm/distributions.hpp"
#include "lpm/dynamics.hpp"
#include "lpm/gaussian.hpp"
#include "lpm/measurement.hpp"
#include "lpm/normal_stream.hpp"
#include "lpm/optimal.hpp"
#include "lpm/oracle.hpp"
#include "lpm/quadrature.hpp"
