#pragma once

// Off-policy return-distribution estimation: importance-sampled CDF
// estimates, guaranteed confidence bands, simultaneous parameter bounds,
// bootstrap intervals, and non-stationary forecasts.

#include "offdist/band.hpp"
#include "offdist/bootstrap.hpp"
#include "offdist/concentration.hpp"
#include "offdist/envs.hpp"
#include "offdist/estimators.hpp"
#include "offdist/nonstat.hpp"
#include "offdist/numerics.hpp"
#include "offdist/oracle.hpp"
#include "offdist/parallel.hpp"
#include "offdist/param_bounds.hpp"
#include "offdist/parameters.hpp"
#include "offdist/return_data.hpp"
#include "offdist/rng.hpp"
#include "offdist/step_cdf.hpp"
