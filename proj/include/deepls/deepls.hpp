#pragma once

#include "deepls/analytic.hpp"
#include "deepls/benchmarks.hpp"
#include "deepls/config.hpp"
#include "deepls/errors.hpp"
#include "deepls/geometry.hpp"
#include "deepls/loss.hpp"
#include "deepls/network.hpp"
#include "deepls/optimize.hpp"
#include "deepls/problem.hpp"
#include "deepls/transform.hpp"
#include "deepls/types.hpp"
#include "deepls/verify.hpp"
