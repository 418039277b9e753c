#pragma once

#include "linids/baselines.hpp"
#include "linids/core.hpp"
#include "linids/errors.hpp"
#include "linids/estimator.hpp"
#include "linids/ids.hpp"
#include "linids/lowerbound.hpp"
#include "linids/rng.hpp"
