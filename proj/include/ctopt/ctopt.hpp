#pragma once

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/characteristic.hpp"
#include "ctopt/csv.hpp"
#include "ctopt/errors.hpp"
#include "ctopt/experiment.hpp"
#include "ctopt/integrator.hpp"
#include "ctopt/polynomial.hpp"
#include "ctopt/rate_estimation.hpp"
#include "ctopt/stability.hpp"
#include "ctopt/test_functions.hpp"
#include "ctopt/vector_field.hpp"
