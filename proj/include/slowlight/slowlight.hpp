#pragma once

// Everything at once.

#include "background.hpp"
#include "darboux.hpp"
#include "errors.hpp"
#include "field_map.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "ode.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "runner.hpp"
#include "scattering.hpp"
#include "scenario.hpp"
#include "special_functions.hpp"
#include "verification.hpp"
