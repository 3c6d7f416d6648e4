#pragma once

// Umbrella header for the library (the CLI lives in v2g/cli.hpp).

#include "v2g/case_study.hpp"
#include "v2g/closed_form.hpp"
#include "v2g/dayahead_lp.hpp"
#include "v2g/fleet_model.hpp"
#include "v2g/io.hpp"
#include "v2g/lp_problem.hpp"
#include "v2g/random.hpp"
#include "v2g/scenario_sim.hpp"
#include "v2g/simplex.hpp"
