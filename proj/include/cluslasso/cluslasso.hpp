#pragma once

#include "cluslasso/clustering.hpp"
#include "cluslasso/cross_validation.hpp"
#include "cluslasso/group_lasso.hpp"
#include "cluslasso/lasso.hpp"
#include "cluslasso/linalg.hpp"
#include "cluslasso/penalty_levels.hpp"
#include "cluslasso/pipelines.hpp"
#include "cluslasso/rng.hpp"
#include "cluslasso/simulation.hpp"
#include "cluslasso/theory.hpp"
