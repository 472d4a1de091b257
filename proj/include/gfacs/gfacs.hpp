#pragma once

#include "gfacs/aco.hpp"
#include "gfacs/construct.hpp"
#include "gfacs/errors.hpp"
#include "gfacs/experiment.hpp"
#include "gfacs/gfn_train.hpp"
#include "gfacs/heatmap.hpp"
#include "gfacs/io.hpp"
#include "gfacs/local_search.hpp"
#include "gfacs/matrix.hpp"
#include "gfacs/metrics.hpp"
#include "gfacs/parallel.hpp"
#include "gfacs/problems.hpp"
#include "gfacs/rng.hpp"
