#pragma once

// Umbrella header for the streaming sketch + ridge regression library.

#include "fdridge/types.hpp"
#include "fdridge/rng.hpp"
#include "fdridge/linalg.hpp"
#include "fdridge/matrix_io.hpp"
#include "fdridge/fd_sketch.hpp"
#include "fdridge/ridge.hpp"
#include "fdridge/risk.hpp"
#include "fdridge/baselines.hpp"
#include "fdridge/sketch_io.hpp"
#include "fdridge/datagen.hpp"
#include "fdridge/experiment.hpp"
#include "fdridge/verify.hpp"
