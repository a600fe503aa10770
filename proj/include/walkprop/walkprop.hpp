#pragma once

// Umbrella header for the walkprop library.

#include "walkprop/attribution_io.hpp"
#include "walkprop/ba2motif.hpp"
#include "walkprop/bench.hpp"
#include "walkprop/dataset_io.hpp"
#include "walkprop/errors.hpp"
#include "walkprop/forward_hook.hpp"
#include "walkprop/graph.hpp"
#include "walkprop/lrp.hpp"
#include "walkprop/matrix.hpp"
#include "walkprop/model.hpp"
#include "walkprop/model_io.hpp"
#include "walkprop/ordering.hpp"
#include "walkprop/rng.hpp"
#include "walkprop/tape.hpp"
#include "walkprop/train.hpp"
#include "walkprop/tu_format.hpp"
