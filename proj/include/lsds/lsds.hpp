#pragma once

// Umbrella header for the whole library.

#include "lsds/control/episode.hpp"
#include "lsds/control/pd.hpp"
#include "lsds/dataset.hpp"
#include "lsds/error.hpp"
#include "lsds/eval/cv.hpp"
#include "lsds/eval/metrics.hpp"
#include "lsds/features.hpp"
#include "lsds/field.hpp"
#include "lsds/learn/ensemble.hpp"
#include "lsds/learn/nn.hpp"
#include "lsds/learn/tree.hpp"
#include "lsds/model_io.hpp"
#include "lsds/parallel.hpp"
#include "lsds/rng.hpp"
#include "lsds/scene.hpp"
#include "lsds/sim/contact.hpp"
#include "lsds/sim/object.hpp"
#include "lsds/sim/scenarios.hpp"
#include "lsds/sim/sensor.hpp"
#include "lsds/sim/vertical.hpp"
