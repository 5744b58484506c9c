#pragma once

// Umbrella header for the driftval library.

#include "driftval/charts.hpp"
#include "driftval/csv.hpp"
#include "driftval/dataset.hpp"
#include "driftval/density.hpp"
#include "driftval/distribution.hpp"
#include "driftval/drift_path.hpp"
#include "driftval/ingest.hpp"
#include "driftval/learning_curve.hpp"
#include "driftval/numeric.hpp"
#include "driftval/offload.hpp"
#include "driftval/parallel.hpp"
#include "driftval/rng.hpp"
#include "driftval/substitution.hpp"
