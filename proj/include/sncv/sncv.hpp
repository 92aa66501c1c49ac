#pragma once

#include "sncv/cv.hpp"
#include "sncv/distribution.hpp"
#include "sncv/errors.hpp"
#include "sncv/estimation.hpp"
#include "sncv/kmeans.hpp"
#include "sncv/normal.hpp"
#include "sncv/pem.hpp"
#include "sncv/penalty.hpp"
#include "sncv/pipeline.hpp"
#include "sncv/rng.hpp"
#include "sncv/sim.hpp"
