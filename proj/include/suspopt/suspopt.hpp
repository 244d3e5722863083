#pragma once

#include "suspopt/errors.hpp"
#include "suspopt/rng.hpp"
#include "suspopt/io.hpp"
#include "suspopt/spectral.hpp"
#include "suspopt/characteristics.hpp"
#include "suspopt/vehicle.hpp"
#include "suspopt/road.hpp"
#include "suspopt/simulate.hpp"
#include "suspopt/weighting.hpp"
#include "suspopt/objectives.hpp"
#include "suspopt/optimizer.hpp"
#include "suspopt/analysis.hpp"
#include "suspopt/config.hpp"
#include "suspopt/scenario.hpp"
