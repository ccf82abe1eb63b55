// Umbrella header.

#pragma once

#include "cliff/angles.hpp"
#include "cliff/core.hpp"
#include "cliff/ingest.hpp"
#include "cliff/map.hpp"
#include "cliff/map_builder.hpp"
#include "cliff/map_io.hpp"
#include "cliff/metrics.hpp"
#include "cliff/predictor.hpp"
#include "cliff/rng.hpp"
#include "cliff/svg_render.hpp"
#include "cliff/trajectory.hpp"
