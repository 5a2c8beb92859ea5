#pragma once

#include "heatmorse/error.hpp"
#include "heatmorse/manifold.hpp"
#include "heatmorse/torus.hpp"
#include "heatmorse/sphere.hpp"
#include "heatmorse/field.hpp"
#include "heatmorse/field_io.hpp"
#include "heatmorse/sampling.hpp"
#include "heatmorse/parallel.hpp"
#include "heatmorse/jet.hpp"
#include "heatmorse/defaults.hpp"
#include "heatmorse/heat_flow.hpp"
#include "heatmorse/morse.hpp"
#include "heatmorse/experiments.hpp"
#include "heatmorse/plots.hpp"
