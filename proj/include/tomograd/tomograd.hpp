#pragma once

// Umbrella header: the whole toolkit.

#include "tomograd/core.hpp"
#include "tomograd/fft.hpp"
#include "tomograd/filtering.hpp"
#include "tomograd/geometry.hpp"
#include "tomograd/graph.hpp"
#include "tomograd/image.hpp"
#include "tomograd/io.hpp"
#include "tomograd/phantom.hpp"
#include "tomograd/pipelines.hpp"
#include "tomograd/projector.hpp"
