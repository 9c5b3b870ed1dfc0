#pragma once

#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/imgcore/intensity.hpp"
#include "lungfuse/imgcore/lung_mask.hpp"
#include "lungfuse/imgcore/pgm.hpp"
#include "lungfuse/imgcore/volume.hpp"
