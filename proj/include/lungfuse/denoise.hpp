#pragma once

#include "lungfuse/denoise/net.hpp"
#include "lungfuse/denoise/train.hpp"
#include "lungfuse/denoise/weights_io.hpp"
