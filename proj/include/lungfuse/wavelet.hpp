#pragma once

#include "lungfuse/wavelet/dump.hpp"
#include "lungfuse/wavelet/dwt2.hpp"
#include "lungfuse/wavelet/filters.hpp"
