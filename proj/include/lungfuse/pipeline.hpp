#pragma once

#include "lungfuse/pipeline/config.hpp"
#include "lungfuse/pipeline/run.hpp"
#include "lungfuse/pipeline/store.hpp"
