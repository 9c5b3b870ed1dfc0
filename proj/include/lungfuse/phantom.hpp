#pragma once

#include "lungfuse/phantom/describe.hpp"
#include "lungfuse/phantom/generator.hpp"
