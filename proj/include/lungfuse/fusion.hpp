#pragma once

#include "lungfuse/fusion/fuse.hpp"
#include "lungfuse/fusion/quality.hpp"
#include "lungfuse/fusion/register.hpp"
#include "lungfuse/fusion/rigid.hpp"
