#pragma once

#include "lungfuse/tabular/boost.hpp"
#include "lungfuse/tabular/dataset.hpp"
#include "lungfuse/tabular/preprocess.hpp"
#include "lungfuse/tabular/smote.hpp"
