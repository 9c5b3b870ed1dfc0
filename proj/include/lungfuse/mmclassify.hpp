#pragma once

#include "lungfuse/mmclassify/compare.hpp"
#include "lungfuse/mmclassify/features.hpp"
#include "lungfuse/mmclassify/kfold.hpp"
#include "lungfuse/mmclassify/logreg.hpp"
#include "lungfuse/mmclassify/metrics.hpp"
#include "lungfuse/mmclassify/mlp.hpp"
