#pragma once

#include "l1o/common.hpp"
#include "l1o/regularizers.hpp"
#include "l1o/nn.hpp"
#include "l1o/dtree.hpp"
#include "l1o/metrics.hpp"
#include "l1o/data.hpp"
#include "l1o/extraction.hpp"
#include "l1o/harness.hpp"
