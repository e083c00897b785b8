#pragma once

#include "stairmod/augment.hpp"
#include "stairmod/core.hpp"
#include "stairmod/dataset_io.hpp"
#include "stairmod/error.hpp"
#include "stairmod/loss.hpp"
#include "stairmod/metrics.hpp"
#include "stairmod/modeling.hpp"
#include "stairmod/synthgen.hpp"

namespace stairmod {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stairmod
