// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spvr/config.hpp"
#include "spvr/duration_opt.hpp"
#include "spvr/link_model.hpp"
#include "spvr/predictors.hpp"
#include "spvr/privacy_mask.hpp"
#include "spvr/qoe_eval.hpp"
#include "spvr/sweep.hpp"
#include "spvr/tile_geometry.hpp"
#include "spvr/tile_set.hpp"
#include "spvr/trace_io.hpp"
#include "spvr/training.hpp"
