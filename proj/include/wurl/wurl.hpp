#pragma once

// Umbrella header; each component header can also be included on its own.

#include "wurl/batch.hpp"
#include "wurl/common.hpp"
#include "wurl/config.hpp"
#include "wurl/env.hpp"
#include "wurl/eval.hpp"
#include "wurl/gradcheck.hpp"
#include "wurl/hrl.hpp"
#include "wurl/io.hpp"
#include "wurl/matrix.hpp"
#include "wurl/nn.hpp"
#include "wurl/ot_dual.hpp"
#include "wurl/ot_primal.hpp"
#include "wurl/replay.hpp"
#include "wurl/rng.hpp"
#include "wurl/runner.hpp"
#include "wurl/sac.hpp"
#include "wurl/train.hpp"
