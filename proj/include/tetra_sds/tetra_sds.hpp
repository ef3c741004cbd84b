#pragma once

#include "tetra_sds/bs_mac.hpp"
#include "tetra_sds/channel.hpp"
#include "tetra_sds/config.hpp"
#include "tetra_sds/engine.hpp"
#include "tetra_sds/error.hpp"
#include "tetra_sds/metrics.hpp"
#include "tetra_sds/ms_mac.hpp"
#include "tetra_sds/rng.hpp"
#include "tetra_sds/sweep.hpp"
#include "tetra_sds/tdma.hpp"
#include "tetra_sds/traffic.hpp"
