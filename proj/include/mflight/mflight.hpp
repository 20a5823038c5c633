#pragma once

// Umbrella header.

#include "mflight/aeroenv.hpp"
#include "mflight/agent.hpp"
#include "mflight/boundary_layer.hpp"
#include "mflight/checkpoint.hpp"
#include "mflight/config.hpp"
#include "mflight/ctl.hpp"
#include "mflight/error.hpp"
#include "mflight/geometry.hpp"
#include "mflight/io.hpp"
#include "mflight/linalg.hpp"
#include "mflight/mlp.hpp"
#include "mflight/orchestrator.hpp"
#include "mflight/panel.hpp"
#include "mflight/ppo.hpp"
#include "mflight/report.hpp"
#include "mflight/rng.hpp"
