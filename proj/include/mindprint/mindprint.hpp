#pragma once

// Umbrella header for the full measurement engine.

#include "mindprint/administer.hpp"
#include "mindprint/agent.hpp"
#include "mindprint/battery.hpp"
#include "mindprint/behavior.hpp"
#include "mindprint/calibration.hpp"
#include "mindprint/canonical_json.hpp"
#include "mindprint/errors.hpp"
#include "mindprint/estimates.hpp"
#include "mindprint/grounding.hpp"
#include "mindprint/irt.hpp"
#include "mindprint/neldermead.hpp"
#include "mindprint/perturb.hpp"
#include "mindprint/profile.hpp"
#include "mindprint/rng.hpp"
#include "mindprint/runlog.hpp"
#include "mindprint/sdt.hpp"
#include "mindprint/sha256.hpp"
#include "mindprint/stats.hpp"
#include "mindprint/trustgate.hpp"
